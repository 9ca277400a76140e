#include "shellforge/server/repository.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "shellforge/classify/classify.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/model/validate.hpp"
#include "shellforge/util/codec.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::server {

namespace fs = std::filesystem;
using nlohmann::json;

std::string now_iso8601() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(ms.count()));
  return buf;
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::NotAProperty: return 422;
    case ErrorCode::UnboundOperation: return 422;
    case ErrorCode::TypeMismatch: return 400;
    case ErrorCode::SchemaMismatch: return 400;
    case ErrorCode::SchemaViolation: return 400;
    case ErrorCode::MalformedArchive: return 400;
    case ErrorCode::ChecksumMismatch: return 400;
    case ErrorCode::InvalidQuery: return 400;
    case ErrorCode::ModelImmutable: return 405;
    case ErrorCode::DuplicateId: return 409;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::DelegationFailed: return 502;
    case ErrorCode::ResourceExceeded: return 504;
    case ErrorCode::FeatureUnavailable: return 501;
    default: return 500;
  }
}

namespace {

json error_body(const Error& e) {
  return json{{"error", {{"code", std::string(error_code_name(e.code()))},
                         {"message", e.detail()}}}};
}

json scalar_to_json(const model::ScalarValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

model::ScalarValue scalar_from_patch(const json& value, model::ValueType t) {
  switch (t) {
    case model::ValueType::Double:
      if (value.is_number()) return value.get<double>();
      break;
    case model::ValueType::Int64:
      if (value.is_number_integer()) return value.get<int64_t>();
      break;
    case model::ValueType::String:
      if (value.is_string()) return value.get<std::string>();
      break;
    case model::ValueType::Bool:
      if (value.is_boolean()) return value.get<bool>();
      break;
  }
  throw Error(ErrorCode::TypeMismatch,
              "value does not parse as " +
                  std::string(model::value_type_name(t)));
}

model::Property* find_property_mut(model::AasPackage& pkg,
                                   const model::Identifier& shell_id,
                                   const std::string& path) {
  const model::SubmodelElement& found =
      model::resolve_element(pkg, shell_id, path);
  // resolve_element hands back a const ref into pkg; recover mutability
  // through the owning package (same object, held under the write lock).
  auto* element = const_cast<model::SubmodelElement*>(&found);
  return std::get_if<model::Property>(element);
}

}  // namespace

Repository::Repository(RepoConfig cfg)
    : cfg_(std::move(cfg)),
      engine_(engine::EngineConfig{cfg_.work_dir}),
      events_(cfg_.event_attempts, cfg_.event_backoff_ms) {
  sandbox_caps_ = engine::probe_sandbox();
  events_.start();
}

Repository::~Repository() { stop(); }

bool Repository::feature_enabled(std::string_view f) const {
  return std::find(cfg_.features.begin(), cfg_.features.end(), f) !=
         cfg_.features.end();
}

void Repository::load_directory() {
  if (cfg_.package_dir.empty() || !fs::exists(cfg_.package_dir)) return;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg_.package_dir)) {
    if (entry.path().extension() == ".aaspkg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    PackageDiagnostic diag;
    diag.file = file.filename().string();
    try {
      auto ids = add_package(bytes);
      diag.loaded = true;
      diag.level = classify::classify_level(
                       hosted_for(ids.front())->pkg).value;
      diag.message = "shells: " + std::to_string(ids.size());
    } catch (const Error& e) {
      diag.loaded = false;
      diag.message = e.what();
    }
    diags_.push_back(std::move(diag));
  }
}

std::vector<std::string> Repository::add_package(std::string_view bytes) {
  model::AasPackage pkg = model::parse_package(bytes);
  auto level_violations = classify::validate_declared_level(pkg);
  if (!level_violations.empty()) {
    throw Error(ErrorCode::SchemaViolation, level_violations.front().message);
  }
  auto hosted = std::make_shared<Hosted>();
  hosted->pkg = std::move(pkg);
  hosted->level = classify::classify_level(hosted->pkg).value;
  std::string ts = now_iso8601();
  for (const auto& shell : hosted->pkg.shells) {
    for (const auto& ref : shell.submodel_refs) {
      const model::Submodel* sm = hosted->pkg.find_submodel(ref);
      if (!sm) continue;
      for (const auto& e : sm->elements) {
        if (std::holds_alternative<model::Property>(e)) {
          hosted->element_ts[sm->id_short + "." +
                             std::string(model::element_id_short(e))] = ts;
        }
      }
    }
  }

  std::unique_lock lock(shells_mutex_);
  for (const auto& shell : hosted->pkg.shells) {
    if (shells_.count(shell.id.value)) {
      throw Error(ErrorCode::DuplicateId, shell.id.value);
    }
  }
  std::vector<std::string> ids;
  for (const auto& shell : hosted->pkg.shells) {
    shells_[shell.id.value] = hosted;
    ids.push_back(shell.id.value);
  }
  packages_.push_back(hosted);
  return ids;
}

std::shared_ptr<Repository::Hosted> Repository::hosted_for(
    const std::string& shell_id) const {
  std::shared_lock lock(shells_mutex_);
  auto it = shells_.find(shell_id);
  if (it == shells_.end()) {
    throw Error(ErrorCode::NotFound, "shell '" + shell_id + "'");
  }
  return it->second;
}

json Repository::list_shells() const {
  std::shared_lock lock(shells_mutex_);
  json out = json::array();
  for (const auto& [id, hosted] : shells_) {
    std::shared_lock h(hosted->rw);
    const model::AasShell* shell = hosted->pkg.find_shell(model::Identifier{id});
    if (!shell) continue;
    json refs = json::array();
    for (const auto& r : shell->submodel_refs) refs.push_back(r.value);
    out.push_back(json{{"id", id},
                       {"idB64", util::base64url_encode(id)},
                       {"assetId", shell->asset_id.value},
                       {"level", hosted->level},
                       {"submodelRefs", std::move(refs)}});
  }
  return out;
}

json Repository::value_doc_locked(const Hosted& h, const model::Property& p,
                                  const std::string& path) const {
  auto it = h.element_ts.find(path);
  json doc;
  doc["value"] = scalar_to_json(p.value);
  doc["valueType"] = std::string(model::value_type_name(p.value_type));
  doc["ts"] = it != h.element_ts.end() ? it->second : now_iso8601();
  return doc;
}

json Repository::get_value(const std::string& shell_id,
                           const std::string& path) const {
  auto hosted = hosted_for(shell_id);
  std::shared_lock lock(hosted->rw);
  const model::SubmodelElement& e =
      model::resolve_element(hosted->pkg, model::Identifier{shell_id}, path);
  const auto* p = std::get_if<model::Property>(&e);
  if (!p) {
    throw Error(ErrorCode::NotAProperty, path + " is not a Property");
  }
  return value_doc_locked(*hosted, *p, path);
}

void Repository::update_value(Hosted& h, const std::string& shell_id,
                              const std::string& path,
                              const model::ScalarValue& value,
                              const std::string& ts) {
  json old_json, new_json;
  {
    std::unique_lock lock(h.rw);
    model::Property* p =
        find_property_mut(h.pkg, model::Identifier{shell_id}, path);
    if (!p) {
      throw Error(ErrorCode::NotAProperty, path + " is not a Property");
    }
    old_json = scalar_to_json(p->value);
    new_json = scalar_to_json(value);
    if (old_json == new_json) return;  // no event where old = new
    p->value = value;
    h.element_ts[path] = ts;
  }
  if (feature_enabled("eventing")) {
    events_.publish(Event{shell_id, path, old_json, new_json, ts});
  }
}

json Repository::patch_value(const std::string& shell_id,
                             const std::string& path, const json& value) {
  auto hosted = hosted_for(shell_id);
  if (hosted->pkg.manifest.model_immutable) {
    throw Error(ErrorCode::ModelImmutable,
                "package manifest marks the model immutable");
  }
  model::ValueType t;
  {
    std::shared_lock lock(hosted->rw);
    const model::SubmodelElement& e =
        model::resolve_element(hosted->pkg, model::Identifier{shell_id}, path);
    const auto* p = std::get_if<model::Property>(&e);
    if (!p) {
      throw Error(ErrorCode::NotAProperty, path + " is not a Property");
    }
    t = p->value_type;
  }
  model::ScalarValue parsed = scalar_from_patch(value, t);
  update_value(*hosted, shell_id, path, parsed, now_iso8601());
  return get_value(shell_id, path);
}

json Repository::invoke_service(Hosted& h, const model::OperationElement& op,
                                const json& inputs) {
  // Delegation outranks embedded execution when both qualifiers exist.
  for (const auto& q : op.qualifiers) {
    if (q.kind != "delegation") continue;
    ParsedUrl url = parse_http_url(q.value);
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(10, 0);
    auto res = client.Post(url.path, inputs.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::DelegationFailed, "delegate unreachable");
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::DelegationFailed,
                  "delegate returned status " + std::to_string(res->status));
    }
    json outputs = json::parse(res->body, nullptr, false);
    if (outputs.is_discarded() || !outputs.is_object()) {
      throw Error(ErrorCode::DelegationFailed,
                  "delegate returned a non-JSON document");
    }
    return outputs;
  }

  for (const auto& q : op.qualifiers) {
    if (q.kind != "service") continue;
    if (!feature_enabled("service_engine")) {
      throw Error(ErrorCode::FeatureUnavailable,
                  "service_engine is disabled in this runtime");
    }
    const model::ServiceArtifact* artifact = h.pkg.find_artifact(q.value);
    if (!artifact) {
      throw Error(ErrorCode::NotFound, "artifact '" + q.value + "'");
    }
    engine::LoadedService* service = nullptr;
    {
      std::lock_guard<std::mutex> lock(h.service_mutex);
      auto it = h.services.find(artifact->name);
      if (it == h.services.end()) {
        it = h.services.emplace(artifact->name, engine_.load(*artifact, h.pkg))
                 .first;
      }
      service = &it->second;
    }
    engine::ServiceDoc input = engine::doc_from_json(inputs.dump());
    engine::ServiceDoc output =
        engine_.invoke(*service, input, artifact->budget);
    return json::parse(engine::doc_to_json(output));
  }
  throw Error(ErrorCode::UnboundOperation,
              "operation has neither a delegation nor a service qualifier");
}

json Repository::invoke(const std::string& shell_id, const std::string& path,
                        const json& inputs) {
  if (!inputs.is_object()) {
    throw Error(ErrorCode::SchemaMismatch, "inputs must be a JSON object");
  }
  auto hosted = hosted_for(shell_id);
  model::OperationElement op;
  {
    std::shared_lock lock(hosted->rw);
    const model::SubmodelElement& e =
        model::resolve_element(hosted->pkg, model::Identifier{shell_id}, path);
    const auto* found = std::get_if<model::OperationElement>(&e);
    if (!found) {
      throw Error(ErrorCode::NotAProperty, path + " is not an Operation");
    }
    op = *found;
  }
  for (const auto& var : op.input_vars) {
    auto it = inputs.find(var.id_short);
    if (it == inputs.end()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "input '" + var.id_short + "' missing");
    }
    scalar_from_patch(*it, var.value_type);  // validates; throws TypeMismatch
  }
  json outputs = invoke_service(*hosted, op, inputs);
  return json{{"outputs", std::move(outputs)}};
}

std::string Repository::export_package(const std::string& shell_id,
                                       pack::ConversionReport* report) {
  auto hosted = hosted_for(shell_id);
  std::shared_lock lock(hosted->rw);
  std::string bytes = model::serialize_package(hosted->pkg);
  if (report) {
    *report = pack::conversion_report(classify::RuntimeStrategy::ServerHosted,
                                      classify::RuntimeStrategy::Passive,
                                      hosted->pkg);
    size_t subs = events_.live_count(shell_id);
    if (subs > 0) {
      report->dropped.push_back("subscriptions(" + std::to_string(subs) + ")");
    }
    for (const auto& a : hosted->pkg.artifacts) {
      if (a.kind == model::ArtifactKind::SourceBundle &&
          engine_.has_cached_build(a, hosted->pkg)) {
        report->warnings.push_back("build cache discarded; rebuild required");
        break;
      }
    }
  }
  return bytes;
}

void Repository::start_sync_loops() {
  if (!feature_enabled("sync")) return;
  std::shared_lock lock(shells_mutex_);
  for (const auto& hosted : packages_) {
    const auto& pkg = hosted->pkg;
    if (!pkg.sync_config || pkg.endpoints.empty()) continue;
    const auto& sc = *pkg.sync_config;
    if (sc.inbound != model::FlowMode::Automatic &&
        sc.outbound != model::FlowMode::Automatic) {
      continue;
    }
    std::vector<std::string> shell_ids;
    for (const auto& sh : pkg.shells) shell_ids.push_back(sh.id.value);
    auto sink = [this, hosted, shell_ids](const std::string& path, double value,
                                          double sim_ts) {
      (void)sim_ts;
      for (const auto& id : shell_ids) {
        try {
          update_value(*hosted, id, path, model::ScalarValue{value},
                       now_iso8601());
          return;
        } catch (const Error&) {
          // try the next shell of this package
        }
      }
    };
    try {
      hosted->sync = asset::start_sync(pkg, sc,
                                       classify::RuntimeStrategy::ServerHosted,
                                       sink);
    } catch (const Error& e) {
      diags_.push_back(PackageDiagnostic{
          hosted->source_file.empty() ? "(uploaded)" : hosted->source_file,
          true, hosted->level,
          std::string("sync not started: ") + e.what()});
    }
  }
}

const asset::SyncHandle* Repository::sync_handle(
    const std::string& shell_id) const {
  auto hosted = hosted_for(shell_id);
  return hosted->sync.get();
}

std::vector<std::string> Repository::startup_report() const {
  std::vector<std::string> lines;
  for (const auto& d : diags_) {
    if (d.loaded) {
      lines.push_back("package " + d.file + ": level " +
                      std::to_string(d.level) + " (" + d.message + ")");
    } else {
      lines.push_back("package " + d.file + ": FAILED: " + d.message);
    }
  }
  std::string feats = "features:";
  for (const auto& f : cfg_.features) feats += " " + f;
  lines.push_back(feats);
  lines.push_back(std::string("sandbox: seccomp_network_block=") +
                  (sandbox_caps_.seccomp_network_block ? "yes" : "no") +
                  " rlimit_cpu=" + (sandbox_caps_.rlimit_cpu ? "yes" : "no") +
                  " rlimit_memory=" +
                  (sandbox_caps_.rlimit_memory ? "yes" : "no"));
  return lines;
}

void Repository::register_routes() {
  auto guard = [this](const httplib::Request& req) {
    if (cfg_.auth_token.empty()) return;
    auto header = req.get_header_value("Authorization");
    if (header != "Bearer " + cfg_.auth_token) {
      throw Error(ErrorCode::Unauthorized, "missing or wrong bearer token");
    }
  };
  auto wrap = [](httplib::Response& res, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      res.status = http_status_for(e.code());
      res.set_content(error_body(e).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", {{"code", "Internal"},
                                      {"message", e.what()}}}}.dump(),
                      "application/json");
    }
  };
  auto body_json = [](const httplib::Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::SchemaMismatch, "request body must be JSON");
    }
    return j;
  };

  http_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"ok", true}}.dump(), "application/json");
  });

  http_->Get("/shells", [this, wrap](const httplib::Request&,
                                     httplib::Response& res) {
    wrap(res, [&] {
      res.set_content(list_shells().dump(), "application/json");
    });
  });

  const std::string value_route =
      R"(/shells/([A-Za-z0-9_\-]+)/elements/([^/]+)/value)";
  http_->Get(value_route, [this, wrap](const httplib::Request& req,
                                       httplib::Response& res) {
    wrap(res, [&] {
      std::string id = util::base64url_decode(req.matches[1].str());
      res.set_content(get_value(id, req.matches[2]).dump(), "application/json");
    });
  });
  http_->Patch(value_route, [this, wrap, guard, body_json](
                                const httplib::Request& req,
                                httplib::Response& res) {
    wrap(res, [&] {
      guard(req);
      std::string id = util::base64url_decode(req.matches[1].str());
      json body = body_json(req);
      if (!body.contains("value")) {
        throw Error(ErrorCode::TypeMismatch, "body needs a 'value' key");
      }
      res.set_content(patch_value(id, req.matches[2], body["value"]).dump(),
                      "application/json");
    });
  });

  http_->Post(R"(/shells/([A-Za-z0-9_\-]+)/elements/([^/]+)/invoke)",
              [this, wrap, guard, body_json](const httplib::Request& req,
                                             httplib::Response& res) {
                wrap(res, [&] {
                  guard(req);
                  std::string id = util::base64url_decode(req.matches[1].str());
                  json body = req.body.empty() ? json::object() : body_json(req);
                  json inputs = body.contains("inputs") ? body["inputs"]
                                                        : json::object();
                  res.set_content(invoke(id, req.matches[2], inputs).dump(),
                                  "application/json");
                });
              });

  http_->Get("/subscriptions", [this, wrap](const httplib::Request&,
                                            httplib::Response& res) {
    wrap(res, [&] {
      json out = json::array();
      for (const auto& s : events_.subscriptions()) {
        json f = json::object();
        if (s.filter.shell_id) f["shellId"] = *s.filter.shell_id;
        if (s.filter.path_prefix) f["pathPrefix"] = *s.filter.path_prefix;
        out.push_back(json{{"id", s.id},
                           {"callbackUrl", s.callback_url},
                           {"filter", std::move(f)}});
      }
      res.set_content(out.dump(), "application/json");
    });
  });
  http_->Post("/subscriptions", [this, wrap, guard, body_json](
                                    const httplib::Request& req,
                                    httplib::Response& res) {
    wrap(res, [&] {
      guard(req);
      if (!feature_enabled("eventing")) {
        throw Error(ErrorCode::FeatureUnavailable,
                    "eventing is disabled in this runtime");
      }
      json body = body_json(req);
      if (!body.contains("callbackUrl") || !body["callbackUrl"].is_string()) {
        throw Error(ErrorCode::SchemaViolation, "body needs 'callbackUrl'");
      }
      SubscriptionFilter filter;
      if (body.contains("filter")) {
        const json& f = body["filter"];
        if (f.contains("shellId")) filter.shell_id = f["shellId"].get<std::string>();
        if (f.contains("pathPrefix")) {
          filter.path_prefix = f["pathPrefix"].get<std::string>();
        }
      }
      std::string id = events_.add_subscription(
          body["callbackUrl"].get<std::string>(), std::move(filter));
      res.status = 201;
      res.set_content(json{{"id", id}}.dump(), "application/json");
    });
  });
  http_->Delete(R"(/subscriptions/([^/]+))",
                [this, wrap, guard](const httplib::Request& req,
                                    httplib::Response& res) {
                  wrap(res, [&] {
                    guard(req);
                    if (!events_.remove_subscription(req.matches[1].str())) {
                      throw Error(ErrorCode::NotFound,
                                  std::string("subscription ") +
                                      std::string(req.matches[1]));
                    }
                    res.status = 204;
                  });
                });

  http_->Post("/packages", [this, wrap, guard](const httplib::Request& req,
                                               httplib::Response& res) {
    wrap(res, [&] {
      guard(req);
      auto ids = add_package(req.body);
      json out;
      out["shells"] = ids;
      res.status = 201;
      res.set_content(out.dump(), "application/json");
    });
  });
  http_->Get(R"(/packages/([A-Za-z0-9_\-]+))",
             [this, wrap](const httplib::Request& req, httplib::Response& res) {
               wrap(res, [&] {
                 std::string id = util::base64url_decode(req.matches[1].str());
                 pack::ConversionReport report;
                 std::string bytes = export_package(id, &report);
                 res.set_header("X-Conversion-Report", report.to_json_text());
                 res.set_content(bytes, "application/zip");
               });
             });
}

void Repository::start() {
  if (!feature_enabled("api")) {
    start_sync_loops();
    return;
  }
  http_ = std::make_unique<httplib::Server>();
  register_routes();
  if (cfg_.port == 0) {
    int p = http_->bind_to_any_port("127.0.0.1");
    if (p <= 0) throw Error(ErrorCode::PortInUse, "no ephemeral port available");
    port_ = static_cast<uint16_t>(p);
  } else {
    if (!http_->bind_to_port("127.0.0.1", cfg_.port)) {
      throw Error(ErrorCode::PortInUse, "port " + std::to_string(cfg_.port));
    }
    port_ = cfg_.port;
  }
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  start_sync_loops();
}

void Repository::stop() {
  {
    std::shared_lock lock(shells_mutex_);
    for (const auto& hosted : packages_) {
      if (hosted->sync) hosted->sync->stop();
    }
  }
  if (http_) {
    http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
    http_.reset();
  }
  events_.stop();
}

}  // namespace shellforge::server
