// shellforge: classify, host, convert, and exercise AAS packages against a
// simulated asset. `shellforge <command> --help` shows per-command flags.
#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include "shellforge/asset/signals.hpp"
#include "shellforge/asset/simulator.hpp"
#include "shellforge/classify/classify.hpp"
#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/pack/packager.hpp"
#include "shellforge/server/repository.hpp"
#include "shellforge/util/codec.hpp"
#include "shellforge/util/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shellforge;

namespace {

std::atomic<bool> interrupted{false};

void handle_signal(int) { interrupted = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = handle_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot read " + path);
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

model::AasPackage load_package(const std::string& path) {
  return model::parse_package(read_file(path));
}

// Flat JSON config at ./shellforge.json; flags override env, env overrides
// the file.
json load_config_file() {
  std::ifstream in("shellforge.json");
  if (!in) return json::object();
  json j = json::parse(in, nullptr, false);
  return j.is_object() ? j : json::object();
}

uint16_t resolve_port(const CLI::Option* port_opt, uint16_t flag_value) {
  if (port_opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("SHELLFORGE_PORT")) {
    return static_cast<uint16_t>(std::atoi(env));
  }
  json cfg = load_config_file();
  if (cfg.contains("port") && cfg["port"].is_number_integer()) {
    return cfg["port"].get<uint16_t>();
  }
  return flag_value;
}

const char* rating_letter(classify::QualityRating r) {
  switch (r) {
    case classify::QualityRating::WithoutHesitation: return "G";
    case classify::QualityRating::PartlyConsider: return "O";
    case classify::QualityRating::StronglyConsider: return "R";
  }
  return "?";
}

json quality_row_json(const classify::QualityRow& row) {
  return json{
      {"reliability", classify::quality_rating_name(row.reliability)},
      {"usability", classify::quality_rating_name(row.usability)},
      {"performance", classify::quality_rating_name(row.performance)},
      {"security", classify::quality_rating_name(row.security)},
      {"supportability", classify::quality_rating_name(row.supportability)},
      {"transferability", classify::quality_rating_name(row.transferability)},
  };
}

void print_quality_table(std::ostream& os) {
  auto table = classify::full_quality_table();
  os << "criterion        Lvl0 Lvl1 Lvl2 Lvl3 Lvl4 Lvl5\n";
  const char* names[] = {"reliability", "usability", "performance",
                         "security", "supportability", "transferability"};
  for (int row = 0; row < 6; ++row) {
    os << names[row];
    for (size_t pad = std::strlen(names[row]); pad < 17; ++pad) os << ' ';
    for (int lvl = 0; lvl < 6; ++lvl) {
      const auto& q = table[lvl];
      classify::QualityRating r =
          row == 0 ? q.reliability :
          row == 1 ? q.usability :
          row == 2 ? q.performance :
          row == 3 ? q.security :
          row == 4 ? q.supportability : q.transferability;
      os << rating_letter(r) << "    ";
    }
    os << "\n";
  }
  os << "G without hesitation / O partly to be considered / "
        "R strongly to be considered\n";
}

// ---- subcommand bodies ----

int cmd_validate(const std::string& path, bool as_json) {
  model::AasPackage pkg;
  std::vector<model::Violation> violations;
  try {
    pkg = load_package(path);
    violations = model::validate(pkg);
    auto extra = classify::validate_declared_level(pkg);
    violations.insert(violations.end(), extra.begin(), extra.end());
  } catch (const Error& e) {
    if (as_json) {
      std::cout << json{{"valid", false},
                        {"error", std::string(error_code_name(e.code()))},
                        {"message", e.detail()}}.dump() << "\n";
    } else {
      std::cout << "invalid: " << e.what() << "\n";
    }
    return 1;
  }
  if (as_json) {
    json out;
    out["valid"] = violations.empty();
    out["violations"] = json::array();
    for (const auto& v : violations) {
      out["violations"].push_back(
          json{{"path", v.path}, {"rule", v.rule}, {"message", v.message}});
    }
    std::cout << out.dump() << "\n";
  } else if (violations.empty()) {
    std::cout << "valid\n";
  } else {
    for (const auto& v : violations) {
      std::cout << v.path << ": " << v.rule << ": " << v.message << "\n";
    }
  }
  return violations.empty() ? 0 : 1;
}

int cmd_classify(const std::string& path, bool as_json) {
  model::AasPackage pkg = load_package(path);
  auto level = classify::classify_level(pkg);
  auto caps = classify::capability_matrix(level);
  std::string flow = "none";
  if (pkg.sync_config) {
    try {
      flow = classify::data_flow_class_name(classify::classify_data_flow(
          *pkg.sync_config, classify::RuntimeStrategy::ServerHosted));
    } catch (const Error&) {
      flow = "unclassified";
    }
  }
  if (as_json) {
    std::cout << json{{"level", level.value},
                      {"capabilities",
                       {{"needsRuntime", caps.needs_runtime},
                        {"apiAccess", caps.api_access},
                        {"parameterizedRequests", caps.parameterized_requests},
                        {"embeddedLogic", caps.embedded_logic},
                        {"logicForm",
                         std::string(classify::logic_form_name(caps.logic_form))}}},
                      {"dataFlowWhenHosted", flow}}.dump() << "\n";
  } else {
    std::cout << "level: " << level.value << "\n";
    std::cout << "logic form: " << classify::logic_form_name(caps.logic_form)
              << "\n";
    std::cout << "data flow when hosted: " << flow << "\n";
  }
  return 0;
}

int cmd_assess(int level, bool all, bool as_json) {
  if (all) {
    if (as_json) {
      json rows = json::array();
      auto table = classify::full_quality_table();
      for (int k = 0; k < 6; ++k) {
        json row = quality_row_json(table[k]);
        row["level"] = k;
        rows.push_back(std::move(row));
      }
      std::cout << rows.dump() << "\n";
    } else {
      print_quality_table(std::cout);
    }
    return 0;
  }
  auto row = classify::assess_quality(classify::HeavinessLevel{level});
  if (as_json) {
    json out = quality_row_json(row);
    out["level"] = level;
    std::cout << out.dump() << "\n";
  } else {
    std::cout << "level " << level << ":\n"
              << "  reliability:     " << classify::quality_rating_name(row.reliability) << "\n"
              << "  usability:       " << classify::quality_rating_name(row.usability) << "\n"
              << "  performance:     " << classify::quality_rating_name(row.performance) << "\n"
              << "  security:        " << classify::quality_rating_name(row.security) << "\n"
              << "  supportability:  " << classify::quality_rating_name(row.supportability) << "\n"
              << "  transferability: " << classify::quality_rating_name(row.transferability) << "\n";
  }
  return 0;
}

int cmd_recommend(const classify::UseCaseProfile& profile, bool as_json) {
  auto recs = classify::recommend_level(profile);
  if (as_json) {
    json out = json::array();
    for (const auto& r : recs) {
      out.push_back(json{{"level", r.level.value},
                         {"ruleId", r.rule_id},
                         {"rationale", r.rationale}});
    }
    std::cout << out.dump() << "\n";
  } else {
    for (size_t i = 0; i < recs.size(); ++i) {
      std::cout << (i + 1) << ". Lvl " << recs[i].level.value << "  ["
                << recs[i].rule_id << "] " << recs[i].rationale << "\n";
    }
  }
  return 0;
}

server::RepoConfig bundle_repo_config(const std::string& bundle_dir) {
  server::RepoConfig cfg;
  json launch = json::parse(read_file(bundle_dir + "/launch.json"));
  cfg.package_dir = bundle_dir;
  cfg.work_dir = bundle_dir + "/cache";
  cfg.features.clear();
  for (const auto& f : launch["features"]) {
    cfg.features.push_back(f.get<std::string>());
  }
  if (launch.contains("port")) cfg.port = launch["port"].get<uint16_t>();
  return cfg;
}

int cmd_serve(server::RepoConfig cfg) {
  server::Repository repo(std::move(cfg));
  repo.load_directory();
  repo.start();
  for (const auto& line : repo.startup_report()) {
    std::cout << line << "\n";
  }
  if (repo.feature_enabled("api")) {
    std::cout << "listening on http://127.0.0.1:" << repo.port() << "\n";
  } else {
    std::cout << "api feature disabled; running headless\n";
  }
  std::cout.flush();
  install_signal_handlers();
  while (!interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  repo.stop();
  return 0;
}

int cmd_convert(const std::string& path, const std::string& from,
                const std::string& to, const std::string& out_dir,
                const std::vector<std::string>& features, bool include_cache,
                bool as_json) {
  model::AasPackage pkg = load_package(path);
  pack::ConversionReport report;
  if (to == "standalone" && !out_dir.empty()) {
    pack::StandaloneConfig cfg;
    cfg.target_dir = out_dir;
    cfg.include_build_cache = include_cache;
    if (!features.empty()) cfg.features = features;
    report = pack::build_standalone(pkg, cfg);
    if (!as_json) std::cout << "bundle written to " << out_dir << "\n";
  } else {
    report = pack::conversion_report(classify::runtime_strategy_from_name(from),
                                     classify::runtime_strategy_from_name(to),
                                     pkg);
  }
  std::cout << (as_json ? report.to_json_text() + "\n" : report.to_text());
  return 0;
}

int cmd_invoke(const std::string& path, const std::string& op_path,
               const std::string& inputs_text, const std::string& server_url,
               bool as_json) {
  model::AasPackage pkg = load_package(path);
  if (pkg.shells.empty()) {
    throw Error(ErrorCode::NotFound, "package has no shells");
  }
  json inputs = json::parse(inputs_text, nullptr, false);
  if (inputs.is_discarded() || !inputs.is_object()) {
    throw Error(ErrorCode::SchemaMismatch, "--inputs must be a JSON object");
  }
  if (server_url.empty()) {
    // File-only context: the passive strategy cannot execute services.
    pack::require_runtime(classify::RuntimeStrategy::Passive, "service_engine");
  }
  auto url = server::parse_http_url(server_url);
  httplib::Client client(url.host, url.port);
  client.set_read_timeout(30, 0);
  std::string route = "/shells/" +
                      util::base64url_encode(pkg.shells.front().id.value) +
                      "/elements/" + op_path + "/invoke";
  auto res = client.Post(route, json{{"inputs", inputs}}.dump(),
                         "application/json");
  if (!res) {
    throw Error(ErrorCode::TargetUnreachable, server_url);
  }
  if (res->status != 200) {
    json err = json::parse(res->body, nullptr, false);
    std::string code = err.is_object() && err.contains("error")
                           ? err["error"]["code"].get<std::string>()
                           : "HTTP " + std::to_string(res->status);
    std::cerr << "error: " << code << "\n";
    return 1;
  }
  json outputs = json::parse(res->body);
  if (as_json) {
    std::cout << outputs.dump() << "\n";
  } else {
    std::cout << outputs["outputs"].dump(2) << "\n";
  }
  return 0;
}

int cmd_sim(uint16_t port, double time_scale) {
  asset::Simulator sim(asset::SimConfig{port, 0, time_scale});
  sim.start();
  std::cout << "simulator listening on 127.0.0.1:" << sim.port()
            << " (time scale " << time_scale << "x)\n";
  std::cout.flush();
  install_signal_handlers();
  while (!interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  sim.stop();
  return 0;
}

// Scripted end-to-end run. Deterministic model outputs go to stdout; timing
// and ports go to stderr so two runs print identical stdout.
int cmd_demo(bool no_sim, std::string fixtures_dir, bool keep) {
  bool temp_fixtures = fixtures_dir.empty();
  if (temp_fixtures) {
    fixtures_dir = (fs::temp_directory_path() /
                    ("shellforge-demo-" + std::to_string(getpid()))).string();
  }

  std::unique_ptr<asset::Simulator> sim;
  fixtures::FixtureOptions opts;
  opts.poll_interval_s = 0.05;
  if (!no_sim) {
    sim = std::make_unique<asset::Simulator>(asset::SimConfig{0, 0, 15.0});
    sim->start();
    opts.sim_port = sim->port();
    std::cerr << "simulator on port " << sim->port() << " (15x time)\n";
  }
  fixtures::write_level_fixtures(fixtures_dir, opts);

  server::RepoConfig cfg;
  cfg.package_dir = fixtures_dir;
  cfg.work_dir = fixtures_dir + "/.work";
  server::Repository repo(cfg);
  repo.load_directory();
  repo.start();
  std::cerr << "repository on port " << repo.port() << "\n";

  std::cout << "== hosted shells ==\n";
  for (int level = 0; level <= 5; ++level) {
    model::AasPackage pkg = model::parse_package(
        read_file(fixtures_dir + "/" + fixtures::fixture_filename(level)));
    std::string flow = "none";
    if (pkg.sync_config) {
      flow = classify::data_flow_class_name(classify::classify_data_flow(
          *pkg.sync_config, classify::RuntimeStrategy::ServerHosted));
    }
    std::cout << fixtures::fixture_filename(level) << ": level "
              << classify::classify_level(pkg).value << ", data flow " << flow
              << "\n";
  }

  if (no_sim) {
    std::cout << "sync: skipped (EndpointUnreachable: no simulator; "
                 "rerun without --no-sim)\n";
  } else {
    // Shadow: the lvl1 package's Telemetry.temp must track the generator.
    const std::string shadow_shell = "urn:pump2";
    bool tracked = false;
    for (int i = 0; i < 100 && !tracked; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      const asset::SyncHandle* h = repo.sync_handle(shadow_shell);
      if (!h || h->polls_completed() < 2) continue;
      json doc = repo.get_value(shadow_shell, "Telemetry.temp");
      double value = doc["value"].get<double>();
      for (const auto& rec : h->poll_log()) {
        if (rec.var == "temp" && rec.value == value &&
            value == asset::sim_signal("temp", rec.sim_t)) {
          tracked = true;
          break;
        }
      }
    }
    std::cout << "shadow sync (lvl1): "
              << (tracked ? "OK (property equals generator at polled time)"
                          : "FAILED")
              << "\n";

    // Twin: the lvl2 write-back rule must engage cooling.
    bool cooled = false;
    for (int i = 0; i < 400 && !cooled; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(25));
      cooled = sim->cooling() == 1;
    }
    const asset::SyncHandle* twin = repo.sync_handle("urn:pump3");
    bool sound = cooled && twin && !twin->fire_log().empty();
    std::cout << "twin write-back (lvl2): "
              << (sound ? "OK (cooling engaged after trigger fired)" : "FAILED")
              << "\n";
  }

  // Cross-level equivalence: same 1000-sample window through the
  // interpreted, translated, and executable service.
  std::vector<double> samples;
  json samples_json = json::array();
  double oracle_sum = 0;
  for (int i = 0; i < 1000; ++i) {
    double t = 0.25 * static_cast<double>(i);
    double v = asset::sim_signal("temp", t);
    samples.push_back(v);
    samples_json.push_back(v);
    oracle_sum += v;
  }
  double oracle = oracle_sum / 1000.0;
  double max_delta = 0;
  for (const char* shell : {"urn:avg3", "urn:avg4", "urn:avg5"}) {
    json out = repo.invoke(shell, "SoftwareServices.AvgTemp",
                           json{{"samples", samples_json}});
    double avg = out["outputs"]["avg"].get<double>();
    max_delta = std::max(max_delta, std::fabs(avg - oracle));
  }
  std::cout << "cross-level max |delta| < 1e-9: "
            << (max_delta < 1e-9 ? "PASS" : "FAIL") << "\n";

  std::cout << "== quality matrix ==\n";
  print_quality_table(std::cout);

  repo.stop();
  if (sim) sim->stop();
  if (temp_fixtures && !keep) {
    std::error_code ec;
    fs::remove_all(fixtures_dir, ec);
  }
  return 0;
}

struct LatencyStats {
  double p50_ms = 0;
  double p95_ms = 0;
};

LatencyStats percentile(std::vector<double>& ms) {
  std::sort(ms.begin(), ms.end());
  LatencyStats s;
  if (ms.empty()) return s;
  s.p50_ms = ms[ms.size() / 2];
  s.p95_ms = ms[std::min(ms.size() - 1, ms.size() * 95 / 100)];
  return s;
}

int cmd_bench(std::string server_url, std::string dir, int requests,
              bool fault, bool as_json) {
  std::unique_ptr<server::Repository> self_hosted;
  std::string temp_dir;
  if (server_url.empty()) {
    if (dir.empty()) {
      temp_dir = (fs::temp_directory_path() /
                  ("shellforge-bench-" + std::to_string(getpid()))).string();
      fixtures::write_level_fixtures(temp_dir, fixtures::FixtureOptions{});
      dir = temp_dir;
    }
    server::RepoConfig cfg;
    cfg.package_dir = dir;
    cfg.work_dir = dir + "/.work";
    self_hosted = std::make_unique<server::Repository>(cfg);
    self_hosted->load_directory();
    self_hosted->start();
    server_url = "http://127.0.0.1:" + std::to_string(self_hosted->port());
  }

  auto url = server::parse_http_url(server_url);
  httplib::Client client(url.host, url.port);
  client.set_read_timeout(30, 0);
  auto shells_res = client.Get("/shells");
  if (!shells_res || shells_res->status != 200) {
    throw Error(ErrorCode::TargetUnreachable, server_url);
  }
  json shells = json::parse(shells_res->body);

  json report;
  report["rows"] = json::array();
  if (shells.empty()) {
    report["warning"] = "no shells hosted; nothing to measure";
  }
  for (const auto& shell : shells) {
    std::string id_b64 = shell["idB64"].get<std::string>();
    std::string get_route = "/shells/" + id_b64 + "/elements/Telemetry.temp/value";
    std::vector<double> get_ms;
    for (int i = 0; i < requests; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      auto res = client.Get(get_route);
      auto t1 = std::chrono::steady_clock::now();
      if (res && res->status == 200) {
        get_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
    }
    LatencyStats get_stats = percentile(get_ms);

    json row;
    row["shell"] = shell["id"];
    row["level"] = shell["level"];
    row["requests"] = requests;
    row["getValueP50Ms"] = get_stats.p50_ms;
    row["getValueP95Ms"] = get_stats.p95_ms;

    if (shell["level"].get<int>() >= 3) {
      std::string invoke_route =
          "/shells/" + id_b64 + "/elements/SoftwareServices.AvgTemp/invoke";
      json body{{"inputs", {{"samples", {20.0, 25.0, 20.0, 15.0}}}}};
      std::vector<double> inv_ms;
      for (int i = 0; i < std::min(requests, 20); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        auto res = client.Post(invoke_route, body.dump(), "application/json");
        auto t1 = std::chrono::steady_clock::now();
        if (res && res->status == 200) {
          inv_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
      }
      LatencyStats inv = percentile(inv_ms);
      row["invokeP50Ms"] = inv.p50_ms;
      row["invokeP95Ms"] = inv.p95_ms;
    }
    report["rows"].push_back(std::move(row));
  }

  if (fault) {
    json faults;
    // A crashing service answers 500 on that request only.
    bool crash_500 = false, others_ok = true;
    auto crash_res = client.Post(
        "/shells/" + util::base64url_encode("urn:avg5") +
            "/elements/SoftwareServices.Crash/invoke",
        json{{"inputs", json::object()}}.dump(), "application/json");
    crash_500 = crash_res && crash_res->status == 500;
    for (const auto& shell : shells) {
      if (shell["id"] == "urn:avg5") continue;
      auto res = client.Get("/shells/" + shell["idB64"].get<std::string>() +
                            "/elements/Telemetry.temp/value");
      if (!res || res->status != 200) others_ok = false;
    }
    faults["crashReturns500"] = crash_500;
    faults["otherShellsUnaffected"] = others_ok;
    // A corrupt upload is rejected at load time.
    auto corrupt = client.Post("/packages", std::string("not a zip"),
                               "application/zip");
    faults["corruptUploadRejected"] = corrupt && corrupt->status == 400;
    report["faultInjection"] = std::move(faults);
  }

  if (as_json) {
    std::cout << report.dump(2) << "\n";
  } else {
    if (report.contains("warning")) {
      std::cout << "warning: " << report["warning"].get<std::string>() << "\n";
    }
    std::cout << "shell            level  GET p50/p95 ms   invoke p50 ms\n";
    for (const auto& row : report["rows"]) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-16s %-6d %7.3f/%7.3f   %s",
                    row["shell"].get<std::string>().c_str(),
                    row["level"].get<int>(), row["getValueP50Ms"].get<double>(),
                    row["getValueP95Ms"].get<double>(),
                    row.contains("invokeP50Ms")
                        ? std::to_string(row["invokeP50Ms"].get<double>()).c_str()
                        : "-");
      std::cout << line << "\n";
    }
    if (report.contains("faultInjection")) {
      const auto& f = report["faultInjection"];
      std::cout << "fault injection: crash->500 "
                << (f["crashReturns500"].get<bool>() ? "OK" : "FAIL")
                << ", isolation "
                << (f["otherShellsUnaffected"].get<bool>() ? "OK" : "FAIL")
                << ", corrupt upload rejected "
                << (f["corruptUploadRejected"].get<bool>() ? "OK" : "FAIL")
                << "\n";
    }
  }

  if (self_hosted) self_hosted->stop();
  if (!temp_dir.empty()) {
    std::error_code ec;
    fs::remove_all(temp_dir, ec);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shellforge: software-heavy AAS runtime and classifier"};
  app.require_subcommand(1);

  // validate
  std::string v_path;
  bool v_json = false;
  auto* validate = app.add_subcommand("validate", "check a package's invariants");
  validate->add_option("package", v_path)->required();
  validate->add_flag("--json", v_json);

  // classify
  std::string c_path;
  bool c_json = false;
  auto* classify_cmd = app.add_subcommand("classify", "heaviness level of a package");
  classify_cmd->add_option("package", c_path)->required();
  classify_cmd->add_flag("--json", c_json);

  // assess
  int a_level = 0;
  bool a_all = false, a_json = false;
  auto* assess = app.add_subcommand("assess", "ISO/IEC 25000 quality row per level");
  auto* a_level_opt = assess->add_option("--level", a_level)->check(CLI::Range(0, 5));
  assess->add_flag("--all", a_all, "print the whole matrix");
  assess->add_flag("--json", a_json);

  // recommend
  std::string r_deploy = "customer_side", r_vis = "black_box_ok",
              r_cplx = "simple", r_fleet = "single";
  bool r_consolidation = false, r_raw = false, r_json = false;
  auto* recommend = app.add_subcommand("recommend", "level recommendation for a use case");
  recommend->add_option("--deployment", r_deploy)
      ->check(CLI::IsMember({"customer_side", "provider_internal", "research"}));
  recommend->add_option("--visibility", r_vis)
      ->check(CLI::IsMember({"white_box_required", "black_box_ok"}));
  recommend->add_option("--complexity", r_cplx)
      ->check(CLI::IsMember({"simple", "complex"}));
  recommend->add_option("--fleet", r_fleet)->check(CLI::IsMember({"single", "many"}));
  recommend->add_flag("--consolidation", r_consolidation,
                      "data from several sources must be consolidated");
  recommend->add_flag("--needs-raw-data", r_raw,
                      "the provider needs the underlying data");
  recommend->add_flag("--json", r_json);

  // serve
  std::string s_dir, s_bundle, s_token, s_work;
  uint16_t s_port = 0;
  auto* serve = app.add_subcommand("serve", "host packages over HTTP");
  serve->add_option("--dir", s_dir, "directory of .aaspkg files");
  serve->add_option("--bundle", s_bundle, "standalone bundle directory");
  auto* s_port_opt = serve->add_option("--port", s_port);
  serve->add_option("--token", s_token, "bearer token for mutating routes");
  serve->add_option("--work-dir", s_work, "build cache directory");

  // convert
  std::string cv_path, cv_from = "server_hosted", cv_to = "passive", cv_out;
  std::vector<std::string> cv_features;
  bool cv_cache = false, cv_json = false;
  auto* convert = app.add_subcommand("convert", "strategy conversion and reports");
  convert->add_option("package", cv_path)->required();
  convert->add_option("--from", cv_from)
      ->check(CLI::IsMember({"passive", "server_hosted", "standalone"}));
  convert->add_option("--to", cv_to)
      ->check(CLI::IsMember({"passive", "server_hosted", "standalone"}));
  convert->add_option("--out", cv_out, "build a standalone bundle here");
  convert->add_option("--features", cv_features)->delimiter(',');
  convert->add_flag("--include-cache", cv_cache);
  convert->add_flag("--json", cv_json);

  // invoke
  std::string i_path, i_op, i_inputs = "{}", i_server;
  bool i_json = false;
  auto* invoke = app.add_subcommand("invoke", "invoke an operation element");
  invoke->add_option("package", i_path)->required();
  invoke->add_option("operation", i_op, "dotted path, e.g. SoftwareServices.AvgTemp")
      ->required();
  invoke->add_option("--inputs", i_inputs, "JSON object of inputs");
  invoke->add_option("--server", i_server, "repository URL; without it the "
                     "package is a passive file and cannot execute");
  invoke->add_flag("--json", i_json);

  // sim
  uint16_t m_port = 0;
  double m_scale = 1.0;
  auto* sim = app.add_subcommand("sim", "run the asset simulator");
  auto* m_port_opt = sim->add_option("--port", m_port);
  sim->add_option("--time-scale", m_scale)->check(CLI::PositiveNumber);

  // demo
  bool d_no_sim = false, d_keep = false;
  std::string d_fixtures;
  auto* demo = app.add_subcommand("demo", "scripted end-to-end run");
  demo->add_flag("--no-sim", d_no_sim, "skip the simulator (degraded run)");
  demo->add_option("--fixtures", d_fixtures, "reuse an existing fixture dir");
  demo->add_flag("--keep", d_keep, "keep generated fixtures");

  // bench
  std::string b_server, b_dir;
  int b_requests = 100;
  bool b_fault = false, b_json = false;
  auto* bench = app.add_subcommand("bench", "latency and fault-injection report");
  bench->add_option("--server", b_server, "existing repository URL");
  bench->add_option("--dir", b_dir, "fixtures to self-host");
  bench->add_option("--requests", b_requests)->check(CLI::PositiveNumber);
  bench->add_flag("--fault", b_fault, "run fault injection");
  bench->add_flag("--json", b_json);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(v_path, v_json);
    if (*classify_cmd) return cmd_classify(c_path, c_json);
    if (*assess) {
      if (!a_all && a_level_opt->count() == 0) {
        std::cerr << "error: pass --level K or --all\n";
        return 2;
      }
      return cmd_assess(a_level, a_all, a_json);
    }
    if (*recommend) {
      classify::UseCaseProfile p;
      p.deployment_target =
          r_deploy == "customer_side" ? classify::DeploymentTarget::CustomerSide
          : r_deploy == "provider_internal"
              ? classify::DeploymentTarget::ProviderInternal
              : classify::DeploymentTarget::Research;
      p.code_visibility = r_vis == "white_box_required"
                              ? classify::CodeVisibility::WhiteBoxRequired
                              : classify::CodeVisibility::BlackBoxOk;
      p.task_complexity = r_cplx == "complex" ? classify::TaskComplexity::Complex
                                              : classify::TaskComplexity::Simple;
      p.fleet_size = r_fleet == "many" ? classify::FleetSize::Many
                                       : classify::FleetSize::Single;
      p.consolidation_needed = r_consolidation;
      p.provider_needs_raw_data = r_raw;
      return cmd_recommend(p, r_json);
    }
    if (*serve) {
      server::RepoConfig cfg;
      if (!s_bundle.empty()) {
        cfg = bundle_repo_config(s_bundle);
      } else {
        if (s_dir.empty()) {
          std::cerr << "error: pass --dir or --bundle\n";
          return 2;
        }
        cfg.package_dir = s_dir;
        cfg.work_dir = s_work;
      }
      if (s_port_opt->count() > 0 || cfg.port == 0) {
        cfg.port = resolve_port(s_port_opt, s_port);
      }
      cfg.auth_token = s_token;
      return cmd_serve(std::move(cfg));
    }
    if (*convert) {
      return cmd_convert(cv_path, cv_from, cv_to, cv_out, cv_features,
                         cv_cache, cv_json);
    }
    if (*invoke) return cmd_invoke(i_path, i_op, i_inputs, i_server, i_json);
    if (*sim) return cmd_sim(resolve_port(m_port_opt, m_port), m_scale);
    if (*demo) return cmd_demo(d_no_sim, d_fixtures, d_keep);
    if (*bench) return cmd_bench(b_server, b_dir, b_requests, b_fault, b_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
