#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellforge/asset/sync.hpp"
#include "shellforge/engine/engine.hpp"
#include "shellforge/model/model.hpp"
#include "shellforge/pack/packager.hpp"
#include "shellforge/server/events.hpp"
#include "shellforge/util/error.hpp"

namespace httplib {
class Server;
}

namespace shellforge::server {

struct RepoConfig {
  uint16_t port = 0;  // 0: ephemeral
  std::string package_dir;
  std::string work_dir;      // engine build cache / staging
  std::string auth_token;    // empty: mutating routes unguarded
  int event_attempts = 3;
  int event_backoff_ms = 200;
  model::ResourceBudget default_budget;
  // Feature gates; bundles restrict this set via launch.json.
  std::vector<std::string> features = {"api", "sync", "service_engine",
                                       "eventing"};
};

struct PackageDiagnostic {
  std::string file;
  bool loaded = false;
  int level = -1;
  std::string message;
};

// Multi-AAS repository: value access, operation invocation (embedded
// services and delegation), eventing, upload/export, and per-package sync
// loops. Reads run concurrently; writes are serialized per package.
class Repository {
public:
  explicit Repository(RepoConfig cfg);
  ~Repository();

  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  // Loads every *.aaspkg in package_dir; corrupt files become diagnostics
  // and the server still starts with the valid subset.
  void load_directory();

  // Hosts one package from bytes. Returns its shell ids.
  // Throws Error{DuplicateId} when a shell id is already hosted.
  std::vector<std::string> add_package(std::string_view bytes);

  // Binds and serves. Throws Error{PortInUse}.
  void start();
  void stop();
  uint16_t port() const { return port_; }

  // Direct-call surface (HTTP handlers map onto these; tests too).
  nlohmann::json list_shells() const;
  nlohmann::json get_value(const std::string& shell_id,
                           const std::string& path) const;
  nlohmann::json patch_value(const std::string& shell_id,
                             const std::string& path,
                             const nlohmann::json& value);
  nlohmann::json invoke(const std::string& shell_id, const std::string& path,
                        const nlohmann::json& inputs);
  std::string export_package(const std::string& shell_id,
                             pack::ConversionReport* report = nullptr);

  EventDispatcher& events() { return events_; }
  engine::ServiceEngine& service_engine() { return engine_; }
  const std::vector<PackageDiagnostic>& diagnostics() const { return diags_; }
  std::vector<std::string> startup_report() const;
  bool feature_enabled(std::string_view f) const;

  // Starts sync loops for hosted packages with automatic flows. Unreachable
  // endpoints degrade to a diagnostic instead of failing the server.
  void start_sync_loops();
  const asset::SyncHandle* sync_handle(const std::string& shell_id) const;

private:
  struct Hosted {
    model::AasPackage pkg;
    int level = 0;
    std::string source_file;
    std::map<std::string, std::string> element_ts;  // path -> ISO 8601
    std::map<std::string, engine::LoadedService> services;
    std::unique_ptr<asset::SyncHandle> sync;
    mutable std::shared_mutex rw;
    std::mutex service_mutex;
  };

  std::shared_ptr<Hosted> hosted_for(const std::string& shell_id) const;
  nlohmann::json value_doc_locked(const Hosted& h, const model::Property& p,
                                  const std::string& path) const;
  void update_value(Hosted& h, const std::string& shell_id,
                    const std::string& path, const model::ScalarValue& value,
                    const std::string& ts);
  nlohmann::json invoke_service(Hosted& h, const model::OperationElement& op,
                                const nlohmann::json& inputs);
  void register_routes();

  RepoConfig cfg_;
  engine::ServiceEngine engine_;
  EventDispatcher events_;
  mutable std::shared_mutex shells_mutex_;
  std::map<std::string, std::shared_ptr<Hosted>> shells_;
  std::vector<std::shared_ptr<Hosted>> packages_;
  std::vector<PackageDiagnostic> diags_;
  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  uint16_t port_ = 0;
  engine::SandboxCapabilities sandbox_caps_;
};

// ISO 8601 UTC with millisecond precision.
std::string now_iso8601();

int http_status_for(ErrorCode code);

}  // namespace shellforge::server
