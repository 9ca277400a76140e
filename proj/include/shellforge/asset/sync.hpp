#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "shellforge/asset/client.hpp"
#include "shellforge/classify/classify.hpp"
#include "shellforge/model/model.hpp"

namespace shellforge::asset {

// Sink for inbound sync updates. The repository routes these into the hosted
// value store (which also publishes events); tests use an in-memory stand-in.
using ValueSink =
    std::function<void(const std::string& element_path, double value, double sim_ts)>;

struct PollRecord {
  double sim_t = 0;
  std::string var;
  double value = 0;
};

struct FireRecord {
  double sim_t = 0;
  size_t rule_index = 0;
  double observed = 0;  // the value or windowed mean that tripped the rule
};

// One polling loop per package. Inbound automatic: mapped variables are
// fetched every poll interval and written through the sink. Outbound
// automatic: write-back rules are evaluated on each poll and their commands
// sent to the asset on the rising edge of the trigger.
class SyncHandle {
public:
  ~SyncHandle();
  void stop();

  bool degraded() const { return degraded_.load(); }
  size_t polls_completed() const { return polls_.load(); }
  std::vector<PollRecord> poll_log() const;
  std::vector<FireRecord> fire_log() const;

  struct TriggerRule {
    bool windowed = false;
    std::string var;
    size_t window_n = 1;
    engine::Comparison cmp = engine::Comparison::Gt;
    double literal = 0;
    model::WriteBackCommand command;
    bool was_true = false;
  };

private:
  friend std::unique_ptr<SyncHandle> start_sync(const model::AasPackage&,
                                                const model::SyncConfig&,
                                                classify::RuntimeStrategy,
                                                ValueSink);
  SyncHandle() = default;

  void loop();
  void poll_once(AssetSession& session);

  model::SyncConfig cfg_;
  model::EndpointDescriptor endpoint_;
  ValueSink sink_;
  std::vector<TriggerRule> rules_;
  std::vector<std::string> poll_vars_;

  std::map<std::string, std::deque<std::pair<double, double>>> history_;
  std::atomic<bool> running_{false};
  std::atomic<bool> degraded_{false};
  std::atomic<size_t> polls_{0};
  mutable std::mutex log_mutex_;
  std::vector<PollRecord> poll_log_;
  std::vector<FireRecord> fire_log_;
  std::mutex cv_mutex_;
  std::condition_variable cv_;
  std::thread thread_;
};

// Trigger grammar: "<var> <cmp> <literal>" or "mean(<var>, <n>) <cmp> <literal>"
// with cmp in {<, <=, =, >=, >}. Windowed means need n samples before they
// can fire. Throws Error{ParseError}.
//
// Throws Error{StrategyForbidsSync} under the passive strategy and
// Error{EndpointUnreachable} when the package has no reachable endpoint.
std::unique_ptr<SyncHandle> start_sync(const model::AasPackage& pkg,
                                       const model::SyncConfig& sync,
                                       classify::RuntimeStrategy strategy,
                                       ValueSink sink);

}  // namespace shellforge::asset
