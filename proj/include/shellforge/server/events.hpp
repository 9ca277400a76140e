#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace shellforge::server {

struct SubscriptionFilter {
  std::optional<std::string> shell_id;
  std::optional<std::string> path_prefix;
};

struct Subscription {
  std::string id;
  std::string callback_url;
  SubscriptionFilter filter;
};

struct Event {
  std::string shell_id;
  std::string path;
  nlohmann::json old_value;
  nlohmann::json new_value;  // old != new by construction
  std::string ts;
};

struct DeliveryRecord {
  std::string subscription_id;
  std::string path;
  int attempts = 0;
  bool delivered = false;
};

// Webhook fan-out with an at-least-once contract: each matching
// subscription gets an HTTP POST of the event document, retried with
// exponential backoff and dropped (logged) after the attempt budget.
// Delivery is asynchronous relative to the mutation that produced the event.
class EventDispatcher {
public:
  EventDispatcher(int max_attempts = 3, int backoff_base_ms = 200);
  ~EventDispatcher();

  void start();
  void stop();

  // Throws Error{SchemaViolation} for syntactically invalid callback URLs.
  std::string add_subscription(const std::string& callback_url,
                               SubscriptionFilter filter);
  bool remove_subscription(const std::string& id);
  std::vector<Subscription> subscriptions() const;
  size_t live_count(const std::string& shell_id) const;

  void publish(const Event& event);

  // Blocks until the queue is empty (tests and graceful shutdown).
  void drain();
  std::vector<DeliveryRecord> delivery_log() const;

private:
  struct Pending {
    Event event;
    std::string subscription_id;
    std::string callback_url;
    int attempt = 0;
    std::chrono::steady_clock::time_point due;
  };

  void worker();
  bool try_deliver(const Pending& p);

  int max_attempts_;
  int backoff_base_ms_;
  std::atomic<bool> running_{false};
  std::atomic<uint64_t> next_id_{1};
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<Subscription> subscriptions_;
  std::vector<Pending> queue_;
  size_t in_flight_ = 0;
  std::vector<DeliveryRecord> log_;
  std::thread thread_;
};

// Splits "http://host:port/path"; throws Error{SchemaViolation} otherwise.
struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};
ParsedUrl parse_http_url(const std::string& url);

}  // namespace shellforge::server
