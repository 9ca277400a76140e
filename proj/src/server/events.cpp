#include "shellforge/server/events.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>

#include "shellforge/util/error.hpp"

namespace shellforge::server {

using nlohmann::json;

ParsedUrl parse_http_url(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (!url.starts_with(scheme)) {
    throw Error(ErrorCode::SchemaViolation,
                "callback url must be http://host[:port]/path, got '" + url + "'");
  }
  std::string rest = url.substr(scheme.size());
  ParsedUrl out;
  size_t slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  size_t colon = authority.rfind(':');
  if (colon != std::string::npos) {
    out.host = authority.substr(0, colon);
    std::string port_text = authority.substr(colon + 1);
    auto [p, ec] = std::from_chars(port_text.data(),
                                   port_text.data() + port_text.size(), out.port);
    if (ec != std::errc() || p != port_text.data() + port_text.size() ||
        out.port < 1 || out.port > 65535) {
      throw Error(ErrorCode::SchemaViolation, "bad port in url '" + url + "'");
    }
  } else {
    out.host = authority;
  }
  if (out.host.empty()) {
    throw Error(ErrorCode::SchemaViolation, "empty host in url '" + url + "'");
  }
  return out;
}

EventDispatcher::EventDispatcher(int max_attempts, int backoff_base_ms)
    : max_attempts_(max_attempts), backoff_base_ms_(backoff_base_ms) {}

EventDispatcher::~EventDispatcher() { stop(); }

void EventDispatcher::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { worker(); });
}

void EventDispatcher::stop() {
  if (!running_.exchange(false)) return;
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::string EventDispatcher::add_subscription(const std::string& callback_url,
                                              SubscriptionFilter filter) {
  parse_http_url(callback_url);  // validate
  std::lock_guard<std::mutex> lock(mutex_);
  std::string id = "sub-" + std::to_string(next_id_.fetch_add(1));
  subscriptions_.push_back(Subscription{id, callback_url, std::move(filter)});
  return id;
}

bool EventDispatcher::remove_subscription(const std::string& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = std::find_if(subscriptions_.begin(), subscriptions_.end(),
                         [&](const auto& s) { return s.id == id; });
  if (it == subscriptions_.end()) return false;
  subscriptions_.erase(it);
  return true;
}

std::vector<Subscription> EventDispatcher::subscriptions() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return subscriptions_;
}

size_t EventDispatcher::live_count(const std::string& shell_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  size_t n = 0;
  for (const auto& s : subscriptions_) {
    if (!s.filter.shell_id || *s.filter.shell_id == shell_id) ++n;
  }
  return n;
}

void EventDispatcher::publish(const Event& event) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto now = std::chrono::steady_clock::now();
  for (const auto& s : subscriptions_) {
    if (s.filter.shell_id && *s.filter.shell_id != event.shell_id) continue;
    if (s.filter.path_prefix && !event.path.starts_with(*s.filter.path_prefix)) {
      continue;
    }
    queue_.push_back(Pending{event, s.id, s.callback_url, 0, now});
  }
  cv_.notify_all();
}

void EventDispatcher::drain() {
  std::unique_lock<std::mutex> lock(mutex_);
  cv_.wait(lock, [this] {
    return (queue_.empty() && in_flight_ == 0) || !running_.load();
  });
}

std::vector<DeliveryRecord> EventDispatcher::delivery_log() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

bool EventDispatcher::try_deliver(const Pending& p) {
  try {
    ParsedUrl url = parse_http_url(p.callback_url);
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(5, 0);
    json body;
    body["subscriptionId"] = p.subscription_id;
    body["shellId"] = p.event.shell_id;
    body["path"] = p.event.path;
    body["old"] = p.event.old_value;
    body["new"] = p.event.new_value;
    body["ts"] = p.event.ts;
    auto res = client.Post(url.path, body.dump(), "application/json");
    return res && res->status >= 200 && res->status < 300;
  } catch (const Error&) {
    return false;
  }
}

void EventDispatcher::worker() {
  while (running_) {
    Pending item;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_.wait_for(lock, std::chrono::milliseconds(20), [this] {
        return !queue_.empty() || !running_.load();
      });
      if (!running_) break;
      auto now = std::chrono::steady_clock::now();
      auto it = std::find_if(queue_.begin(), queue_.end(),
                             [&](const Pending& p) { return p.due <= now; });
      if (it == queue_.end()) continue;
      item = std::move(*it);
      queue_.erase(it);
      ++in_flight_;
    }

    bool ok = try_deliver(item);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      --in_flight_;
      int attempt = item.attempt + 1;
      if (ok || attempt >= max_attempts_) {
        log_.push_back(DeliveryRecord{item.subscription_id, item.event.path,
                                      attempt, ok});
      } else {
        item.attempt = attempt;
        item.due = std::chrono::steady_clock::now() +
                   std::chrono::milliseconds(backoff_base_ms_ * (1 << (attempt - 1)));
        queue_.push_back(std::move(item));
      }
    }
    cv_.notify_all();
  }
}

}  // namespace shellforge::server
