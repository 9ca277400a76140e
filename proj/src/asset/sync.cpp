#include "shellforge/asset/sync.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "shellforge/util/error.hpp"

namespace shellforge::asset {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// "<lhs> <cmp> <literal>" where lhs is "var" or "mean(var, n)".
SyncHandle::TriggerRule parse_trigger(const model::WriteBackRule& rule) {
  SyncHandle::TriggerRule out;
  out.command = rule.command;
  std::string_view text = rule.trigger;

  size_t cmp_pos = std::string_view::npos;
  std::string_view cmp_tok;
  for (std::string_view tok : {"<=", ">=", "<", ">", "="}) {
    size_t p = text.find(tok);
    if (p != std::string_view::npos &&
        (cmp_pos == std::string_view::npos || p < cmp_pos)) {
      cmp_pos = p;
      cmp_tok = tok;
    }
  }
  if (cmp_pos == std::string_view::npos) {
    throw Error(ErrorCode::ParseError,
                "trigger '" + rule.trigger + "': no comparison operator");
  }
  out.cmp = engine::comparison_from_token(cmp_tok);

  std::string_view lhs = trim(text.substr(0, cmp_pos));
  std::string_view rhs = trim(text.substr(cmp_pos + cmp_tok.size()));

  double lit = 0;
  auto [p, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), lit);
  if (ec != std::errc() || p != rhs.data() + rhs.size()) {
    throw Error(ErrorCode::ParseError,
                "trigger '" + rule.trigger + "': bad literal");
  }
  out.literal = lit;

  if (lhs.starts_with("mean(")) {
    if (!lhs.ends_with(")")) {
      throw Error(ErrorCode::ParseError,
                  "trigger '" + rule.trigger + "': missing ')'");
    }
    std::string_view inner = lhs.substr(5, lhs.size() - 6);
    size_t comma = inner.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::ParseError,
                  "trigger '" + rule.trigger + "': mean needs (var, n)");
    }
    out.windowed = true;
    out.var = std::string(trim(inner.substr(0, comma)));
    std::string_view n_text = trim(inner.substr(comma + 1));
    size_t n = 0;
    auto [np, nec] = std::from_chars(n_text.data(), n_text.data() + n_text.size(), n);
    if (nec != std::errc() || np != n_text.data() + n_text.size() || n < 1) {
      throw Error(ErrorCode::ParseError,
                  "trigger '" + rule.trigger + "': bad window size");
    }
    out.window_n = n;
  } else {
    out.var = std::string(lhs);
    out.window_n = 1;
  }
  if (out.var.empty()) {
    throw Error(ErrorCode::ParseError,
                "trigger '" + rule.trigger + "': empty variable");
  }
  return out;
}

bool compare(engine::Comparison cmp, double a, double b) {
  switch (cmp) {
    case engine::Comparison::Lt: return a < b;
    case engine::Comparison::Le: return a <= b;
    case engine::Comparison::Eq: return a == b;
    case engine::Comparison::Ge: return a >= b;
    case engine::Comparison::Gt: return a > b;
  }
  return false;
}

}  // namespace

std::unique_ptr<SyncHandle> start_sync(const model::AasPackage& pkg,
                                       const model::SyncConfig& sync,
                                       classify::RuntimeStrategy strategy,
                                       ValueSink sink) {
  if (strategy == classify::RuntimeStrategy::Passive) {
    throw Error(ErrorCode::StrategyForbidsSync,
                "a passive runtime cannot run sync loops");
  }
  if (pkg.endpoints.empty()) {
    throw Error(ErrorCode::EndpointUnreachable, "package declares no endpoint");
  }
  if (sync.poll_interval_s <= 0) {
    throw Error(ErrorCode::SchemaViolation, "pollInterval must be > 0");
  }

  auto handle = std::unique_ptr<SyncHandle>(new SyncHandle());
  handle->cfg_ = sync;
  handle->endpoint_ = pkg.endpoints.front();
  handle->sink_ = std::move(sink);

  bool outbound = sync.outbound == model::FlowMode::Automatic;
  if (outbound) {
    for (const auto& rule : sync.write_back_rules) {
      handle->rules_.push_back(parse_trigger(rule));
    }
  }
  std::set<std::string> vars;
  if (sync.inbound == model::FlowMode::Automatic) {
    for (const auto& m : sync.mappings) vars.insert(m.var);
  }
  for (const auto& r : handle->rules_) vars.insert(r.var);
  handle->poll_vars_.assign(vars.begin(), vars.end());

  // Fail fast when the asset is down, per the start_sync contract.
  AssetSession::connect(handle->endpoint_.host, handle->endpoint_.port).close();

  handle->running_ = true;
  handle->thread_ = std::thread([h = handle.get()] { h->loop(); });
  return handle;
}

SyncHandle::~SyncHandle() { stop(); }

void SyncHandle::stop() {
  if (!running_.exchange(false)) return;
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::vector<PollRecord> SyncHandle::poll_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return poll_log_;
}

std::vector<FireRecord> SyncHandle::fire_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return fire_log_;
}

void SyncHandle::loop() {
  AssetSession session;
  while (running_) {
    try {
      if (!session.connected()) {
        session = AssetSession::connect(endpoint_.host, endpoint_.port);
        degraded_ = false;
      }
      poll_once(session);
      polls_.fetch_add(1);
    } catch (const Error&) {
      degraded_ = true;
      session.close();
    }
    std::unique_lock<std::mutex> lock(cv_mutex_);
    cv_.wait_for(lock,
                 std::chrono::duration<double>(cfg_.poll_interval_s),
                 [this] { return !running_.load(); });
  }
}

void SyncHandle::poll_once(AssetSession& session) {
  std::map<std::string, Sample> current;
  for (const auto& var : poll_vars_) {
    Sample s = session.fetch_simple(var);
    current[var] = s;
    auto& hist = history_[var];
    hist.emplace_back(s.ts, s.value);
    size_t cap = 1;
    for (const auto& r : rules_) {
      if (r.var == var) cap = std::max(cap, r.window_n);
    }
    while (hist.size() > cap) hist.pop_front();
    std::lock_guard<std::mutex> lock(log_mutex_);
    poll_log_.push_back(PollRecord{s.ts, var, s.value});
  }

  if (cfg_.inbound == model::FlowMode::Automatic && sink_) {
    for (const auto& m : cfg_.mappings) {
      auto it = current.find(m.var);
      if (it != current.end()) {
        sink_(m.target, it->second.value, it->second.ts);
      }
    }
  }

  for (size_t i = 0; i < rules_.size(); ++i) {
    auto& rule = rules_[i];
    const auto& hist = history_[rule.var];
    if (hist.size() < rule.window_n) {
      rule.was_true = false;
      continue;
    }
    double observed = 0;
    if (rule.windowed) {
      double sum = 0;
      for (size_t k = hist.size() - rule.window_n; k < hist.size(); ++k) {
        sum += hist[k].second;
      }
      observed = sum / static_cast<double>(rule.window_n);
    } else {
      observed = hist.back().second;
    }
    bool now_true = compare(rule.cmp, observed, rule.literal);
    if (now_true && !rule.was_true) {
      session.send_set(rule.command.var, rule.command.value);
      std::lock_guard<std::mutex> lock(log_mutex_);
      fire_log_.push_back(FireRecord{hist.back().first, i, observed});
    }
    rule.was_true = now_true;
  }
}

}  // namespace shellforge::asset
