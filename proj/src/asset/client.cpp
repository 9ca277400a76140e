#include "shellforge/asset/client.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <cstring>

#include "shellforge/util/error.hpp"

namespace shellforge::asset {

using nlohmann::json;

Aggregation aggregation_from_name(std::string_view name) {
  if (name == "none") return Aggregation::None;
  if (name == "mean") return Aggregation::Mean;
  if (name == "min") return Aggregation::Min;
  if (name == "max") return Aggregation::Max;
  throw Error(ErrorCode::InvalidQuery,
              "unknown aggregation '" + std::string(name) + "'");
}

AssetSession::~AssetSession() { close(); }

AssetSession::AssetSession(AssetSession&& other) noexcept
    : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
  other.fd_ = -1;
}

AssetSession& AssetSession::operator=(AssetSession&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    buffer_ = std::move(other.buffer_);
    other.fd_ = -1;
  }
  return *this;
}

void AssetSession::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

AssetSession AssetSession::connect(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 ||
      !res) {
    throw Error(ErrorCode::EndpointUnreachable, host + ":" + std::to_string(port));
  }
  int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    if (fd >= 0) ::close(fd);
    freeaddrinfo(res);
    throw Error(ErrorCode::EndpointUnreachable, host + ":" + std::to_string(port));
  }
  freeaddrinfo(res);
  AssetSession s;
  s.fd_ = fd;
  return s;
}

std::string AssetSession::round_trip(const std::string& request_line) {
  if (fd_ < 0) {
    throw Error(ErrorCode::Disconnected, "session is closed");
  }
  std::string out = request_line + "\n";
  size_t sent = 0;
  while (sent < out.size()) {
    ssize_t n = send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      close();
      throw Error(ErrorCode::Disconnected, "send failed");
    }
    sent += static_cast<size_t>(n);
  }
  for (;;) {
    size_t pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[1024];
    ssize_t n = recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      close();
      throw Error(ErrorCode::Disconnected, "connection closed by peer");
    }
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

namespace {

json parse_reply(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::ProtocolError, "bad reply: " + line);
  }
  if (j.contains("error")) {
    std::string code = j["error"].get<std::string>();
    if (code == "UnknownVariable") {
      throw Error(ErrorCode::UnknownVariable, "");
    }
    throw Error(ErrorCode::ProtocolError, "simulator error: " + code);
  }
  return j;
}

}  // namespace

Sample AssetSession::fetch_simple(const std::string& var) {
  json req{{"op", "get"}, {"var", var}};
  json rep = parse_reply(round_trip(req.dump()));
  return Sample{var, rep["value"].get<double>(), rep["t"].get<double>()};
}

Sample AssetSession::fetch_at(const std::string& var, double t) {
  json req{{"op", "get"}, {"t", t}, {"var", var}};
  json rep = parse_reply(round_trip(req.dump()));
  return Sample{var, rep["value"].get<double>(), rep["t"].get<double>()};
}

void AssetSession::send_set(const std::string& var, double value) {
  json req{{"op", "set"}, {"value", value}, {"var", var}};
  parse_reply(round_trip(req.dump()));
}

void check_query(const QuerySpec& q, const model::EndpointDescriptor& endpoint) {
  if (!endpoint.parameterized) {
    throw Error(ErrorCode::NotParameterized,
                "endpoint only supports single named-variable fetches");
  }
  if (q.vars.empty()) {
    throw Error(ErrorCode::InvalidQuery, "no variables selected");
  }
  auto declared = [&](const std::string& name) {
    return std::any_of(endpoint.variables.begin(), endpoint.variables.end(),
                       [&](const auto& v) { return v.name == name; });
  };
  for (const auto& v : q.vars) {
    if (!declared(v)) {
      throw Error(ErrorCode::InvalidQuery, "variable '" + v + "' not declared");
    }
  }
  if (q.filter && !declared(q.filter->var)) {
    throw Error(ErrorCode::InvalidQuery,
                "filter variable '" + q.filter->var + "' not declared");
  }
  if (!(q.from <= q.to)) {
    throw Error(ErrorCode::InvalidQuery, "from must be <= to");
  }
  if (!(q.step > 0)) {
    throw Error(ErrorCode::InvalidQuery, "step must be > 0");
  }
}

SampleSet AssetSession::query(const QuerySpec& q,
                              const model::EndpointDescriptor& endpoint) {
  check_query(q, endpoint);

  std::vector<double> grid;
  for (int64_t i = 0;; ++i) {
    double t = q.from + static_cast<double>(i) * q.step;
    if (t > q.to) break;
    grid.push_back(t);
  }

  std::vector<double> kept;
  kept.reserve(grid.size());
  for (double t : grid) {
    if (q.filter) {
      double v = fetch_at(q.filter->var, t).value;
      bool pass = false;
      switch (q.filter->cmp) {
        case engine::Comparison::Lt: pass = v < q.filter->literal; break;
        case engine::Comparison::Le: pass = v <= q.filter->literal; break;
        case engine::Comparison::Eq: pass = v == q.filter->literal; break;
        case engine::Comparison::Ge: pass = v >= q.filter->literal; break;
        case engine::Comparison::Gt: pass = v > q.filter->literal; break;
      }
      if (!pass) continue;
    }
    kept.push_back(t);
  }

  SampleSet out;
  if (q.agg == Aggregation::None) {
    for (double t : kept) {
      for (const auto& var : q.vars) {
        out.samples.push_back(fetch_at(var, t));
      }
    }
    return out;
  }
  for (const auto& var : q.vars) {
    if (kept.empty()) continue;  // aggregate of nothing: no sample
    double acc = 0;
    bool first = true;
    for (double t : kept) {
      double v = fetch_at(var, t).value;
      if (q.agg == Aggregation::Mean) {
        acc += v;
      } else if (first) {
        acc = v;
      } else if (q.agg == Aggregation::Min) {
        acc = std::min(acc, v);
      } else {
        acc = std::max(acc, v);
      }
      first = false;
    }
    if (q.agg == Aggregation::Mean) {
      acc /= static_cast<double>(kept.size());
    }
    out.samples.push_back(Sample{var, acc, kept.back()});
  }
  return out;
}

}  // namespace shellforge::asset
