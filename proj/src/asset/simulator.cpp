#include "shellforge/asset/simulator.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include <cerrno>
#include <cstring>

#include "shellforge/asset/signals.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::asset {

using nlohmann::json;

Simulator::Simulator(SimConfig cfg) : cfg_(cfg) {
  if (cfg_.time_scale <= 0) {
    throw Error(ErrorCode::SchemaViolation, "time_scale must be > 0");
  }
}

Simulator::~Simulator() { stop(); }

void Simulator::start() {
  listen_fd_ = socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(ErrorCode::IoError, "socket() failed");
  }
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(cfg_.port);
  if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::PortInUse, "port " + std::to_string(cfg_.port));
  }
  socklen_t len = sizeof(addr);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::PortInUse, "listen() failed");
  }
  start_time_ = std::chrono::steady_clock::now();
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Simulator::stop() {
  if (!running_.exchange(false)) return;
  shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard<std::mutex> lock(conn_mutex_);
  for (auto& t : conn_threads_) {
    if (t.joinable()) t.join();
  }
  conn_threads_.clear();
}

double Simulator::sim_now() const {
  auto elapsed = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start_time_).count();
  return elapsed * cfg_.time_scale;
}

void Simulator::accept_loop() {
  while (running_) {
    int fd = accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    std::lock_guard<std::mutex> lock(conn_mutex_);
    conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Simulator::serve_connection(int fd) {
  // Bounded recv so connection threads notice stop() and join promptly.
  timeval tv{0, 100 * 1000};
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  std::string buffer;
  char chunk[1024];
  while (running_) {
    ssize_t n = recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      std::string reply = handle_line(line) + "\n";
      size_t sent = 0;
      while (sent < reply.size()) {
        ssize_t s = send(fd, reply.data() + sent, reply.size() - sent,
                         MSG_NOSIGNAL);
        if (s <= 0) {
          ::close(fd);
          return;
        }
        sent += static_cast<size_t>(s);
      }
    }
  }
  ::close(fd);
}

std::string Simulator::handle_line(const std::string& line) {
  json req = json::parse(line, nullptr, false);
  if (req.is_discarded() || !req.is_object() || !req.contains("op")) {
    return json{{"error", "BadRequest"}}.dump();
  }
  std::string op = req["op"].get<std::string>();
  if (op == "get") {
    if (!req.contains("var") || !req["var"].is_string()) {
      return json{{"error", "BadRequest"}}.dump();
    }
    std::string var = req["var"].get<std::string>();
    if (var == "cooling") {
      double t = req.contains("t") ? req["t"].get<double>() : sim_now();
      return json{{"t", t}, {"value", cooling_.load()}, {"var", var}}.dump();
    }
    if (!is_signal_variable(var)) {
      return json{{"error", "UnknownVariable"}}.dump();
    }
    double t = req.contains("t") ? req["t"].get<double>() : sim_now();
    return json{{"t", t}, {"value", sim_signal(var, t)}, {"var", var}}.dump();
  }
  if (op == "set") {
    if (!req.contains("var") || !req["var"].is_string() ||
        !req.contains("value") || !req["value"].is_number()) {
      return json{{"error", "BadRequest"}}.dump();
    }
    std::string var = req["var"].get<std::string>();
    if (var != "cooling") {
      return json{{"error", is_signal_variable(var) ? "NotWritable"
                                                    : "UnknownVariable"}}.dump();
    }
    double value = req["value"].get<double>();
    cooling_.store(value != 0 ? 1 : 0);
    return json{{"ok", true}, {"value", cooling_.load()}, {"var", var}}.dump();
  }
  return json{{"error", "BadRequest"}}.dump();
}

}  // namespace shellforge::asset
