#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace shellforge::asset {

struct SimConfig {
  uint16_t port = 0;       // 0: pick an ephemeral port
  int64_t seed = 0;        // reserved; the generators are closed-form
  double time_scale = 1.0; // simulated seconds per real second
};

// Stand-in for the physical entity: a TCP server speaking one JSON object
// per line. Operations:
//   {"op":"get","var":"temp","t":15}   -> {"t":15.0,"value":25.0,"var":"temp"}
//   {"op":"get","var":"temp"}          -> sampled at current simulated time
//   {"op":"set","var":"cooling","value":1} -> {"ok":true,"value":1.0,"var":"cooling"}
// Unknown variables answer {"error":"UnknownVariable"}. The actuator state
// "cooling" (0/1) is readable back via get and ignores t.
class Simulator {
public:
  explicit Simulator(SimConfig cfg);
  ~Simulator();

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Binds and starts serving. Throws Error{PortInUse}.
  void start();
  void stop();

  uint16_t port() const { return port_; }
  double sim_now() const;
  double cooling() const { return cooling_.load(); }

private:
  void accept_loop();
  void serve_connection(int fd);
  std::string handle_line(const std::string& line);

  SimConfig cfg_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<double> cooling_{0};
  std::chrono::steady_clock::time_point start_time_;
  std::thread accept_thread_;
  std::mutex conn_mutex_;
  std::vector<std::thread> conn_threads_;
};

}  // namespace shellforge::asset
