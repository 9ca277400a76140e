#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shellforge::engine {

struct RunLimits {
  double cpu_time_s = 0;      // 0: unlimited
  double wall_time_s = 0;     // 0: unlimited
  uint64_t memory_bytes = 0;  // 0: unlimited (address-space rlimit)
  bool allow_network = false;
};

struct RunResult {
  int exit_code = -1;          // valid when term_signal == 0
  int term_signal = 0;
  bool wall_exceeded = false;  // killed by the supervisor's wall watchdog
  bool cpu_exceeded = false;   // died of SIGXCPU (RLIMIT_CPU)
  bool sandbox_killed = false; // died of SIGSYS (seccomp policy)
  bool exec_failed = false;
  std::string stdout_data;
  std::string stderr_data;
  double wall_seconds = 0;
};

struct SandboxCapabilities {
  bool seccomp_network_block = false;
  bool rlimit_cpu = false;
  bool rlimit_memory = false;
};

// Launches argv[0] in its own process group with rlimit-based cpu/memory
// budgets and, unless allow_network, a seccomp filter that kills the process
// on any socket-family syscall. Feeds stdin_data, captures both output
// streams, and SIGKILLs the whole group when the wall budget elapses.
RunResult run_supervised(const std::vector<std::string>& argv,
                         std::string_view stdin_data, const RunLimits& limits,
                         const std::string& working_dir = "");

// Probes what the host can enforce; reported in serve startup diagnostics.
SandboxCapabilities probe_sandbox();

}  // namespace shellforge::engine
