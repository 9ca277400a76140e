#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "shellforge/model/model.hpp"
#include "shellforge/model/package_io.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// ---- independent closed-form oracles -------------------------------------
// Deliberately re-derived here, not calls into the library, so tests check
// the implementation against a second evaluation of the same definitions.

inline double oracle_temp(double t) {
  return 20.0 + 5.0 * std::sin(2.0 * 3.141592653589793 * t / 60.0);
}
inline double oracle_rpm(double t) { return 1000.0 + std::fmod(t, 10.0) * 50.0; }
inline double oracle_jobs(double t) { return std::floor(t / 30.0); }

inline double oracle_signal(const std::string& var, double t) {
  if (var == "temp") return oracle_temp(t);
  if (var == "rpm") return oracle_rpm(t);
  return oracle_jobs(t);
}

inline double oracle_mean(const std::vector<double>& xs) {
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// temp(t) > threshold crossings within one period, from the arcsine.
struct Crossing {
  double rise;
  double fall;
};
inline Crossing oracle_temp_crossing(double threshold) {
  double phase = std::asin((threshold - 20.0) / 5.0);
  double rise = phase * 60.0 / (2.0 * 3.141592653589793);
  return {rise, 30.0 - rise};
}

// ---- filesystem helpers ---------------------------------------------------

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("shellforge-test-" + tag + "-" + std::to_string(getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline void write_file(const fs::path& p, std::string_view data) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

// Shared build dir for compiled helper services; populated once per test run.
inline std::string shared_build_dir() {
  static std::string dir = [] {
    auto p = fs::temp_directory_path() /
             ("shellforge-test-tools-" + std::to_string(getuid()));
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

// ---- tiny service programs used by sandbox and protocol tests -------------

inline constexpr std::string_view sleeper_source = R"(#include <unistd.h>
int main() { sleep(30); return 0; }
)";

inline constexpr std::string_view spinner_source = R"(volatile unsigned long long sink = 0;
int main() { for (;;) ++sink; return 0; }
)";

inline constexpr std::string_view crash3_source = "int main() { return 3; }\n";

inline constexpr std::string_view badjson_source = R"(#include <cstdio>
int main() { printf("this is not json\n"); return 0; }
)";

inline constexpr std::string_view echo_env_source = R"(#include <cstdio>
int main() { printf("{\"ok\":true}\n"); return 0; }
)";

// Tries to open a TCP connection to 127.0.0.1:9; exits 0 with {"net":true}
// if the socket layer worked (even a refused connect proves sockets were
// reachable), nonzero otherwise. Under the seccomp policy the first socket()
// call kills the process.
inline constexpr std::string_view netcheck_source = R"(#include <arpa/inet.h>
#include <cstdio>
#include <sys/socket.h>
#include <unistd.h>
int main() {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) { printf("{\"net\":false}\n"); return 4; }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(9);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  connect(fd, (sockaddr*)&addr, sizeof(addr));
  close(fd);
  printf("{\"net\":true}\n");
  return 0;
}
)";

// Allocate-then-idle used nowhere yet; here for completeness of budgets.

// ---- background process (bundle launcher) ---------------------------------

// Runs argv in the background, captures stdout, and kills the process group
// on destruction. wait_for_line() scans captured output for a marker.
class BackgroundProcess {
public:
  BackgroundProcess(const std::vector<std::string>& argv,
                    const std::string& cwd = "") {
    int fds[2];
    if (pipe(fds) != 0) return;
    pid_ = fork();
    if (pid_ == 0) {
      setpgid(0, 0);
      dup2(fds[1], STDOUT_FILENO);
      dup2(fds[1], STDERR_FILENO);
      close(fds[0]);
      close(fds[1]);
      if (!cwd.empty()) {
        if (chdir(cwd.c_str()) != 0) _exit(126);
      }
      std::vector<char*> cargv;
      for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
      cargv.push_back(nullptr);
      execvp(cargv[0], cargv.data());
      _exit(127);
    }
    close(fds[1]);
    out_fd_ = fds[0];
    int flags = fcntl(out_fd_, F_GETFL, 0);
    fcntl(out_fd_, F_SETFL, flags | O_NONBLOCK);
  }

  ~BackgroundProcess() { terminate(); }

  void terminate() {
    if (pid_ > 0) {
      kill(-pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
    if (out_fd_ >= 0) {
      close(out_fd_);
      out_fd_ = -1;
    }
  }

  // Polls captured stdout until a line containing `needle` shows up.
  // Returns that line (without newline), or empty on timeout.
  std::string wait_for_line(const std::string& needle, double timeout_s = 20) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
      char buf[4096];
      ssize_t n = read(out_fd_, buf, sizeof(buf));
      if (n > 0) captured_.append(buf, static_cast<size_t>(n));
      size_t pos = captured_.find(needle);
      if (pos != std::string::npos) {
        size_t line_start = captured_.rfind('\n', pos);
        line_start = line_start == std::string::npos ? 0 : line_start + 1;
        size_t line_end = captured_.find('\n', pos);
        if (line_end != std::string::npos) {
          return captured_.substr(line_start, line_end - line_start);
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return "";
  }

  const std::string& captured() const { return captured_; }
  bool started() const { return pid_ > 0; }

private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  std::string captured_;
};

// ---- package mutation helpers ---------------------------------------------

// Rebuilds the archive with one byte of one artifact payload flipped while
// keeping the original manifest; parse_package must answer ChecksumMismatch.
inline std::string flip_artifact_byte(const shellforge::model::AasPackage& pkg,
                                      size_t file_index, size_t byte_index) {
  shellforge::model::AasPackage copy = pkg;
  auto it = copy.artifact_files.begin();
  std::advance(it, file_index % copy.artifact_files.size());
  std::string& data = it->second;
  if (data.empty()) data = "x";
  byte_index %= data.size();
  data[byte_index] = static_cast<char>(data[byte_index] ^ 0x01);
  // Checksums intentionally stale.
  return shellforge::model::serialize_package(copy);
}

}  // namespace testsupport
