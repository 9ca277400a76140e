#include "shellforge/engine/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#if defined(__x86_64__)
#include <linux/audit.h>
#include <linux/filter.h>
#include <linux/seccomp.h>
#include <stddef.h>
#include <sys/syscall.h>
#endif

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "shellforge/util/error.hpp"

namespace shellforge::engine {

namespace {

#if defined(__x86_64__)
#ifndef SECCOMP_RET_KILL_PROCESS
#define SECCOMP_RET_KILL_PROCESS 0x80000000U
#endif

// Installs a default-allow filter that kills the process on socket-family
// syscalls. Must run after fork, before exec; async-signal-safe.
bool install_network_deny() {
  static const uint32_t blocked[] = {
      __NR_socket, __NR_connect, __NR_accept, __NR_sendto, __NR_recvfrom,
      __NR_sendmsg, __NR_recvmsg, __NR_bind, __NR_listen, __NR_socketpair,
      __NR_accept4, __NR_recvmmsg, __NR_sendmmsg,
  };
  constexpr unsigned n = sizeof(blocked) / sizeof(blocked[0]);
  struct sock_filter prog[4 + n + 2];
  prog[0] = BPF_STMT(BPF_LD | BPF_W | BPF_ABS,
                     offsetof(struct seccomp_data, arch));
  prog[1] = BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AUDIT_ARCH_X86_64, 1, 0);
  prog[2] = BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS);
  prog[3] = BPF_STMT(BPF_LD | BPF_W | BPF_ABS,
                     offsetof(struct seccomp_data, nr));
  for (unsigned i = 0; i < n; ++i) {
    prog[4 + i] = BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, blocked[i],
                           static_cast<__u8>(n - i), 0);
  }
  prog[4 + n] = BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW);
  prog[5 + n] = BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS);

  struct sock_fprog fprog;
  fprog.len = sizeof(prog) / sizeof(prog[0]);
  fprog.filter = prog;
  if (prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) return false;
  return prctl(PR_SET_SECCOMP, SECCOMP_MODE_FILTER, &fprog) == 0;
}
#else
bool install_network_deny() { return false; }
#endif

void ignore_sigpipe_once() {
  static const bool done = [] {
    struct sigaction sa {};
    sa.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &sa, nullptr);
    return true;
  }();
  (void)done;
}

void set_nonblocking(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

struct Pipe {
  int r = -1, w = -1;
  bool open() {
    int fds[2];
    if (pipe(fds) != 0) return false;
    r = fds[0];
    w = fds[1];
    return true;
  }
  void close_r() { if (r >= 0) { ::close(r); r = -1; } }
  void close_w() { if (w >= 0) { ::close(w); w = -1; } }
  ~Pipe() { close_r(); close_w(); }
};

}  // namespace

RunResult run_supervised(const std::vector<std::string>& argv,
                         std::string_view stdin_data, const RunLimits& limits,
                         const std::string& working_dir) {
  using clock = std::chrono::steady_clock;
  if (argv.empty()) {
    throw Error(ErrorCode::ServiceCrashed, "empty argv");
  }
  ignore_sigpipe_once();

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  Pipe in, out, err;
  if (!in.open() || !out.open() || !err.open()) {
    throw Error(ErrorCode::ServiceCrashed, "pipe() failed");
  }

  pid_t pid = fork();
  if (pid < 0) {
    throw Error(ErrorCode::ServiceCrashed, "fork() failed");
  }
  if (pid == 0) {
    // Child. Only async-signal-safe calls until exec.
    setpgid(0, 0);
    dup2(in.r, STDIN_FILENO);
    dup2(out.w, STDOUT_FILENO);
    dup2(err.w, STDERR_FILENO);
    ::close(in.r); ::close(in.w);
    ::close(out.r); ::close(out.w);
    ::close(err.r); ::close(err.w);
    if (!working_dir.empty() && chdir(working_dir.c_str()) != 0) _exit(126);
    if (limits.cpu_time_s > 0) {
      rlim_t soft = static_cast<rlim_t>(std::ceil(limits.cpu_time_s));
      if (soft < 1) soft = 1;
      struct rlimit rl { soft, soft + 1 };
      setrlimit(RLIMIT_CPU, &rl);
    }
    if (limits.memory_bytes > 0) {
      struct rlimit rl { limits.memory_bytes, limits.memory_bytes };
      setrlimit(RLIMIT_AS, &rl);
    }
    struct rlimit core { 0, 0 };
    setrlimit(RLIMIT_CORE, &core);
    if (!limits.allow_network) {
      install_network_deny();  // best effort; capability reported separately
    }
    execvp(cargv[0], cargv.data());
    _exit(127);
  }

  // Parent.
  setpgid(pid, pid);  // either parent or child wins the race; both set it
  in.close_r();
  out.close_w();
  err.close_w();
  set_nonblocking(in.w);
  set_nonblocking(out.r);
  set_nonblocking(err.r);

  RunResult result;
  auto start = clock::now();
  auto deadline = limits.wall_time_s > 0
                      ? start + std::chrono::duration_cast<clock::duration>(
                                    std::chrono::duration<double>(limits.wall_time_s))
                      : clock::time_point::max();

  size_t written = 0;
  bool reaped = false;
  int status = 0;
  bool killed = false;

  while (true) {
    if (!reaped) {
      pid_t r = waitpid(pid, &status, WNOHANG);
      if (r == pid) reaped = true;
    }

    struct pollfd fds[3];
    nfds_t nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in.w >= 0) {
      idx_in = nfds;
      fds[nfds++] = {in.w, POLLOUT, 0};
    }
    if (out.r >= 0) {
      idx_out = nfds;
      fds[nfds++] = {out.r, POLLIN, 0};
    }
    if (err.r >= 0) {
      idx_err = nfds;
      fds[nfds++] = {err.r, POLLIN, 0};
    }
    if (nfds == 0 && reaped) break;

    auto now = clock::now();
    if (!killed && now >= deadline) {
      kill(-pid, SIGKILL);
      killed = true;
      result.wall_exceeded = true;
    }
    int timeout_ms = 20;
    if (deadline != clock::time_point::max() && !killed) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - now).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(left, 1, 20));
    }
    if (nfds == 0) {
      // Child alive with all pipes done: wait for exit or deadline.
      struct timespec ts{0, 5 * 1000 * 1000};
      nanosleep(&ts, nullptr);
      continue;
    }
    poll(fds, nfds, timeout_ms);

    if (idx_in >= 0 && in.w >= 0) {
      if (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP)) {
        if (written < stdin_data.size() && (fds[idx_in].revents & POLLOUT)) {
          ssize_t n = write(in.w, stdin_data.data() + written,
                            stdin_data.size() - written);
          if (n > 0) written += static_cast<size_t>(n);
          else if (n < 0 && errno != EAGAIN && errno != EINTR) in.close_w();
        }
        if (written >= stdin_data.size() ||
            (fds[idx_in].revents & (POLLERR | POLLHUP))) {
          in.close_w();
        }
      }
    }
    auto drain = [](int& fd, std::string& sink) {
      char buf[4096];
      for (;;) {
        ssize_t n = read(fd, buf, sizeof(buf));
        if (n > 0) {
          sink.append(buf, static_cast<size_t>(n));
        } else if (n == 0) {
          ::close(fd);
          fd = -1;
          return;
        } else {
          if (errno == EAGAIN || errno == EINTR) return;
          ::close(fd);
          fd = -1;
          return;
        }
      }
    };
    if (idx_out >= 0 && out.r >= 0 &&
        (fds[idx_out].revents & (POLLIN | POLLHUP | POLLERR))) {
      drain(out.r, result.stdout_data);
    }
    if (idx_err >= 0 && err.r >= 0 &&
        (fds[idx_err].revents & (POLLIN | POLLHUP | POLLERR))) {
      drain(err.r, result.stderr_data);
    }
  }

  if (!reaped) {
    waitpid(pid, &status, 0);
  }
  // Sweep stragglers in the group.
  kill(-pid, SIGKILL);

  result.wall_seconds =
      std::chrono::duration<double>(clock::now() - start).count();
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    result.exec_failed = result.exit_code == 127;
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
    if (result.term_signal == SIGXCPU) result.cpu_exceeded = true;
    if (result.term_signal == SIGSYS) result.sandbox_killed = true;
    // SIGKILL after the cpu rlimit hard cap, without the watchdog firing.
    if (result.term_signal == SIGKILL && !result.wall_exceeded &&
        limits.cpu_time_s > 0) {
      result.cpu_exceeded = true;
    }
  }
  return result;
}

SandboxCapabilities probe_sandbox() {
  SandboxCapabilities caps;
  caps.rlimit_cpu = true;
  struct rlimit rl;
  caps.rlimit_memory = getrlimit(RLIMIT_AS, &rl) == 0;

  pid_t pid = fork();
  if (pid == 0) {
    _exit(install_network_deny() ? 0 : 1);
  }
  if (pid > 0) {
    int status = 0;
    waitpid(pid, &status, 0);
    caps.seccomp_network_block = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }
  return caps;
}

}  // namespace shellforge::engine
