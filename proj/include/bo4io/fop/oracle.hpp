#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "bo4io/fop/forward.hpp"

namespace bo4io {

inline constexpr std::string_view kSolutionMagic = "bo4io-sol v1";
inline constexpr const char* kOracleEnv = "BO4IO_ORACLE_CMD";

namespace detail {

struct ProcessResult {
  int exit_status = 0;
  std::string out;
};

/// Runs `/bin/sh -c command`, feeding `input` on stdin and collecting stdout. Throws IoError on
/// spawn failure or timeout (the child is killed).
inline ProcessResult run_process(const std::string& command, const std::string& input, double timeout_s) {
  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw IoError("oracle: pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw IoError("oracle: pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw IoError("oracle: fork failed");
  }
  if (pid == 0) {
    setpgid(0, 0);  // own process group so a timeout can kill the whole command tree
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(in_pipe[0]);
  close(out_pipe[1]);
  int wfd = in_pipe[1];
  const int rfd = out_pipe[0];
  fcntl(wfd, F_SETFL, O_NONBLOCK);

  ProcessResult res;
  std::size_t written = 0;
  if (input.empty()) {
    close(wfd);
    wfd = -1;
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {rfd, POLLIN, 0};
    if (wfd >= 0) fds[nfds++] = {wfd, POLLOUT, 0};
    const int pr = poll(fds, nfds, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (pr < 0 && errno != EINTR) break;
    if (pr <= 0) continue;
    if (wfd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = write(wfd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) written = input.size();  // reader went away
      if (written >= input.size()) {
        close(wfd);
        wfd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = read(rfd, buf, sizeof(buf));
      if (n > 0) res.out.append(buf, static_cast<std::size_t>(n));
      else if (n == 0 || errno != EAGAIN) break;  // EOF
    }
  }
  if (wfd >= 0) close(wfd);
  close(rfd);
  if (timed_out) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
    throw IoError("oracle: command timed out after " + std::to_string(timeout_s) + " s: " + command);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return res;
}

}  // namespace detail

/// Forward problem solved by an external command. Protocol: the command reads on stdin the
/// network document followed by `input <field> <values...>` lines and a `theta <values...>` line;
/// it writes a `bo4io-sol v1` document with `status`, `objective` and one line per variable block
/// (`<block> <values...>`, blocks as in the bundled solver's layout).
class OracleForward final : public ForwardProblem {
 public:
  OracleForward(std::shared_ptr<const ForwardProblem> base, std::string command, double timeout_s = 60.0)
      : base_(std::move(base)), command_(std::move(command)), timeout_s_(timeout_s) {
    if (command_.empty()) throw ConfigError("oracle: empty command");
    if (!(timeout_s_ > 0.0)) throw ConfigError("oracle: timeout must be positive");
  }

  std::string family() const override { return base_->family(); }
  Eigen::Index parameter_size() const override { return base_->parameter_size(); }
  std::vector<VariableBlock> layout() const override { return base_->layout(); }
  TextDocument document() const override { return base_->document(); }
  Vector nominal_parameters() const override { return base_->nominal_parameters(); }
  Eigen::Index parameter_block() const override { return base_->parameter_block(); }

  std::string request(const InputFields& u, const Vector& theta) const {
    TextDocument doc = base_->document();
    for (const auto& [key, values] : u) doc.add("input", {key}, values);
    doc.add("theta", {}, theta);
    return doc.serialize();
  }

  FopSolution solve(const InputFields& u, const Vector& theta) const override {
    const auto res = detail::run_process(command_, request(u, theta), timeout_s_);
    if (res.exit_status != 0)
      throw IoError("oracle: command exited with status " + std::to_string(res.exit_status) + ": " + command_);
    TextDocument doc;
    try {
      doc = TextDocument::parse_string(res.out, kSolutionMagic, "oracle output");
    } catch (const InputError& e) {
      throw IoError(std::string("oracle: malformed reply: ") + e.what());
    }
    FopSolution s;
    try {
      s.status = parse_status(doc.string("status"));
      if (!s.usable()) return s;
      s.objective = doc.number("objective");
      s.layout = layout();
      Eigen::Index n = 0;
      for (const auto& b : s.layout) n = std::max(n, b.offset + b.size);
      s.x = Vector::Zero(n);
      for (const auto& b : s.layout) {
        const Vector v = doc.numbers(b.name);
        if (v.size() != b.size)
          throw InputError("block '" + b.name + "' has " + std::to_string(v.size()) + " values, expected " +
                           std::to_string(b.size));
        s.x.segment(b.offset, b.size) = v;
      }
      s.gap_bound = doc.number_or("gap_bound", 0.0);
    } catch (const InputError& e) {
      throw IoError(std::string("oracle: malformed reply: ") + e.what());
    }
    return s;
  }

 private:
  std::shared_ptr<const ForwardProblem> base_;
  std::string command_;
  double timeout_s_;
};

/// Wraps `fp` in an external oracle when BO4IO_ORACLE_CMD is set.
inline std::shared_ptr<const ForwardProblem> with_env_oracle(std::shared_ptr<const ForwardProblem> fp,
                                                             double timeout_s = 60.0) {
  const char* cmd = std::getenv(kOracleEnv);
  if (cmd == nullptr || *cmd == '\0') return fp;
  return std::make_shared<OracleForward>(std::move(fp), cmd, timeout_s);
}

}  // namespace bo4io
