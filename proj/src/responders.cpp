#include "irtcat/responders.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>

#include "irtcat/irt.hpp"
#include "irtcat/rng.hpp"

namespace irtcat {

Responder matrix_responder(const ResponseMatrix& matrix, const std::string& model_id) {
  const int row = matrix.model_index(model_id);
  if (row < 0)
    throw LookupError("matrix_responder: unknown model '" + model_id + "'");
  const ResponseMatrix* m = &matrix;
  return [m, row, model_id](const std::string& item_id) -> int {
    const int col = m->item_index(item_id);
    if (col < 0)
      throw ResponderError("matrix responder: item '" + item_id + "' not in matrix");
    const std::int8_t v = m->at(row, col);
    if (v == ResponseMatrix::kMissing)
      throw ResponderError("matrix responder: model '" + model_id +
                           "' has no response for item '" + item_id + "'");
    return v;
  };
}

Responder simulated_responder(double theta_true, const ItemBank& bank, std::uint64_t seed) {
  if (!std::isfinite(theta_true))
    throw ConfigError("simulated_responder: theta_true must be finite");
  const ItemBank* b = &bank;
  auto rng = std::make_shared<CounterRng>(seed);
  return [b, theta_true, rng](const std::string& item_id) -> int {
    const ItemParameters& p = b->item(b->index_of(item_id)).params;
    return rng->next_double() < icc_3pl(p, theta_true) ? 1 : 0;
  };
}

namespace {

struct ChildPipes {
  int to_child = -1;
  int from_child = -1;
  pid_t pid = -1;
};

ChildPipes spawn_shell(const std::string& command) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw ResponderError("external responder: pipe() failed");
  const pid_t pid = fork();
  if (pid < 0)
    throw ResponderError("external responder: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  ChildPipes cp;
  cp.to_child = in_pipe[1];
  cp.from_child = out_pipe[0];
  cp.pid = pid;
  return cp;
}

void reap(pid_t pid, int* status) { waitpid(pid, status, 0); }

std::string run_one_exchange(const std::string& command, const std::string& request,
                             double timeout_seconds) {
  ChildPipes cp = spawn_shell(command);

  // A scorer that exits without reading makes this write raise SIGPIPE,
  // whose default action would kill the whole process; keep it blocked in
  // this thread so the failure comes back as EPIPE and the read below can
  // report what actually happened.
  sigset_t pipe_set, old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);

  // request first, then close stdin so line-oriented scorers see EOF
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = write(cp.to_child, request.data() + written, request.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;  // child may have exited early; the read below reports it
    }
    written += static_cast<std::size_t>(n);
  }
  close(cp.to_child);

  // swallow any SIGPIPE generated above before restoring the caller's mask
  struct timespec ts = {0, 0};
  while (sigtimedwait(&pipe_set, nullptr, &ts) > 0) {
  }
  pthread_sigmask(SIG_SETMASK, &old_set, nullptr);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);
  std::string out;
  char buf[512];
  bool timed_out = false;
  while (out.find('\n') == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    struct pollfd pfd {};
    pfd.fd = cp.from_child;
    pfd.events = POLLIN;
    const int pr = poll(&pfd, 1, static_cast<int>(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (pr == 0) {
      timed_out = true;
      break;
    }
    const ssize_t n = read(cp.from_child, buf, sizeof buf);
    if (n <= 0) break;  // EOF or error; whatever arrived is in `out`
    out.append(buf, static_cast<std::size_t>(n));
  }
  close(cp.from_child);

  if (timed_out) {
    kill(cp.pid, SIGKILL);
    int status = 0;
    reap(cp.pid, &status);
    throw ResponderError("external responder: command timed out after " +
                         std::to_string(timeout_seconds) + " s");
  }
  int status = 0;
  reap(cp.pid, &status);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw ResponderError("external responder: command exited with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  return out;
}

}  // namespace

Responder external_responder(const std::string& command, ExternalOptions options) {
  if (command.empty())
    throw ConfigError("external_responder: empty command");
  if (!(options.timeout_seconds > 0.0))
    throw ConfigError("external_responder: timeout must be positive");
  auto opts = std::make_shared<ExternalOptions>(std::move(options));
  return [command, opts](const std::string& item_id) -> int {
    nlohmann::ordered_json req;
    req["item_id"] = item_id;
    req["meta"] = opts->meta.contains(item_id) ? opts->meta[item_id]
                                               : nlohmann::json::object();
    const std::string payload = req.dump() + "\n";

    const std::string raw = run_one_exchange(command, payload, opts->timeout_seconds);
    const std::size_t eol = raw.find('\n');
    const std::string line = eol == std::string::npos ? raw : raw.substr(0, eol);
    if (line.empty())
      throw ResponderError("external responder: no output for item '" + item_id + "'");
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ResponderError("external responder: unparseable reply '" + line + "'");
    }
    if (!resp.is_object() || !resp.contains("correct") ||
        !resp["correct"].is_number_integer())
      throw ResponderError("external responder: reply lacks integer field 'correct'");
    const int y = resp["correct"].get<int>();
    if (y != 0 && y != 1)
      throw ResponderError("external responder: 'correct' must be 0 or 1, got " +
                           std::to_string(y));
    return y;
  };
}

}  // namespace irtcat
