#include "ocsi/scorer_client.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <optional>
#include <unordered_map>

#include <json.hpp>

namespace ocsi {

using nlohmann::json;

const char* to_string(ScorerErrc code) {
  switch (code) {
    case ScorerErrc::connection: return "connection failure";
    case ScorerErrc::handshake: return "bad handshake";
    case ScorerErrc::malformed_response: return "malformed response line";
    case ScorerErrc::unknown_pair_id: return "unknown pair id";
    case ScorerErrc::missing_pair_id: return "missing pair id";
    case ScorerErrc::duplicate_pair_id: return "duplicate response";
    case ScorerErrc::confidence_out_of_range: return "confidence outside [0,1]";
    case ScorerErrc::missing_response: return "missing response";
    case ScorerErrc::empty_request: return "empty request";
  }
  return "scorer error";
}

ScorerEndpoint ScorerEndpoint::parse(std::string_view spec) {
  ScorerEndpoint ep;
  if (spec.starts_with("cmd:")) {
    ep.transport = Transport::command;
    ep.command = std::string(spec.substr(4));
    if (ep.command.empty()) throw InvalidInput("scorer endpoint: empty command");
    return ep;
  }
  if (spec.starts_with("tcp:")) {
    const std::string_view rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size())
      throw InvalidInput("scorer endpoint: expected tcp:<host>:<port>, got '" + std::string(spec) + "'");
    ep.transport = Transport::tcp;
    ep.host = std::string(rest.substr(0, colon));
    ep.port = std::string(rest.substr(colon + 1));
    return ep;
  }
  throw InvalidInput("scorer endpoint must start with 'cmd:' or 'tcp:', got '" + std::string(spec) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

// A byte stream to one scorer instance: a child process on pipes or a TCP socket.
class Connection {
 public:
  static Connection open(const ScorerEndpoint& ep) {
    ignore_sigpipe();
    return ep.transport == ScorerEndpoint::Transport::command ? spawn(ep.command) : dial(ep.host, ep.port);
  }

  Connection(Connection&& o) noexcept
      : write_fd_(std::move(o.write_fd_)), read_fd_(std::move(o.read_fd_)), child_(std::exchange(o.child_, -1)) {}
  Connection& operator=(Connection&&) = delete;

  ~Connection() {
    write_fd_.reset();
    read_fd_.reset();
    if (child_ > 0) {
      int status = 0;
      // The child sees EOF on stdin; give it a moment, then make sure it goes.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(child_, &status, WNOHANG) != 0) return;
        ::usleep(2000);
      }
      // The shell may have forked the scorer, so signal the whole group.
      ::kill(-child_, SIGTERM);
      ::waitpid(child_, &status, 0);
    }
  }

  int write_fd() const { return write_fd_.get(); }
  int read_fd() const { return read_fd_.get(); }
  void close_write() {
    if (child_ > 0) {
      write_fd_.reset();
    } else if (write_fd_.get() >= 0) {
      ::shutdown(write_fd_.get(), SHUT_WR);
    }
  }

 private:
  Connection(Fd w, Fd r, pid_t child) : write_fd_(std::move(w)), read_fd_(std::move(r)), child_(child) {}

  static Connection spawn(const std::string& command) {
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ScorerError(ScorerErrc::connection, "pipe: " + std::string(std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw ScorerError(ScorerErrc::connection, "pipe: " + std::string(std::strerror(errno)));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw ScorerError(ScorerErrc::connection, "fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::signal(SIGPIPE, SIG_DFL);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    return Connection(Fd(in_pipe[1]), Fd(out_pipe[0]), pid);
  }

  static Connection dial(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw ScorerError(ScorerErrc::connection, "resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
      if (fd.get() < 0) continue;
      if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
        ::freeaddrinfo(res);
        const int raw = ::dup(fd.get());
        return Connection(std::move(fd), Fd(raw), -1);
      }
      last_error = std::strerror(errno);
    }
    ::freeaddrinfo(res);
    throw ScorerError(ScorerErrc::connection, "connect " + host + ":" + port + ": " + last_error);
  }

  Fd write_fd_;
  Fd read_fd_;
  pid_t child_ = -1;
};

// Buffered line reader over a file descriptor with a deadline.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  // Extracts a complete buffered line, if any.
  std::optional<std::string> take_line() {
    const auto nl = buffer_.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::string line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads whatever is available; false on EOF.
  bool fill() {
    char buf[65536];
    for (;;) {
      const ssize_t n = ::read(fd_, buf, sizeof buf);
      if (n > 0) {
        buffer_.append(buf, static_cast<std::size_t>(n));
        return true;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      throw ScorerError(ScorerErrc::connection, "read: " + std::string(std::strerror(errno)));
    }
  }

  std::string read_line(Clock::time_point deadline) {
    for (;;) {
      if (auto line = take_line()) return *line;
      wait_readable(deadline);
      if (!fill()) throw ScorerError(ScorerErrc::connection, "scorer closed the stream");
    }
  }

  void wait_readable(Clock::time_point deadline) {
    pollfd p{fd_, POLLIN, 0};
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) throw ScorerError(ScorerErrc::connection, "timed out waiting for scorer");
      const int rc = ::poll(&p, 1, static_cast<int>(left));
      if (rc > 0) return;
      if (rc < 0 && errno != EINTR) throw ScorerError(ScorerErrc::connection, "poll: " + std::string(std::strerror(errno)));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

void check_handshake(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error&) {
    throw ScorerError(ScorerErrc::handshake, "not JSON: " + line);
  }
  if (!doc.is_object() || doc.value("hello", "") != "matcher" || !doc.contains("version") ||
      !doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
    throw ScorerError(ScorerErrc::handshake, "unexpected handshake: " + line);
}

struct Response {
  std::string id;
  double confidence;
};

Response parse_response(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error&) {
    throw ScorerError(ScorerErrc::malformed_response, line);
  }
  if (!doc.is_object()) throw ScorerError(ScorerErrc::malformed_response, line);
  if (!doc.contains("id") || !doc["id"].is_string()) throw ScorerError(ScorerErrc::missing_pair_id, line);
  if (!doc.contains("confidence") || !doc["confidence"].is_number())
    throw ScorerError(ScorerErrc::malformed_response, line);
  const double conf = doc["confidence"].get<double>();
  if (!std::isfinite(conf) || conf < 0.0 || conf > 1.0) throw ScorerError(ScorerErrc::confidence_out_of_range, line);
  return {doc["id"].get<std::string>(), conf};
}

// Sends every pending request and collects responses into `results` (indexed
// like `pairs`). Throws ScorerError(connection) if the stream breaks.
void exchange(const ScorerEndpoint& endpoint, std::span<const SerializedPair> pairs,
              const std::unordered_map<std::string, std::size_t>& index, std::vector<std::optional<double>>& results,
              std::chrono::milliseconds timeout) {
  Connection conn = Connection::open(endpoint);
  LineReader reader(conn.read_fd());
  check_handshake(reader.read_line(Clock::now() + timeout));

  std::string outbox;
  std::size_t outstanding = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i]) continue;
    outbox += json{{"id", pairs[i].pair_id}, {"text", pairs[i].text}}.dump();
    outbox += '\n';
    ++outstanding;
  }
  std::size_t written = 0;
  auto deadline = Clock::now() + timeout;
  bool write_closed = false;
  auto consume = [&](const std::string& line) {
    if (line.empty()) return;
    const Response resp = parse_response(line);
    auto it = index.find(resp.id);
    if (it == index.end()) throw ScorerError(ScorerErrc::unknown_pair_id, resp.id);
    if (results[it->second]) throw ScorerError(ScorerErrc::duplicate_pair_id, resp.id);
    results[it->second] = resp.confidence;
    --outstanding;
    deadline = Clock::now() + timeout;
  };

  while (outstanding > 0) {
    while (auto line = reader.take_line()) {
      consume(*line);
    }
    if (outstanding == 0) break;
    if (written == outbox.size() && !write_closed) {
      conn.close_write();
      write_closed = true;
    }

    pollfd fds[2] = {{conn.read_fd(), POLLIN, 0}, {conn.write_fd(), POLLOUT, 0}};
    const nfds_t nfds = (written < outbox.size()) ? 2 : 1;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw ScorerError(ScorerErrc::connection, "timed out waiting for scorer");
    const int rc = ::poll(fds, nfds, static_cast<int>(left));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ScorerError(ScorerErrc::connection, "poll: " + std::string(std::strerror(errno)));
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(conn.write_fd(), outbox.data() + written, outbox.size() - written);
      if (n < 0 && errno != EINTR && errno != EAGAIN)
        throw ScorerError(ScorerErrc::connection, "write: " + std::string(std::strerror(errno)));
      if (n > 0) written += static_cast<std::size_t>(n);
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      if (!reader.fill()) {
        while (auto line = reader.take_line()) {
          consume(*line);
        }
        if (outstanding > 0) throw ScorerError(ScorerErrc::connection, "scorer closed the stream early");
      }
    }
  }
}

}  // namespace

std::vector<HeavyScore> score_routed(std::span<const SerializedPair> pairs, const ScorerEndpoint& endpoint,
                                     const ScorerOptions& options) {
  if (pairs.empty()) throw ScorerError(ScorerErrc::empty_request, "no pairs to score");
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (!index.emplace(pairs[i].pair_id, i).second)
      throw InvalidInput("score_routed: duplicate pair id " + pairs[i].pair_id);

  std::vector<std::optional<double>> results(pairs.size());
  std::string last_error;
  const int attempts = std::max(1, options.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      exchange(endpoint, pairs, index, results, options.timeout);
      last_error.clear();
      break;
    } catch (const ScorerError& e) {
      if (e.code() != ScorerErrc::connection) throw;
      last_error = e.what();
    }
  }

  if (!last_error.empty())
    throw ScorerError(ScorerErrc::connection,
                      "giving up after " + std::to_string(attempts) + " attempts: " + last_error);

  std::vector<HeavyScore> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!results[i])
      throw ScorerError(ScorerErrc::missing_response,
                        pairs[i].pair_id + " unanswered");
    out.push_back({pairs[i].pair_id, *results[i]});
  }
  return out;
}

}  // namespace ocsi
