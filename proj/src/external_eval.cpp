#include "ntbea/external_eval.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <thread>

#include "ntbea/errors.hpp"
#include "ntbea/text.hpp"

namespace ntbea {

namespace {

// Internal control-flow signal: the child is gone (EOF, broken pipe, or a
// reply timeout after which we kill it). Restartable when configured.
struct ChildDown {
    std::string msg;
};

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool parse_reply(const std::string& line, double& out) {
    const char* begin = line.c_str();
    const char* end = begin + line.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

// Waits up to `timeout` for the child to exit; nullopt if still running.
std::optional<int> wait_exit(int pid, std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        int status = 0;
        int r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) return status;
        if (r < 0) return std::nullopt;  // already reaped / gone
        if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

}  // namespace

void ExternalEvaluatorConfig::validate() const {
    std::string problems;
    auto add = [&](const char* msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (command.empty()) add("evaluator command must not be empty");
    if (per_eval_timeout.count() <= 0) add("per-eval timeout must be > 0");
    if (max_restarts < 0) add("max restarts must be >= 0");
    if (!problems.empty()) throw ConfigError("invalid evaluator config: " + problems);
}

ExternalEvaluator::ExternalEvaluator(ExternalEvaluatorConfig cfg, const SearchSpace& space)
    : cfg_(std::move(cfg)), space_(&space), space_doc_(space.doc_line()) {
    cfg_.validate();
    ignore_sigpipe_once();
    spawn_and_handshake();
}

ExternalEvaluator::~ExternalEvaluator() {
    if (pid_ > 0) {
        try {
            shutdown();
        } catch (...) {
            kill_child();
        }
    }
}

void ExternalEvaluator::spawn_and_handshake() {
    int to_pipe[2];    // parent -> child stdin
    int from_pipe[2];  // child stdout -> parent
    if (::pipe(to_pipe) != 0) throw Error("pipe() failed");
    if (::pipe(from_pipe) != 0) {
        ::close(to_pipe[0]);
        ::close(to_pipe[1]);
        throw Error("pipe() failed");
    }
    int pid = ::fork();
    if (pid < 0) {
        for (int fd : {to_pipe[0], to_pipe[1], from_pipe[0], from_pipe[1]}) ::close(fd);
        throw Error("fork() failed");
    }
    if (pid == 0) {
        ::setpgid(0, 0);  // own process group, so kill_child can reach grandchildren
        ::dup2(to_pipe[0], STDIN_FILENO);
        ::dup2(from_pipe[1], STDOUT_FILENO);
        for (int fd : {to_pipe[0], to_pipe[1], from_pipe[0], from_pipe[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", cfg_.command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    ::setpgid(pid, pid);  // mirror of the child's call; loser of the race errors harmlessly
    ::close(to_pipe[0]);
    ::close(from_pipe[1]);
    pid_ = pid;
    to_child_ = to_pipe[1];
    from_child_ = from_pipe[0];
    buffer_.clear();

    try {
        write_line("SPACE " + space_doc_);
        std::string reply = read_line(cfg_.per_eval_timeout, "handshake");
        if (reply != "READY")
            throw ProtocolError("handshake: expected READY, got something else", reply);
    } catch (const ChildDown& cd) {
        kill_child();
        throw ProtocolError("handshake failed: " + cd.msg);
    } catch (...) {
        kill_child();
        throw;
    }
}

void ExternalEvaluator::kill_child() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        ::kill(-pid_, SIGKILL);  // the whole group: sh may have forked the real evaluator
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    buffer_.clear();
}

void ExternalEvaluator::write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ChildDown{std::string("write to child failed: ") + std::strerror(errno)};
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string ExternalEvaluator::read_line(std::chrono::milliseconds timeout,
                                         const char* what) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        std::size_t pos = buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return strip_cr(std::move(line));
        }
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline)
            throw ProtocolError(std::string(what) + " timeout after " +
                                std::to_string(timeout.count()) + "ms");
        auto remain =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        struct pollfd pfd{from_child_, POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(remain.count()));
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw Error(std::string("poll() failed: ") + std::strerror(errno));
        }
        if (pr == 0) continue;  // loop re-checks the deadline
        char chunk[4096];
        ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ChildDown{std::string("read from child failed: ") + std::strerror(errno)};
        }
        if (n == 0)
            throw ChildDown{std::string(what) + ": child closed its output (premature EOF)"};
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void ExternalEvaluator::drain_available() {
    while (true) {
        struct pollfd pfd{from_child_, POLLIN, 0};
        if (::poll(&pfd, 1, 0) != 1) break;
        char chunk[4096];
        ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
        if (n <= 0) break;  // EOF surfaces on the next read_line
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

double ExternalEvaluator::eval_once(const Point& p) {
    // Anything already waiting in the pipe is output we never asked for.
    drain_available();
    std::size_t pos = buffer_.find('\n');
    if (pos != std::string::npos)
        throw ProtocolError("unsolicited output from child between requests",
                            strip_cr(buffer_.substr(0, pos)));

    write_line("EVAL " + join(space_->labels(p), ' '));
    std::string reply;
    try {
        reply = read_line(cfg_.per_eval_timeout, "evaluation reply");
    } catch (const ProtocolError&) {
        // Reply timeout: the child is wedged; treat like a crash so the
        // restart policy can decide.
        throw ChildDown{"evaluation reply timeout after " +
                        std::to_string(cfg_.per_eval_timeout.count()) + "ms"};
    }
    double value = 0.0;
    if (!parse_reply(reply, value))
        throw ProtocolError("non-numeric evaluation reply", reply);
    return value;
}

double ExternalEvaluator::evaluate(const Point& p) {
    if (pid_ <= 0) throw Error("evaluator is not running (already shut down?)");
    if (!space_->contains(p)) throw Error("point does not belong to the evaluator's space");
    while (true) {
        try {
            return eval_once(p);
        } catch (const ChildDown& cd) {
            kill_child();
            if (!cfg_.restart_on_crash || restarts_used_ >= cfg_.max_restarts)
                throw ProtocolError("child process failed: " + cd.msg +
                                    (cfg_.restart_on_crash ? " (restart budget exhausted)"
                                                           : ""));
            ++restarts_used_;
            spawn_and_handshake();  // a handshake failure here is fatal
        }
    }
}

Evaluator ExternalEvaluator::as_evaluator() {
    return [this](const Point& p, Rng&) { return evaluate(p); };
}

void ExternalEvaluator::shutdown() {
    if (pid_ <= 0) return;
    try {
        drain_available();
        std::size_t pos = buffer_.find('\n');
        if (pos != std::string::npos)
            throw ProtocolError("unsolicited output from child before END",
                                strip_cr(buffer_.substr(0, pos)));
        write_line("END");
        // Drain until EOF; any complete line that shows up is a violation.
        while (true) {
            std::string line;
            try {
                line = read_line(cfg_.per_eval_timeout, "shutdown");
            } catch (const ChildDown&) {
                break;  // EOF: the expected outcome
            }
            throw ProtocolError("output from child after END", line);
        }
        if (!buffer_.empty())
            throw ProtocolError("trailing output from child after END", buffer_);
        auto status = wait_exit(pid_, cfg_.per_eval_timeout);
        if (!status) {
            kill_child();
            throw ProtocolError("child did not exit after END");
        }
        int st = *status;
        pid_ = -1;
        ::close(to_child_);
        ::close(from_child_);
        to_child_ = from_child_ = -1;
        if (WIFSIGNALED(st))
            throw ProtocolError("child killed by signal " +
                                std::to_string(WTERMSIG(st)) + " during shutdown");
        if (WIFEXITED(st) && WEXITSTATUS(st) != 0)
            throw ProtocolError("child exited with status " +
                                std::to_string(WEXITSTATUS(st)) + " (expected 0)");
    } catch (const ChildDown& cd) {
        kill_child();
        throw ProtocolError("shutdown failed: " + cd.msg);
    } catch (const ProtocolError&) {
        if (pid_ > 0) kill_child();
        throw;
    }
}

ProtocolCheckResult protocol_check(const ExternalEvaluatorConfig& cfg,
                                   const SearchSpace& space, int probes) {
    ProtocolCheckResult result;
    auto record = [&](const ProtocolError& pe) {
        std::string msg = pe.what();
        if (!pe.raw_line.empty()) msg += " [offending line: \"" + pe.raw_line + "\"]";
        result.violations.push_back(std::move(msg));
    };

    ExternalEvaluatorConfig strict = cfg;
    strict.restart_on_crash = false;

    try {
        ExternalEvaluator eval(strict, space);
        Rng rng = make_rng(0x9e3779b9u);
        for (int i = 0; i < probes; ++i) {
            Point p = space.random_point(rng);
            try {
                eval.evaluate(p);
            } catch (const ProtocolError& pe) {
                record(pe);
                return result;  // the stream is unreliable past this point
            }
            // Give a chatty child a moment so extra replies surface here
            // rather than between later requests.
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        eval.shutdown();
    } catch (const ProtocolError& pe) {
        record(pe);
        return result;
    }
    result.ok = result.violations.empty();
    return result;
}

}  // namespace ntbea
