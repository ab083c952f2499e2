#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "ntbea/optimizer.hpp"
#include "ntbea/search_space.hpp"

namespace ntbea {

struct ExternalEvaluatorConfig {
    std::string command;  // run via `sh -c`, so arguments/pipelines work
    std::chrono::milliseconds per_eval_timeout{10000};
    bool restart_on_crash = false;
    int max_restarts = 0;

    void validate() const;
};

// Drives a child process over the line protocol:
//   parent: SPACE <one-line space doc>\n      child: READY\n
//   parent: EVAL <label_1> ... <label_d>\n    child: <decimal float>\n
//   parent: END\n                             child exits 0
// Requests are strictly serialized; any other child output is a violation.
class ExternalEvaluator {
public:
    ExternalEvaluator(ExternalEvaluatorConfig cfg, const SearchSpace& space);
    ~ExternalEvaluator();

    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    // One EVAL round-trip; restarts the child and retries once per restart
    // when restart_on_crash is set. Throws ProtocolError otherwise.
    double evaluate(const Point& p);

    // Adapter for run(); ignores the rng (noise lives in the child).
    // *this must outlive the returned callable.
    Evaluator as_evaluator();

    // Sends END and waits for a clean exit; throws on protocol violations.
    void shutdown();

    int restarts_used() const { return restarts_used_; }
    bool running() const { return pid_ > 0; }

private:
    void spawn_and_handshake();
    void kill_child();
    void drain_available();  // pull already-written child bytes into buffer_
    std::string read_line(std::chrono::milliseconds timeout, const char* what);
    void write_line(const std::string& line);
    double eval_once(const Point& p);

    ExternalEvaluatorConfig cfg_;
    const SearchSpace* space_;
    std::string space_doc_;
    int pid_ = -1;
    int to_child_ = -1;    // write end
    int from_child_ = -1;  // read end
    std::string buffer_;   // raw bytes read but not yet consumed
    int restarts_used_ = 0;
};

struct ProtocolCheckResult {
    bool ok = false;
    std::vector<std::string> violations;  // each includes the raw line if any
};

// Handshake + `probes` evaluations + clean shutdown, collecting every
// violation instead of throwing.
ProtocolCheckResult protocol_check(const ExternalEvaluatorConfig& cfg,
                                   const SearchSpace& space, int probes = 3);

}  // namespace ntbea
