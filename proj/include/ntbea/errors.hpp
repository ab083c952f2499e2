#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ntbea {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or invalid configuration (space docs, experiment configs, settings).
struct ConfigError : Error {
    using Error::Error;
};

// External-evaluator wire protocol violation; carries the offending raw line
// (empty when the failure is a timeout / EOF rather than bad content).
struct ProtocolError : Error {
    ProtocolError(const std::string& what, std::string raw = {})
        : Error(what), raw_line(std::move(raw)) {}
    std::string raw_line;
};

// An optimization run aborted by an evaluator failure at a known iteration.
struct RunError : Error {
    RunError(const std::string& what, std::uint64_t iter)
        : Error(what), iteration(iter) {}
    std::uint64_t iteration;
};

}  // namespace ntbea
