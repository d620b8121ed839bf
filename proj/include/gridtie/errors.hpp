#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridtie {

// Base class for all runtime failures raised by the simulator.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class invalid_parameter : public error {
public:
    using error::error;
};

// Operational identifier outside 1..n_op, or agent index outside 1..N.
class invalid_identifier : public error {
public:
    using error::error;
};

// Every agent has failed; the grid tie must disconnect.
class no_operating_agents : public error {
public:
    using error::error;
};

// Continuous state left the finite range (message carries agent/time context
// when raised from the engine).
class numerical_error : public error {
public:
    using error::error;
};

// The event loop stopped advancing simulated time.
class livelock_error : public error {
public:
    using error::error;
};

// Analysis window does not span an integer number of periods, or the sample
// rate cannot resolve the requested harmonics.
class window_error : public error {
public:
    using error::error;
};

// Fundamental magnitude of the analysed signal vanishes.
class degenerate_signal : public error {
public:
    using error::error;
};

// An operation was called with its precondition unmet (guard not reached,
// time moving backwards, ...). A logic error, not an environmental one.
class contract_violation : public std::logic_error {
public:
    explicit contract_violation(const std::string& what) : std::logic_error(what) {}
};

// Scenario schema/validation failure with one diagnostic per offending field.
class scenario_error : public error {
public:
    scenario_error(const std::string& summary, std::vector<std::string> diagnostics)
        : error(join(summary, diagnostics)), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    static std::string join(const std::string& summary, const std::vector<std::string>& diags) {
        std::string out = summary;
        for (const auto& d : diags) {
            out += "\n  - ";
            out += d;
        }
        return out;
    }

    std::vector<std::string> diagnostics_;
};

}  // namespace gridtie
