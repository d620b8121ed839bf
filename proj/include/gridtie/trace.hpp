#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gridtie/converter.hpp"
#include "gridtie/scenario.hpp"

namespace gridtie {

struct TraceEvent {
    double time = 0.0;
    int agent = 0;  // 0 = system-wide
    std::string kind;  // "fault", "detection", "reconfigure"
    std::string detail;
};

// Cyber timeline of one injected failure. Times are NaN when not applicable
// (static faults are pre-known; nothing to detect).
struct FaultSummary {
    int agent = 0;
    double fault_time = 0.0;
    FaultKind kind = FaultKind::Static;
    double first_detection = std::numeric_limits<double>::quiet_NaN();
    double all_adopted = std::numeric_limits<double>::quiet_NaN();
};

// Per-agent component values actually drawn for this run.
struct AgentRecord {
    int index = 0;
    ConverterParams params{};
};

// Uniformly sampled run output. v_ac[k] equals the sum of the per-agent
// outputs at sample k by construction; tests re-derive it.
struct WaveformTrace {
    double sample_period = 1e-6;
    std::vector<double> time;
    std::vector<double> v_ac;
    std::vector<std::vector<double>> agent_v_ac;  // [agent-1][sample]
    std::vector<std::vector<double>> agent_v_dc;
    std::vector<TraceEvent> events;
    std::vector<FaultSummary> fault_summaries;
    std::vector<AgentRecord> agents;
    Fidelity fidelity = Fidelity::Full;
    std::uint64_t seed = 0;

    std::size_t samples() const { return time.size(); }
    int n_agents() const { return static_cast<int>(agent_v_ac.size()); }

    // First sample index at or after t.
    std::size_t index_at(double t) const {
        const double idx = std::ceil(t / sample_period - 1e-9);
        return idx <= 0.0 ? 0 : static_cast<std::size_t>(idx);
    }
};

}  // namespace gridtie
