#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "gridtie/converter.hpp"
#include "gridtie/coordination.hpp"
#include "gridtie/errors.hpp"

namespace gridtie {

struct GridSpec {
    double v_rms = 120.0;
    double f_ac = 60.0;

    double v_peak() const { return std::numbers::sqrt2 * v_rms; }
    double period() const { return 1.0 / f_ac; }
};

// Full simulates the switched converter physics; IdealSource pins each
// module's DC link to its reference, which is the abstraction used when only
// the staircase is of interest.
enum class Fidelity { Full, IdealSource };

enum class FaultKind { Static, Dynamic };

struct FaultEvent {
    int agent = 0;
    double time = 0.0;  // 0 for static faults
    FaultKind kind = FaultKind::Static;
};

struct ToleranceSpec {
    double component_pct = 5.0;  // L, C, R
    double panel_pct = 2.0;      // V_sp
};

// Complete description of one experiment. Identical scenarios (including the
// seed) produce bit-identical traces.
struct ArrayScenario {
    int n_agents = 5;
    GridSpec grid{};
    ConverterParams converter{};
    ToleranceSpec tolerance{};
    CyberParams cyber{};
    std::vector<FaultEvent> faults{};
    double horizon = 2.0 / 60.0;
    std::uint64_t seed = 1;
    Fidelity fidelity = Fidelity::Full;
    double sample_period = 1e-6;
    bool cold_start = false;  // start converters at (0,0) instead of (0, v_ref)

    std::vector<std::string> validate() const {
        std::vector<std::string> out;
        auto bad = [&out](const std::string& m) { out.push_back(m); };
        if (n_agents < 1) bad("n_agents: must be >= 1");
        if (!(grid.v_rms > 0.0)) bad("grid.v_rms: must be > 0");
        if (!(grid.f_ac > 0.0)) bad("grid.f_ac: must be > 0");
        try {
            converter.validate();
        } catch (const std::exception& e) {
            bad(std::string("converter: ") + e.what());
        }
        if (!(tolerance.component_pct >= 0.0 && tolerance.component_pct < 100.0))
            bad("tolerance.component_pct: must be in [0, 100)");
        if (!(tolerance.panel_pct >= 0.0 && tolerance.panel_pct < 100.0))
            bad("tolerance.panel_pct: must be in [0, 100)");
        try {
            cyber.validate();
        } catch (const std::exception& e) {
            bad(std::string("cyber: ") + e.what());
        }
        if (!(horizon > 0.0)) bad("horizon: must be > 0");
        if (horizon > 3600.0) bad("horizon: must be <= 3600 s (event timeline limit)");
        if (!(sample_period > 0.0)) bad("sample_period: must be > 0");
        std::set<int> seen;
        for (std::size_t i = 0; i < faults.size(); ++i) {
            const FaultEvent& f = faults[i];
            const std::string tag = "faults[" + std::to_string(i) + "]";
            if (f.agent < 1 || f.agent > n_agents) {
                bad(tag + ".agent: out of range 1.." + std::to_string(n_agents));
                continue;
            }
            if (!seen.insert(f.agent).second)
                bad(tag + ": duplicate fault for agent " + std::to_string(f.agent));
            if (f.kind == FaultKind::Static && f.time != 0.0)
                bad(tag + ".time: static faults occur at t = 0");
            if (f.kind == FaultKind::Dynamic && !(f.time > 0.0 && f.time <= horizon))
                bad(tag + ".time: dynamic fault time must lie in (0, horizon]");
        }
        return out;
    }

    void validate_or_throw() const {
        auto diags = validate();
        if (!diags.empty()) throw scenario_error("invalid scenario", std::move(diags));
    }
};

}  // namespace gridtie
