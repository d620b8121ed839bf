#pragma once

#include <cmath>
#include <numbers>

#include "gridtie/errors.hpp"

namespace gridtie {

enum class BridgeLocation { ZeroPos, Positive, ZeroNeg, Negative };

// Dwell times of the four-location H-bridge cycle. The closing transition
// resets the clock to -d_zp, so ZeroPos lasts 2*d_zp in steady state and
// 2*d_zp + d_p + d_zn + d_n == t_ac exactly.
struct SwitchingSchedule {
    double d_zp = 0.0;  // zero dwell before the positive half
    double d_p = 0.0;   // positive dwell
    double d_zn = 0.0;  // zero dwell around the half period
    double d_n = 0.0;   // negative dwell
    double t_ac = 0.0;  // grid period

    // cumulative guard thresholds
    double c1() const { return d_zp; }
    double c2() const { return d_zp + d_p; }
    double c3() const { return d_zp + d_p + d_zn; }
    double c4() const { return d_zp + d_p + d_zn + d_n; }
};

// Staircase switching times: the module ranked op_id of n_op operating holds
// zero until the reference sine reaches op_id/(n_op+1), i.e. for
// (t_ac/2pi) asin(op_id/(n_op+1)). The remaining dwells subdivide the period
// quarter-wave symmetrically: positive until the sine re-crosses the threshold
// at pi - theta, zero for 2*d_zp around the half period, negative mirror image.
inline SwitchingSchedule switching_schedule(int op_id, int n_op, double t_ac) {
    if (!(t_ac > 0.0)) throw invalid_parameter("switching_schedule: grid period must be positive");
    if (n_op < 1 || op_id < 1 || op_id > n_op)
        throw invalid_identifier("switching_schedule: operational identifier out of range");
    const double theta = std::asin(static_cast<double>(op_id) / (n_op + 1));
    const double d_zp = t_ac / (2.0 * std::numbers::pi) * theta;
    const double d_p = 0.5 * t_ac - 2.0 * d_zp;
    return SwitchingSchedule{d_zp, d_p, 2.0 * d_zp, d_p, t_ac};
}

struct HBridgeState {
    BridgeLocation location = BridgeLocation::ZeroPos;
    double tclock = 0.0;  // negative right after a cycle reset
    double v_ac = 0.0;
};

inline double hbridge_output(BridgeLocation loc, double v_dc) {
    switch (loc) {
        case BridgeLocation::Positive:
            return v_dc;
        case BridgeLocation::Negative:
            return -v_dc;
        default:
            return 0.0;
    }
}

// One step around ZeroPos -> Positive -> ZeroNeg -> Negative -> ZeroPos.
// Guards compare tclock with the cumulative dwell sums; only the closing
// transition resets the clock (to -d_zp). The guard slack absorbs
// sub-picosecond event quantization.
inline HBridgeState hbridge_transition(const HBridgeState& s, const SwitchingSchedule& sched,
                                       double v_dc) {
    double threshold = 0.0;
    BridgeLocation next{};
    switch (s.location) {
        case BridgeLocation::ZeroPos:
            threshold = sched.c1();
            next = BridgeLocation::Positive;
            break;
        case BridgeLocation::Positive:
            threshold = sched.c2();
            next = BridgeLocation::ZeroNeg;
            break;
        case BridgeLocation::ZeroNeg:
            threshold = sched.c3();
            next = BridgeLocation::Negative;
            break;
        case BridgeLocation::Negative:
            threshold = sched.c4();
            next = BridgeLocation::ZeroPos;
            break;
    }
    if (s.tclock < threshold - 1e-11)
        throw contract_violation("hbridge_transition: clock has not reached the guard");
    HBridgeState n;
    n.location = next;
    n.tclock = (s.location == BridgeLocation::Negative) ? -sched.d_zp : s.tclock;
    n.v_ac = hbridge_output(next, v_dc);
    return n;
}

}  // namespace gridtie
