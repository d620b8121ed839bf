#pragma once

#include <cmath>

#include "gridtie/affine.hpp"
#include "gridtie/errors.hpp"

namespace gridtie {

enum class SwitchPhase { Open, Close };

// Electrical parameters of one buck-boost stage.
struct ConverterParams {
    double L = 40e-6;    // inductance, H
    double C = 60e-6;    // capacitance, F
    double R = 4.0;      // load resistance, ohm
    double T_dc = 4e-6;  // PWM switching period, s
    double V_sp = 18.6;  // panel source voltage, V

    void validate() const {
        if (!(L > 0.0) || !(C > 0.0) || !(R > 0.0) || !(T_dc > 0.0) || !(V_sp > 0.0))
            throw invalid_parameter("converter parameters must be strictly positive");
    }
};

// delta = V_ref / (V_ref + V_sp). The ideal CCM conversion ratio
// delta/(1-delta) * V_sp then reproduces V_ref identically.
inline double duty_cycle(double v_ref, double v_sp) {
    if (!(v_sp > 0.0)) throw invalid_parameter("duty_cycle: source voltage must be positive");
    if (v_ref < 0.0) throw invalid_parameter("duty_cycle: reference voltage must be non-negative");
    return v_ref / (v_ref + v_sp);
}

// Per-module DC reference: n_op stacked modules must reach the AC peak.
inline double reference_voltage(double v_peak, int n_op) {
    if (n_op == 0)
        throw no_operating_agents("reference_voltage: no operating agents, grid tie must disconnect");
    if (n_op < 0) throw invalid_parameter("reference_voltage: negative agent count");
    return v_peak / static_cast<double>(n_op);
}

// Switch open: inductor discharges into the output; switch closed: panel
// charges the inductor while the capacitor feeds the load alone.
inline AffineMode converter_mode_dynamics(SwitchPhase phase, const ConverterParams& p) {
    p.validate();
    AffineMode m;
    if (phase == SwitchPhase::Open) {
        m.a = {0.0, -1.0 / p.L, 1.0 / p.C, -1.0 / (p.R * p.C)};
        m.b = {0.0, 0.0};
        m.input = 0.0;
    } else {
        m.a = {0.0, 0.0, 0.0, -1.0 / (p.R * p.C)};
        m.b = {1.0 / p.L, 0.0};
        m.input = p.V_sp;
    }
    return m;
}

// PWM-automaton state of one converter. x = (inductor current, output voltage).
struct ConverterState {
    Vec2 x{0.0, 0.0};
    double tau_dc = 0.0;  // time spent in the current switch phase
    SwitchPhase phase = SwitchPhase::Open;
    double duty = 0.0;  // latched at the last PWM edge
    double v_ref = 0.0;

    double phase_bound(double t_dc) const {
        return (phase == SwitchPhase::Close ? duty : 1.0 - duty) * t_dc;
    }
};

// Toggle the switch once the phase timer reaches its bound; the duty cycle is
// re-read from v_ref here, so reference changes latch at PWM edges. The guard
// slack absorbs sub-picosecond event quantization.
inline ConverterState converter_pwm_transition(const ConverterState& s, const ConverterParams& p) {
    const double bound = s.phase_bound(p.T_dc);
    if (s.tau_dc < bound - 1e-11)
        throw contract_violation("converter_pwm_transition: phase timer has not reached its bound");
    ConverterState n = s;
    n.phase = (s.phase == SwitchPhase::Close) ? SwitchPhase::Open : SwitchPhase::Close;
    n.tau_dc = 0.0;
    n.duty = duty_cycle(s.v_ref, p.V_sp);
    return n;
}

}  // namespace gridtie
