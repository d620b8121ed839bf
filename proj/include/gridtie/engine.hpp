#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridtie/affine.hpp"
#include "gridtie/converter.hpp"
#include "gridtie/coordination.hpp"
#include "gridtie/errors.hpp"
#include "gridtie/hbridge.hpp"
#include "gridtie/rng.hpp"
#include "gridtie/scenario.hpp"
#include "gridtie/trace.hpp"

namespace gridtie {

namespace ticks {

// Integer event timeline, 1 tick = 1 ps. Event ordering, tie-breaking, PWM
// periodicity and repeat-run determinism are exact on the lattice; the
// quantization (<= 0.5 ps) sits far below the 1 us sampling grid.
using Tick = std::int64_t;
constexpr double resolution = 1e-12;
constexpr Tick none = std::numeric_limits<Tick>::max();

inline Tick from_seconds(double s) { return static_cast<Tick>(std::llround(s / resolution)); }
inline double to_seconds(Tick t) { return static_cast<double>(t) * resolution; }

}  // namespace ticks

enum class EngineEventKind {
    Fault,
    Heartbeat,
    Detection,
    GossipDelivery,
    GossipSend,
    PwmEdge,
    BridgeSwitch,
    Reconfigure,
    Sample,
};

struct EngineEvent {
    ticks::Tick tick = 0;
    int agent = 0;  // 0 = system-wide
    EngineEventKind kind{};
};

// Switching schedule on the tick lattice. Durations are derived so the cycle
// closes at exactly t_ac ticks regardless of rounding.
struct ScheduleTicks {
    ticks::Tick c1 = 0, c2 = 0, c3 = 0, c4 = 0, t_ac = 0;

    static ScheduleTicks from(const SwitchingSchedule& s) {
        const ticks::Tick period = ticks::from_seconds(s.t_ac);
        const ticks::Tick half = period / 2;
        const ticks::Tick d_zp =
            std::clamp<ticks::Tick>(ticks::from_seconds(s.d_zp), 1, half / 2);
        return ScheduleTicks{d_zp, half - d_zp, half + d_zp, period - d_zp, period};
    }

    ticks::Tick threshold(BridgeLocation loc) const {
        switch (loc) {
            case BridgeLocation::ZeroPos:
                return c1;
            case BridgeLocation::Positive:
                return c2;
            case BridgeLocation::ZeroNeg:
                return c3;
            case BridgeLocation::Negative:
                return c4;
        }
        return c4;
    }
};

// One inverter module: converter automaton, H-bridge automaton and the
// agent's local knowledge of failures.
struct AgentRuntime {
    int index = 0;  // 1-based position in the string

    ConverterParams params{};
    ConverterState conv{};
    AffineMode open_mode{};
    AffineMode close_mode{};
    ticks::Tick conv_advanced = 0;  // continuous state is exact at this tick
    ticks::Tick pwm_entry = 0;      // current switch phase began here
    ticks::Tick pwm_bound = 0;      // dwell of the current phase

    BridgeLocation location = BridgeLocation::ZeroPos;
    ticks::Tick hb_ref = 0;  // tclock = now - hb_ref
    SwitchingSchedule schedule{};
    ScheduleTicks sched{};

    std::set<int> known_failed;
    std::optional<int> op_id;
    int n_op = 0;
    double v_ref = 0.0;

    bool failed = false;
    ticks::Tick fail_tick = ticks::none;
    ticks::Tick last_heartbeat = 0;

    double v_dc(Fidelity f) const {
        if (failed) return 0.0;
        return f == Fidelity::Full ? conv.x[1] : v_ref;
    }
    double v_out(Fidelity f) const { return failed ? 0.0 : hbridge_output(location, v_dc(f)); }
    double tclock_seconds(ticks::Tick now) const { return ticks::to_seconds(now - hb_ref); }
};

// Composition of N agents on one timeline: continuous states advance in
// closed form between events, discrete events fire at precomputed ticks in a
// fixed category order with lower agent index first inside a category.
class ArraySystem {
public:
    // Diagnostic hooks; both default to off.
    std::function<void(const EngineEvent&)> event_observer;
    std::function<void(const ArraySystem&, double)> sample_observer;

    explicit ArraySystem(ArrayScenario scenario) : sc_(std::move(scenario)) {
        sc_.validate_or_throw();
        full_ = sc_.fidelity == Fidelity::Full;
        v_peak_ = sc_.grid.v_peak();
        dt_ = std::max<ticks::Tick>(1, ticks::from_seconds(sc_.sample_period));
        horizon_ = ticks::from_seconds(sc_.horizon);
        t_ac_ = ticks::from_seconds(sc_.grid.period());
        tdc_ = std::max<ticks::Tick>(2, ticks::from_seconds(sc_.converter.T_dc));
        hb_period_ = std::max<ticks::Tick>(1, ticks::from_seconds(sc_.cyber.heartbeat_period));
        timeout_ = std::max<ticks::Tick>(1, ticks::from_seconds(sc_.cyber.detection_timeout));
        round_ = std::max<ticks::Tick>(1, ticks::from_seconds(sc_.cyber.gossip_round));
        hop_ = std::max<ticks::Tick>(1, ticks::from_seconds(sc_.cyber.hop_delay));

        std::set<int> static_failed;
        for (const FaultEvent& f : sc_.faults) {
            if (f.kind == FaultKind::Static)
                static_failed.insert(f.agent);
            else
                dynamic_faults_.push_back(f);
        }
        std::sort(dynamic_faults_.begin(), dynamic_faults_.end(),
                  [](const FaultEvent& a, const FaultEvent& b) {
                      return a.time != b.time ? a.time < b.time : a.agent < b.agent;
                  });
        dynamic_fault_ticks_.reserve(dynamic_faults_.size());
        for (const FaultEvent& f : dynamic_faults_)
            dynamic_fault_ticks_.push_back(ticks::from_seconds(f.time));

        trace_.sample_period = sc_.sample_period;
        trace_.fidelity = sc_.fidelity;
        trace_.seed = sc_.seed;
        trace_.agent_v_ac.resize(sc_.n_agents);
        trace_.agent_v_dc.resize(sc_.n_agents);
        const std::size_t expected = static_cast<std::size_t>(horizon_ / dt_) + 1;
        trace_.time.reserve(expected);
        trace_.v_ac.reserve(expected);

        std::mt19937_64 gen(sc_.seed);
        agents_.resize(sc_.n_agents);
        for (int i = 1; i <= sc_.n_agents; ++i) {
            AgentRuntime& ag = agents_[i - 1];
            ag.index = i;
            ag.params = sc_.converter;
            ag.params.L = perturb_pct(gen, sc_.converter.L, sc_.tolerance.component_pct);
            ag.params.C = perturb_pct(gen, sc_.converter.C, sc_.tolerance.component_pct);
            ag.params.R = perturb_pct(gen, sc_.converter.R, sc_.tolerance.component_pct);
            ag.params.V_sp = perturb_pct(gen, sc_.converter.V_sp, sc_.tolerance.panel_pct);
            ag.open_mode = converter_mode_dynamics(SwitchPhase::Open, ag.params);
            ag.close_mode = converter_mode_dynamics(SwitchPhase::Close, ag.params);
            ag.known_failed = static_failed;
            trace_.agents.push_back({i, ag.params});
            trace_.agent_v_ac[i - 1].reserve(expected);
            trace_.agent_v_dc[i - 1].reserve(expected);
        }
        for (int a : static_failed) {
            agents_[a - 1].failed = true;
            agents_[a - 1].fail_tick = 0;
            fault_stats_[a] = FaultStats{0, FaultKind::Static, ticks::none, {}};
        }
        for (AgentRuntime& ag : agents_) {
            if (ag.failed) continue;
            configure_from_view(ag, 0, /*initial=*/true);
            ag.conv.v_ref = ag.v_ref;
            ag.conv.duty = duty_cycle(ag.v_ref, ag.params.V_sp);
            ag.conv.phase = SwitchPhase::Open;
            ag.conv.x = sc_.cold_start ? Vec2{0.0, 0.0} : Vec2{0.0, ag.v_ref};
            ag.pwm_entry = 0;
            ag.pwm_bound = tdc_ - duty_ticks(ag.conv.duty);
        }
    }

    void advance_to(double t_seconds) { advance_to_ticks(ticks::from_seconds(t_seconds)); }

    // Advance to the scenario horizon and hand the trace out.
    WaveformTrace run() {
        advance_to_ticks(horizon_);
        return take_trace();
    }

    WaveformTrace take_trace() {
        finalize_summaries();
        return std::move(trace_);
    }

    double time() const { return ticks::to_seconds(now_); }

    // Series voltage of the string at the time advance_to last returned.
    double grid_voltage() const {
        double v = 0.0;
        for (const AgentRuntime& ag : agents_) v += ag.v_out(sc_.fidelity);
        return v;
    }

    const ArrayScenario& scenario() const { return sc_; }
    int n_agents() const { return sc_.n_agents; }
    const AgentRuntime& agent(int index) const { return agents_.at(index - 1); }

private:
    struct Delivery {
        ticks::Tick tick = 0;
        int to = 0;
        std::uint64_t seq = 0;
        std::set<int> payload;
    };
    struct DeliveryLater {
        bool operator()(const Delivery& a, const Delivery& b) const {
            if (a.tick != b.tick) return a.tick > b.tick;
            if (a.to != b.to) return a.to > b.to;
            return a.seq > b.seq;
        }
    };
    struct FaultStats {
        ticks::Tick fault_tick = 0;
        FaultKind kind = FaultKind::Static;
        ticks::Tick first_detection = ticks::none;
        std::map<int, ticks::Tick> learned;  // agent -> first tick it knew
    };

    void advance_to_ticks(ticks::Tick target) {
        if (target < now_) throw contract_violation("advance_to: target time is in the past");
        int stalls = 0;
        while (true) {
            const ticks::Tick tn = next_event_tick();
            if (tn == ticks::none || tn > target) break;
            if (tn > now_) {
                now_ = tn;
                stalls = 0;
            } else if (++stalls > 100000) {
                throw livelock_error("event loop stopped making progress at t=" +
                                     std::to_string(time()) + " s");
            }
            process_current_tick();
        }
        now_ = std::max(now_, target);
        if (full_)
            for (AgentRuntime& ag : agents_)
                if (!ag.failed) advance_physics(ag, now_);
    }

    ticks::Tick next_event_tick() const {
        ticks::Tick tn = ticks::none;
        auto consider = [&tn](ticks::Tick t) {
            if (t < tn) tn = t;
        };
        const ticks::Tick next_sample = next_sample_index_ * dt_;
        if (next_sample <= horizon_) consider(next_sample);
        if (next_fault_ < dynamic_fault_ticks_.size()) consider(dynamic_fault_ticks_[next_fault_]);
        consider(next_heartbeat_);
        if (!deliveries_.empty()) consider(deliveries_.top().tick);
        consider(next_round_);
        for (const AgentRuntime& ag : agents_) {
            if (ag.failed) continue;
            if (full_) consider(ag.pwm_entry + ag.pwm_bound);
            consider(ag.hb_ref + ag.sched.threshold(ag.location));
        }
        return tn;
    }

    // Fixed category order: faults, heartbeats/detections, deliveries,
    // periodic gossip, PWM edges, H-bridge switches, sampling. Lower agent
    // index goes first within a category.
    void process_current_tick() {
        const ticks::Tick t = now_;
        while (next_fault_ < dynamic_fault_ticks_.size() && dynamic_fault_ticks_[next_fault_] == t) {
            inject_fault(dynamic_faults_[next_fault_], t);
            ++next_fault_;
        }
        if (next_heartbeat_ == t) {
            heartbeat_instant(t);
            next_heartbeat_ += hb_period_;
        }
        while (!deliveries_.empty() && deliveries_.top().tick == t) {
            const Delivery d = deliveries_.top();
            deliveries_.pop();
            deliver(d, t);
        }
        if (next_round_ == t) {
            gossip_round(t);
            next_round_ += round_;
        }
        if (full_) {
            for (AgentRuntime& ag : agents_)
                if (!ag.failed && ag.pwm_entry + ag.pwm_bound == t) pwm_edge(ag, t);
        }
        for (AgentRuntime& ag : agents_) {
            if (ag.failed) continue;
            while (ag.hb_ref + ag.sched.threshold(ag.location) == t) bridge_switch(ag, t);
        }
        if (next_sample_index_ * dt_ == t && t <= horizon_) record_sample(t);
    }

    void inject_fault(const FaultEvent& f, ticks::Tick t) {
        AgentRuntime& ag = agents_[f.agent - 1];
        if (ag.failed) return;
        if (full_) advance_physics(ag, t);
        ag.failed = true;
        ag.fail_tick = t;
        ag.conv.x = {0.0, 0.0};  // abstract short: the module's output collapses to zero
        fault_stats_[f.agent] = FaultStats{t, FaultKind::Dynamic, ticks::none, {}};
        push_event(t, f.agent, EngineEventKind::Fault);
        trace_.events.push_back({ticks::to_seconds(t), f.agent, "fault", "dynamic failure"});
    }

    void heartbeat_instant(ticks::Tick t) {
        for (AgentRuntime& ag : agents_)
            if (!ag.failed) ag.last_heartbeat = t;
        push_event(t, 0, EngineEventKind::Heartbeat);
        for (AgentRuntime& ag : agents_) {
            if (ag.failed) continue;
            const auto [l, r] = neighbors(ag.index, ag.known_failed, sc_.n_agents);
            for (const std::optional<int>& nb : {l, r}) {
                if (!nb) continue;
                const AgentRuntime& other = agents_[*nb - 1];
                if (!other.failed || ag.known_failed.count(*nb)) continue;
                if (t - other.last_heartbeat >= timeout_) {
                    FaultStats& st = fault_stats_[*nb];
                    if (st.first_detection == ticks::none) st.first_detection = t;
                    push_event(t, ag.index, EngineEventKind::Detection);
                    trace_.events.push_back({ticks::to_seconds(t), ag.index, "detection",
                                             "agent " + std::to_string(*nb) + " missed heartbeats"});
                    learn(ag, {*nb}, t);
                }
            }
        }
    }

    void deliver(const Delivery& d, ticks::Tick t) {
        AgentRuntime& ag = agents_[d.to - 1];
        push_event(t, d.to, EngineEventKind::GossipDelivery);
        if (ag.failed) return;  // messages to dead agents are lost
        learn(ag, d.payload, t);
    }

    void gossip_round(ticks::Tick t) {
        for (AgentRuntime& ag : agents_)
            if (!ag.failed && !ag.known_failed.empty()) send_knowledge(ag, t);
    }

    void send_knowledge(AgentRuntime& ag, ticks::Tick t) {
        const auto [l, r] = neighbors(ag.index, ag.known_failed, sc_.n_agents);
        for (const std::optional<int>& nb : {l, r}) {
            if (!nb) continue;
            deliveries_.push(Delivery{t + hop_, *nb, delivery_seq_++, ag.known_failed});
        }
        push_event(t, ag.index, EngineEventKind::GossipSend);
    }

    // Merge newly learned failures; on growth, reconfigure immediately and
    // relay to the current neighbors (periodic rounds add redundancy, the
    // relay carries the latency).
    void learn(AgentRuntime& ag, const std::set<int>& ids, ticks::Tick t) {
        bool grew = false;
        for (int id : ids) {
            if (id == ag.index || ag.known_failed.count(id)) continue;
            ag.known_failed.insert(id);
            fault_stats_[id].learned.emplace(ag.index, t);
            grew = true;
        }
        if (!grew) return;
        configure_from_view(ag, t, /*initial=*/false);
        send_knowledge(ag, t);
    }

    ticks::Tick duty_ticks(double duty) const {
        const auto raw = static_cast<ticks::Tick>(std::llround(duty * static_cast<double>(tdc_)));
        return std::clamp<ticks::Tick>(raw, 1, tdc_ - 1);
    }

    // Recompute identifier, reference and schedule from the agent's knowledge
    // and adopt the schedule immediately by mapping the global grid phase onto
    // the new cycle. The duty cycle latches at the next PWM edge.
    void configure_from_view(AgentRuntime& ag, ticks::Tick t, bool initial) {
        const auto [op_id, n_op] = compute_identifier(ag.index, ag.known_failed, sc_.n_agents);
        ag.op_id = op_id;
        ag.n_op = n_op;
        if (!op_id || n_op < 1) return;
        ag.v_ref = reference_voltage(v_peak_, n_op);
        ag.conv.v_ref = ag.v_ref;
        ag.schedule = switching_schedule(*op_id, n_op, sc_.grid.period());
        ag.sched = ScheduleTicks::from(ag.schedule);
        const ticks::Tick phase = t % ag.sched.t_ac;
        ag.hb_ref = t - phase;
        if (phase < ag.sched.c1)
            ag.location = BridgeLocation::ZeroPos;
        else if (phase < ag.sched.c2)
            ag.location = BridgeLocation::Positive;
        else if (phase < ag.sched.c3)
            ag.location = BridgeLocation::ZeroNeg;
        else if (phase < ag.sched.c4)
            ag.location = BridgeLocation::Negative;
        else {  // tail of the cycle belongs to the next ZeroPos dwell
            ag.location = BridgeLocation::ZeroPos;
            ag.hb_ref = t - phase + ag.sched.t_ac;
        }
        if (!initial) {
            push_event(t, ag.index, EngineEventKind::Reconfigure);
            trace_.events.push_back({ticks::to_seconds(t), ag.index, "reconfigure",
                                     "n_op=" + std::to_string(n_op) + " id=" + std::to_string(*op_id)});
        }
    }

    void pwm_edge(AgentRuntime& ag, ticks::Tick t) {
        advance_physics(ag, t);
        ag.conv = converter_pwm_transition(ag.conv, ag.params);
        ag.pwm_entry = t;
        ag.pwm_bound = ag.conv.phase == SwitchPhase::Close ? duty_ticks(ag.conv.duty)
                                                           : tdc_ - duty_ticks(ag.conv.duty);
        push_event(t, ag.index, EngineEventKind::PwmEdge);
    }

    void bridge_switch(AgentRuntime& ag, ticks::Tick t) {
        const double v_dc = ag.v_dc(sc_.fidelity);
        const HBridgeState cur{ag.location, ag.tclock_seconds(t), hbridge_output(ag.location, v_dc)};
        const HBridgeState next = hbridge_transition(cur, ag.schedule, v_dc);
        if (ag.location == BridgeLocation::Negative) ag.hb_ref = t + ag.sched.c1;  // tclock' = -d_zp
        ag.location = next.location;
        push_event(t, ag.index, EngineEventKind::BridgeSwitch);
    }

    void advance_physics(AgentRuntime& ag, ticks::Tick to) {
        if (!full_ || ag.failed || to <= ag.conv_advanced) return;
        const double h = ticks::to_seconds(to - ag.conv_advanced);
        const AffineMode& m =
            ag.conv.phase == SwitchPhase::Close ? ag.close_mode : ag.open_mode;
        try {
            ag.conv.x = step_affine(ag.conv.x, m, h);
        } catch (const numerical_error&) {
            throw numerical_error("converter state of agent " + std::to_string(ag.index) +
                                  " diverged at t=" + std::to_string(ticks::to_seconds(to)) + " s");
        }
        ag.conv_advanced = to;
        ag.conv.tau_dc = ticks::to_seconds(to - ag.pwm_entry);
    }

    void record_sample(ticks::Tick t) {
        double sum = 0.0;
        for (AgentRuntime& ag : agents_) {
            advance_physics(ag, t);
            const double va = ag.v_out(sc_.fidelity);
            trace_.agent_v_ac[ag.index - 1].push_back(va);
            trace_.agent_v_dc[ag.index - 1].push_back(ag.v_dc(sc_.fidelity));
            sum += va;
        }
        const double t_s = static_cast<double>(next_sample_index_) * sc_.sample_period;
        trace_.time.push_back(t_s);
        trace_.v_ac.push_back(sum);
        ++next_sample_index_;
        push_event(t, 0, EngineEventKind::Sample);
        if (sample_observer) sample_observer(*this, t_s);
    }

    void push_event(ticks::Tick t, int agent, EngineEventKind kind) {
        if (event_observer) event_observer(EngineEvent{t, agent, kind});
    }

    void finalize_summaries() {
        trace_.fault_summaries.clear();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        bool any_operating = false;
        for (const AgentRuntime& ag : agents_)
            if (!ag.failed) any_operating = true;
        for (const auto& [agent, st] : fault_stats_) {
            FaultSummary s;
            s.agent = agent;
            s.fault_time = ticks::to_seconds(st.fault_tick);
            s.kind = st.kind;
            s.first_detection =
                st.first_detection == ticks::none ? nan : ticks::to_seconds(st.first_detection);
            if (st.kind == FaultKind::Static) {
                s.all_adopted = 0.0;  // seeded into every initial view
            } else if (!any_operating) {
                s.all_adopted = nan;
            } else {
                ticks::Tick adopted = 0;
                bool complete = true;
                for (const AgentRuntime& ag : agents_) {
                    if (ag.failed) continue;
                    const auto it = st.learned.find(ag.index);
                    if (it == st.learned.end()) {
                        complete = false;
                        break;
                    }
                    adopted = std::max(adopted, it->second);
                }
                s.all_adopted = complete ? ticks::to_seconds(adopted) : nan;
            }
            trace_.fault_summaries.push_back(s);
        }
    }

    ArrayScenario sc_;
    bool full_ = true;
    double v_peak_ = 0.0;
    ticks::Tick dt_ = 0, horizon_ = 0, t_ac_ = 0, tdc_ = 0;
    ticks::Tick hb_period_ = 0, timeout_ = 0, round_ = 0, hop_ = 0;
    ticks::Tick now_ = 0;
    ticks::Tick next_heartbeat_ = 0;
    ticks::Tick next_round_ = 0;
    std::int64_t next_sample_index_ = 0;
    std::vector<AgentRuntime> agents_;
    std::vector<FaultEvent> dynamic_faults_;
    std::vector<ticks::Tick> dynamic_fault_ticks_;
    std::size_t next_fault_ = 0;
    std::priority_queue<Delivery, std::vector<Delivery>, DeliveryLater> deliveries_;
    std::uint64_t delivery_seq_ = 0;
    std::map<int, FaultStats> fault_stats_;
    WaveformTrace trace_;
};

inline ArraySystem build_array(const ArrayScenario& scenario) { return ArraySystem(scenario); }

inline WaveformTrace simulate(const ArrayScenario& scenario) {
    ArraySystem system(scenario);
    return system.run();
}

}  // namespace gridtie
