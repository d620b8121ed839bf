#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "gridtie/converter.hpp"
#include "gridtie/errors.hpp"
#include "gridtie/hbridge.hpp"

namespace gridtie {

// Cyber-layer timing. The defaults keep detection plus line dissemination
// well under half a grid period even at N = 35 (34 hops at 0.1 ms).
struct CyberParams {
    double heartbeat_period = 0.25e-3;
    double detection_timeout = 0.5e-3;
    double gossip_round = 0.25e-3;
    double hop_delay = 0.1e-3;

    void validate() const {
        if (!(heartbeat_period > 0.0) || !(detection_timeout > 0.0) || !(gossip_round > 0.0) ||
            !(hop_delay > 0.0))
            throw invalid_parameter("cyber timing parameters must be strictly positive");
    }
};

struct AgentStatus {
    int index = 0;
    bool failed = false;
    double fail_time = std::numeric_limits<double>::quiet_NaN();
};

// One agent's knowledge of the array: failure counts to each side, its rank
// among the operating agents, and its current communication neighbors.
struct CoordinationView {
    int owner = 0;
    int left_failures = 0;
    int right_failures = 0;
    std::optional<int> op_id;
    int n_op = 0;
    std::optional<int> left_nbr;
    std::optional<int> right_nbr;
    double last_update = 0.0;
};

struct GossipMessage {
    int origin = 0;
    std::set<int> failed_set;
    double hop_time = 0.0;
};

// op_id = owner - |{failed j < owner}|; none when the owner itself failed.
// Operating identifiers stay contiguous 1..n_op and order-preserving.
inline std::pair<std::optional<int>, int> compute_identifier(int owner,
                                                             const std::set<int>& failed_set,
                                                             int n_total) {
    if (owner < 1 || owner > n_total)
        throw invalid_identifier("compute_identifier: owner index out of range");
    const int n_op = n_total - static_cast<int>(failed_set.size());
    if (failed_set.count(owner)) return {std::nullopt, n_op};
    const int below =
        static_cast<int>(std::distance(failed_set.begin(), failed_set.lower_bound(owner)));
    return {owner - below, n_op};
}

// Nearest operating indices on each side of an operating owner.
inline std::pair<std::optional<int>, std::optional<int>> neighbors(int owner,
                                                                   const std::set<int>& failed_set,
                                                                   int n_total) {
    if (owner < 1 || owner > n_total) throw invalid_identifier("neighbors: owner index out of range");
    if (failed_set.count(owner)) throw contract_violation("neighbors: owner is not operating");
    std::optional<int> left;
    for (int j = owner - 1; j >= 1; --j)
        if (!failed_set.count(j)) {
            left = j;
            break;
        }
    std::optional<int> right;
    for (int j = owner + 1; j <= n_total; ++j)
        if (!failed_set.count(j)) {
            right = j;
            break;
        }
    return {left, right};
}

// Last heartbeat a failed agent managed to send: the last period boundary
// strictly before its failure (a failure on the boundary preempts that beat).
inline double last_heartbeat_before(double fail_time, double period) {
    double k = std::floor(fail_time / period);
    if (k * period >= fail_time) k -= 1.0;
    if (k < 0.0) k = 0.0;
    return k * period;
}

// Failed agents whose heartbeat silence has exceeded the timeout and that are
// not already known. Re-detection of known failures is suppressed.
inline std::set<int> heartbeat_detect(double now, const std::vector<AgentStatus>& statuses,
                                      const std::set<int>& already_known, const CyberParams& cfg) {
    cfg.validate();
    std::set<int> out;
    for (const auto& st : statuses) {
        if (!st.failed || already_known.count(st.index)) continue;
        if (now >= last_heartbeat_before(st.fail_time, cfg.heartbeat_period) + cfg.detection_timeout)
            out.insert(st.index);
    }
    return out;
}

// Ground truth of who can exchange messages.
struct GossipNetwork {
    int n_agents = 0;
    std::set<int> failed;
};

// One synchronous gossip round on the line: every operating agent with any
// knowledge pushes its failed-set to the neighbors it believes operating.
// Messages to actually-failed receivers are lost; knowledge only grows.
inline std::vector<std::set<int>> gossip_step(const std::vector<std::set<int>>& views,
                                              const GossipNetwork& net) {
    std::vector<std::set<int>> out = views;
    for (int i = 1; i <= net.n_agents; ++i) {
        if (net.failed.count(i)) continue;
        const std::set<int>& know = views[i - 1];
        if (know.empty()) continue;
        const auto [l, r] = neighbors(i, know, net.n_agents);
        for (const std::optional<int>& nb : {l, r}) {
            if (!nb || net.failed.count(*nb)) continue;
            out[*nb - 1].insert(know.begin(), know.end());
        }
    }
    return out;
}

// Assemble an agent's full view from its knowledge set.
inline CoordinationView make_view(int owner, const std::set<int>& failed_set, int n_total,
                                  double now = 0.0) {
    CoordinationView v;
    v.owner = owner;
    v.last_update = now;
    const int below =
        static_cast<int>(std::distance(failed_set.begin(), failed_set.lower_bound(owner)));
    v.left_failures = below;
    v.right_failures = static_cast<int>(failed_set.size()) - below - (failed_set.count(owner) ? 1 : 0);
    auto [id, n_op] = compute_identifier(owner, failed_set, n_total);
    v.op_id = id;
    v.n_op = n_op;
    if (id) {
        auto [l, r] = neighbors(owner, failed_set, n_total);
        v.left_nbr = l;
        v.right_nbr = r;
    }
    return v;
}

// New reference voltage and switching schedule for an operating agent's view.
inline std::pair<double, SwitchingSchedule> reconfigure(const CoordinationView& view, double v_peak,
                                                        double t_ac) {
    if (view.n_op == 0)
        throw no_operating_agents("reconfigure: all agents failed, grid tie must disconnect");
    if (!view.op_id) throw contract_violation("reconfigure: owner is not operating");
    const double v_ref = reference_voltage(v_peak, view.n_op);
    return {v_ref, switching_schedule(*view.op_id, view.n_op, t_ac)};
}

}  // namespace gridtie
