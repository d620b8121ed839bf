#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gridtie/engine.hpp"
#include "gridtie/errors.hpp"
#include "gridtie/rng.hpp"
#include "gridtie/scenario.hpp"
#include "gridtie/trace.hpp"

namespace gridtie {

struct THDReport {
    double thd = 0.0;  // ratio of harmonic RMS (2..H) to the fundamental RMS
    double fundamental_rms = 0.0;
    int harmonics_used = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> magnitudes;  // amplitude per harmonic index, [0] unused

    double percent() const { return 100.0 * thd; }
};

// Harmonic amplitudes of a uniformly sampled window over exactly n_periods/f0
// seconds. The samples are treated as piecewise constant and integrated
// exactly against e^{-i h w0 t}; the last rectangle is truncated at the window
// end, so fractional-sample period lengths stay leak-free (a pure sine scores
// THD ~ 1e-12 regardless of dt).
inline THDReport compute_thd(std::span<const double> v, double dt, double f0, int harmonics,
                             int n_periods, double t_start = 0.0) {
    if (harmonics < 2) throw invalid_parameter("compute_thd: need at least 2 harmonics");
    if (!(f0 > 0.0) || !(dt > 0.0)) throw invalid_parameter("compute_thd: f0 and dt must be positive");
    if (n_periods < 1) throw window_error("compute_thd: window must span at least one period");
    if (1.0 / dt <= 2.0 * harmonics * f0)
        throw window_error("compute_thd: sample rate must exceed 2*H*f0");
    const double window = n_periods / f0;
    const auto want = static_cast<std::size_t>(std::ceil(window / dt - 1e-9));
    if (v.size() != want)
        throw window_error("compute_thd: " + std::to_string(v.size()) + " samples do not cover " +
                           std::to_string(n_periods) + " periods (expected " + std::to_string(want) +
                           ")");

    const std::size_t n = v.size();
    double peak = 0.0;
    for (double s : v) peak = std::max(peak, std::abs(s));

    THDReport rep;
    rep.harmonics_used = harmonics;
    rep.t_start = t_start;
    rep.t_end = t_start + window;
    rep.magnitudes.assign(static_cast<std::size_t>(harmonics) + 1, 0.0);
    for (int h = 1; h <= harmonics; ++h) {
        const double w = 2.0 * std::numbers::pi * h * f0;
        const std::complex<double> step = std::polar(1.0, -w * dt);
        std::complex<double> rotor{1.0, 0.0};  // e^{-i w t} at the window start
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t m = 0; m + 1 < n; ++m) {
            std::complex<double> next = rotor * step;
            if ((m & 0x1fff) == 0x1fff) next /= std::abs(next);
            acc += v[m] * (rotor - next);
            rotor = next;
        }
        // last rectangle ends at the window boundary where e^{-i w W} == 1
        acc += v[n - 1] * (rotor - std::complex<double>{1.0, 0.0});
        rep.magnitudes[static_cast<std::size_t>(h)] = 2.0 / window * std::abs(acc) / w;
    }
    const double v1 = rep.magnitudes[1];
    if (v1 <= 1e-12 * std::max(1.0, peak))
        throw degenerate_signal("compute_thd: fundamental magnitude vanishes");
    double sum2 = 0.0;
    for (int h = 2; h <= harmonics; ++h) {
        const double m = rep.magnitudes[static_cast<std::size_t>(h)];
        sum2 += m * m;
    }
    rep.thd = std::sqrt(sum2) / v1;
    rep.fundamental_rms = v1 / std::numbers::sqrt2;
    return rep;
}

// Window of the aggregate grid voltage starting at the first sample at or
// after t_start.
inline THDReport compute_thd(const WaveformTrace& trace, double t_start, int n_periods, double f0,
                             int harmonics) {
    const double dt = trace.sample_period;
    const std::size_t first = trace.index_at(t_start);
    const double window = n_periods / f0;
    const auto count = static_cast<std::size_t>(std::ceil(window / dt - 1e-9));
    if (first + count > trace.samples())
        throw window_error("compute_thd: trace is shorter than the requested window");
    const std::span<const double> span(trace.v_ac.data() + first, count);
    return compute_thd(span, dt, f0, harmonics, n_periods, trace.time.empty() ? 0.0 : trace.time[first]);
}

// THD of the ideal (2 n_op + 1)-level quarter-wave staircase with switching
// angles theta_k = asin(k/(n_op+1)): only odd harmonics are present, with
// b_h = (4/(pi h)) sum_k cos(h theta_k). Closed form, independent of the
// simulation path; the step height cancels out of the ratio.
inline double staircase_thd_oracle(int n_op, int harmonics) {
    if (n_op < 1) throw invalid_parameter("staircase_thd_oracle: n_op must be >= 1");
    if (harmonics < 2) throw invalid_parameter("staircase_thd_oracle: need at least 2 harmonics");
    std::vector<double> thetas(static_cast<std::size_t>(n_op));
    for (int k = 1; k <= n_op; ++k)
        thetas[static_cast<std::size_t>(k - 1)] = std::asin(static_cast<double>(k) / (n_op + 1));
    double fundamental = 0.0;
    double sum2 = 0.0;
    for (int h = 1; h <= harmonics; h += 2) {
        double c = 0.0;
        for (double th : thetas) c += std::cos(h * th);
        const double bh = 4.0 / (std::numbers::pi * h) * c;
        if (h == 1)
            fundamental = bh;
        else
            sum2 += bh * bh;
    }
    return std::sqrt(sum2) / std::abs(fundamental);
}

// Sliding one-period windows stepped by step_fraction * T; used to watch THD
// settle after a failure.
inline std::vector<THDReport> windowed_thd(const WaveformTrace& trace, double f0, int harmonics,
                                           double step_fraction = 1.0 / 16.0) {
    if (!(f0 > 0.0)) throw invalid_parameter("windowed_thd: f0 must be positive");
    if (!(step_fraction > 0.0)) throw invalid_parameter("windowed_thd: step fraction must be positive");
    const double dt = trace.sample_period;
    const double period = 1.0 / f0;
    const auto count = static_cast<std::size_t>(std::ceil(period / dt - 1e-9));
    if (trace.samples() < 2 * count)
        throw window_error("windowed_thd: trace must span at least two periods");
    const auto step =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(step_fraction * period / dt)));
    std::vector<THDReport> out;
    for (std::size_t first = 0; first + count <= trace.samples(); first += step) {
        const std::span<const double> span(trace.v_ac.data() + first, count);
        out.push_back(compute_thd(span, dt, f0, harmonics, 1, trace.time[first]));
    }
    return out;
}

// Start of the first window (at or after the failure) from which every later
// window stays within tolerance_pp of the steady THD, minus the failure time.
// NaN when the trace never settles.
inline double recovery_time(const std::vector<THDReport>& windows, double fault_time,
                            double steady_thd, double tolerance_pp = 0.5) {
    const double tol = tolerance_pp / 100.0;
    double last_bad_start = -std::numeric_limits<double>::infinity();
    for (const THDReport& w : windows)
        if (std::abs(w.thd - steady_thd) > tol) last_bad_start = std::max(last_bad_start, w.t_start);
    for (const THDReport& w : windows) {
        if (w.t_start < fault_time - 1e-12) continue;
        if (w.t_start > last_bad_start) return w.t_start - fault_time;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Distinct plateau values among the samples: clusters separated by more than
// min_gap count as separate levels.
inline int count_plateau_levels(std::span<const double> v, double min_gap) {
    if (v.empty()) return 0;
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    int levels = 1;
    double anchor = sorted.front();
    for (double s : sorted) {
        if (s - anchor > min_gap) {
            ++levels;
            anchor = s;
        }
    }
    return levels;
}

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    int fault_agent = 0;
    double fault_time = 0.0;
    double thd = 0.0;            // post-recovery, last full period
    double recovery_time = 0.0;  // NaN when the run never settles
    double adoption_latency = 0.0;
    bool recovered = false;
};

struct MonteCarloSummary {
    int runs = 0;
    double mean_thd = 0.0;
    std::optional<std::pair<double, double>> ci95;  // absent for a single run
    std::vector<RunRecord> records;
    std::vector<std::vector<THDReport>> windows;  // filled when requested
};

// Mean and normal-approximation 95% confidence interval over the per-run THDs.
inline MonteCarloSummary summarize_runs(std::vector<RunRecord> records) {
    MonteCarloSummary s;
    s.runs = static_cast<int>(records.size());
    if (records.empty()) return s;
    double sum = 0.0;
    for (const RunRecord& r : records) sum += r.thd;
    s.mean_thd = sum / s.runs;
    if (s.runs >= 2) {
        double ss = 0.0;
        for (const RunRecord& r : records) ss += (r.thd - s.mean_thd) * (r.thd - s.mean_thd);
        const double half = 1.96 * std::sqrt(ss / (s.runs - 1)) / std::sqrt(static_cast<double>(s.runs));
        s.ci95 = {s.mean_thd - half, s.mean_thd + half};
    }
    s.records = std::move(records);
    return s;
}

// Independent runs of the base scenario, each with one extra dynamic failure:
// the failed agent is drawn uniformly from the operating agents and the
// failure time uniformly over the first grid period. Reports the THD of the
// last full period plus the recovery time against the analytic staircase THD
// of the surviving configuration.
inline MonteCarloSummary monte_carlo(const ArrayScenario& base, int runs, int harmonics = 50,
                                     bool collect_windows = false) {
    if (runs < 1) throw invalid_parameter("monte_carlo: needs at least one run");
    const double period = base.grid.period();
    ArrayScenario sc = base;
    sc.horizon = std::max(base.horizon, 3.0 * period);

    std::vector<int> operating;
    std::set<int> static_failed;
    for (const FaultEvent& f : base.faults)
        if (f.kind == FaultKind::Static) static_failed.insert(f.agent);
    for (int i = 1; i <= base.n_agents; ++i)
        if (!static_failed.count(i)) operating.push_back(i);
    if (operating.size() < 2)
        throw invalid_parameter("monte_carlo: need at least two operating agents");
    const int n_after = static_cast<int>(operating.size()) - 1;
    const double steady = staircase_thd_oracle(n_after, harmonics);

    std::vector<RunRecord> records;
    records.reserve(static_cast<std::size_t>(runs));
    std::vector<std::vector<THDReport>> all_windows;
    for (int r = 0; r < runs; ++r) {
        const std::uint64_t run_seed = mix_seed(base.seed, static_cast<std::uint64_t>(r));
        std::mt19937_64 gen(run_seed);
        const auto pick = static_cast<std::size_t>(uniform01(gen) * operating.size());
        const int agent = operating[std::min(pick, operating.size() - 1)];
        const double fault_time = std::max(uniform01(gen) * period, sc.sample_period);

        sc.seed = run_seed;
        sc.faults = base.faults;
        sc.faults.push_back({agent, fault_time, FaultKind::Dynamic});
        const WaveformTrace trace = simulate(sc);

        RunRecord rec;
        rec.run = r;
        rec.seed = run_seed;
        rec.fault_agent = agent;
        rec.fault_time = fault_time;
        rec.thd = compute_thd(trace, sc.horizon - period, 1, base.grid.f_ac, harmonics).thd;
        const auto windows = windowed_thd(trace, base.grid.f_ac, harmonics);
        rec.recovery_time = recovery_time(windows, fault_time, steady);
        rec.recovered = std::isfinite(rec.recovery_time);
        rec.adoption_latency = std::numeric_limits<double>::quiet_NaN();
        for (const FaultSummary& fs : trace.fault_summaries)
            if (fs.agent == agent && fs.kind == FaultKind::Dynamic)
                rec.adoption_latency = fs.all_adopted - fs.fault_time;
        records.push_back(rec);
        if (collect_windows) all_windows.push_back(windows);
    }
    MonteCarloSummary s = summarize_runs(std::move(records));
    s.windows = std::move(all_windows);
    return s;
}

}  // namespace gridtie
