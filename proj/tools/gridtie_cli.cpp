// Command-line front end: scenario simulation, the static-failure THD sweep,
// and the dynamic-failure Monte Carlo study. Outputs are plain CSV/JSON plus a
// manifest per invocation; everything is a pure function of (scenario, seed).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridtie/gridtie.hpp"

namespace fs = std::filesystem;
using namespace gridtie;

namespace {

constexpr const char* kOutDirEnv = "GRIDTIE_OUT_DIR";

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return env && *env ? env : ".";
}

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

void write_manifest(const fs::path& dir, RunManifest m, const Stopwatch& watch) {
    m.wall_ms = watch.ms();
    m.outputs.push_back("manifest.json");
    write_text_file(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
}

std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, const std::string& fidelity, int periods,
                 int harmonics) {
    Stopwatch watch;
    ArrayScenario sc = load_scenario(scenario_path);
    if (seed) sc.seed = *seed;
    if (fidelity == "full") sc.fidelity = Fidelity::Full;
    if (fidelity == "ideal") sc.fidelity = Fidelity::IdealSource;
    if (periods > 0) sc.horizon = periods * sc.grid.period();
    sc.validate_or_throw();

    const WaveformTrace trace = simulate(sc);

    // spectrum and THD of the last full grid period
    const THDReport rep =
        compute_thd(trace, sc.horizon - sc.grid.period(), 1, sc.grid.f_ac, harmonics);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text_file(dir / "trace.csv", trace_csv(trace));
    json meta = trace_metadata(trace, sc);
    meta["thd"] = rep.thd;
    meta["thd_percent"] = rep.percent();
    meta["thd_window"] = {{"t_start", rep.t_start}, {"t_end", rep.t_end}};
    write_text_file(dir / "metadata.json", meta.dump(2) + "\n");
    std::string spectrum = "harmonic,amplitude\n";
    for (int h = 1; h <= rep.harmonics_used; ++h)
        spectrum += std::to_string(h) + "," + csv_num(rep.magnitudes[h]) + "\n";
    write_text_file(dir / "spectrum.csv", spectrum);

    RunManifest m;
    m.target = "single_run";
    m.scenario_hash = scenario_hash(sc);
    m.seed = sc.seed;
    m.outputs = {"trace.csv", "metadata.json", "spectrum.csv"};
    write_manifest(dir, m, watch);
    std::printf("simulated %d agents over %g s: THD %.3f%% -> %s\n", sc.n_agents, sc.horizon,
                rep.percent(), dir.string().c_str());
    return 0;
}

int cmd_thd_sweep(int n_min, int n_max, int nf_max, const std::string& out_dir,
                  std::uint64_t seed, int harmonics, int periods) {
    Stopwatch watch;
    if (n_min < 1 || n_max < n_min || nf_max < 0)
        throw invalid_parameter("thd-sweep: invalid N or N_F range");
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    std::string table = "n,n_f,n_o,thd,thd_percent\n";
    ArrayScenario probe;
    for (int n = n_min; n <= n_max; ++n) {
        for (int nf = 0; nf <= nf_max; ++nf) {
            if (nf >= n) {
                std::fprintf(stderr, "skipping N=%d N_F=%d: no operating agents\n", n, nf);
                continue;
            }
            ArrayScenario sc;
            sc.n_agents = n;
            sc.fidelity = Fidelity::IdealSource;
            sc.horizon = periods * sc.grid.period();
            sc.seed = seed;
            for (int a = 1; a <= nf; ++a) sc.faults.push_back({a, 0.0, FaultKind::Static});
            const WaveformTrace trace = simulate(sc);
            const double thd = compute_thd(trace, 0.0, 1, sc.grid.f_ac, harmonics).thd;
            table += std::to_string(n) + "," + std::to_string(nf) + "," + std::to_string(n - nf) +
                     "," + csv_num(thd) + "," + csv_num(100.0 * thd) + "\n";
            probe = sc;
        }
    }
    write_text_file(dir / "thd_sweep.csv", table);

    RunManifest m;
    m.target = "static_thd_sweep";
    m.scenario_hash = scenario_hash(probe);
    m.seed = seed;
    m.outputs = {"thd_sweep.csv"};
    write_manifest(dir, m, watch);
    std::printf("thd sweep N=%d..%d, N_F<=%d -> %s\n", n_min, n_max, nf_max,
                dir.string().c_str());
    return 0;
}

int cmd_dynamic(int n, int runs, const std::string& out_dir, std::uint64_t seed, int harmonics,
                const std::string& fidelity) {
    Stopwatch watch;
    if (n < 2) throw invalid_parameter("dynamic: need at least two agents");
    if (runs < 1) throw invalid_parameter("dynamic: need at least one run");
    ArrayScenario sc;
    sc.n_agents = n;
    sc.fidelity = fidelity == "full" ? Fidelity::Full : Fidelity::IdealSource;
    sc.horizon = 3.0 * sc.grid.period();
    sc.seed = seed;

    const MonteCarloSummary mc = monte_carlo(sc, runs, harmonics, /*collect_windows=*/true);

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    std::string table = "run,seed,fault_agent,fault_time,thd,thd_percent,recovery_time,recovered\n";
    for (const RunRecord& r : mc.records)
        table += std::to_string(r.run) + "," + std::to_string(r.seed) + "," +
                 std::to_string(r.fault_agent) + "," + csv_num(r.fault_time) + "," +
                 csv_num(r.thd) + "," + csv_num(100.0 * r.thd) + "," + csv_num(r.recovery_time) +
                 "," + (r.recovered ? "1" : "0") + "\n";
    write_text_file(dir / "dynamic_runs.csv", table);

    json summary;
    summary["n_agents"] = n;
    summary["runs"] = mc.runs;
    summary["mean_thd"] = mc.mean_thd;
    summary["mean_thd_percent"] = 100.0 * mc.mean_thd;
    if (mc.ci95) {
        summary["ci95_low"] = mc.ci95->first;
        summary["ci95_high"] = mc.ci95->second;
    } else {
        summary["ci95_low"] = nullptr;
        summary["ci95_high"] = nullptr;
        summary["note"] = "confidence interval omitted: a single run has no variance estimate";
    }
    write_text_file(dir / "dynamic_summary.json", summary.dump(2) + "\n");

    // long-format windowed THD plus the across-run mean per window offset
    std::string windowed = "run,window_start,thd\n";
    std::size_t max_windows = 0;
    for (const auto& w : mc.windows) max_windows = std::max(max_windows, w.size());
    for (std::size_t r = 0; r < mc.windows.size(); ++r)
        for (const THDReport& rep : mc.windows[r])
            windowed += std::to_string(r) + "," + csv_num(rep.t_start) + "," + csv_num(rep.thd) + "\n";
    write_text_file(dir / "windowed_thd.csv", windowed);
    std::string mean_csv = "window_start,mean_thd\n";
    for (std::size_t k = 0; k < max_windows; ++k) {
        double sum = 0.0;
        int cnt = 0;
        double t_start = 0.0;
        for (const auto& w : mc.windows)
            if (k < w.size()) {
                sum += w[k].thd;
                t_start = w[k].t_start;
                ++cnt;
            }
        if (cnt > 0) mean_csv += csv_num(t_start) + "," + csv_num(sum / cnt) + "\n";
    }
    write_text_file(dir / "windowed_thd_mean.csv", mean_csv);

    RunManifest m;
    m.target = "dynamic_recovery";
    m.scenario_hash = scenario_hash(sc);
    m.seed = seed;
    m.outputs = {"dynamic_runs.csv", "dynamic_summary.json", "windowed_thd.csv",
                 "windowed_thd_mean.csv"};
    write_manifest(dir, m, watch);
    std::printf("dynamic study N=%d, %d runs: mean THD %.3f%% -> %s\n", n, runs,
                100.0 * mc.mean_thd, dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator of an N-module cascaded-inverter solar grid tie"};
    app.require_subcommand(1);

    // simulate
    std::string scenario_path;
    std::string out_dir = default_out_dir();
    std::optional<std::uint64_t> seed_override;
    std::string fidelity;
    int periods = 0;
    int harmonics = 50;
    auto* sim = app.add_subcommand("simulate", "run one scenario and export its trace");
    sim->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("--out", out_dir, "output directory (default: $GRIDTIE_OUT_DIR or .)");
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    sim->add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed_value = s; seed_set = true; },
           "override the scenario seed");
    sim->add_option("--fidelity", fidelity, "full | ideal (override the scenario)")
        ->check(CLI::IsMember({"full", "ideal"}));
    sim->add_option("--periods", periods, "override the horizon to this many grid periods");
    sim->add_option("--harmonics", harmonics, "harmonic count for the spectrum (default 50)");

    // thd-sweep
    int n_min = 10, n_max = 35, nf_max = 6;
    std::string sweep_out = default_out_dir();
    std::uint64_t sweep_seed = 1;
    int sweep_harmonics = 50;
    int sweep_periods = 1;
    auto* sweep = app.add_subcommand("thd-sweep", "steady-state THD over N and static N_F");
    sweep->add_option("--n-min", n_min, "smallest array size (default 10)");
    sweep->add_option("--n-max", n_max, "largest array size (default 35)");
    sweep->add_option("--nf-max", nf_max, "largest static failure count (default 6)");
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_option("--seed", sweep_seed, "scenario seed (default 1)");
    sweep->add_option("--harmonics", sweep_harmonics, "harmonic count (default 50)");
    sweep->add_option("--periods", sweep_periods, "periods to simulate per point (default 1)");

    // dynamic
    int dyn_n = 5;
    int dyn_runs = 20;
    std::string dyn_out = default_out_dir();
    std::uint64_t dyn_seed = 1;
    int dyn_harmonics = 50;
    std::string dyn_fidelity = "ideal";
    auto* dyn = app.add_subcommand("dynamic", "Monte Carlo study of one dynamic failure");
    dyn->add_option("--n", dyn_n, "array size")->required();
    dyn->add_option("--runs", dyn_runs, "number of runs (default 20)");
    dyn->add_option("--out", dyn_out, "output directory");
    dyn->add_option("--seed", dyn_seed, "base seed (default 1)");
    dyn->add_option("--harmonics", dyn_harmonics, "harmonic count (default 50)");
    dyn->add_option("--fidelity", dyn_fidelity, "full | ideal (default ideal)")
        ->check(CLI::IsMember({"full", "ideal"}));

    // print-scenario
    int print_n = 5;
    auto* print = app.add_subcommand("print-scenario", "write a default scenario JSON to stdout");
    print->add_option("--n", print_n, "number of agents (default 5)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(scenario_path, out_dir,
                                seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                                fidelity, periods, harmonics);
        if (sweep->parsed())
            return cmd_thd_sweep(n_min, n_max, nf_max, sweep_out, sweep_seed, sweep_harmonics,
                                 sweep_periods);
        if (dyn->parsed())
            return cmd_dynamic(dyn_n, dyn_runs, dyn_out, dyn_seed, dyn_harmonics, dyn_fidelity);
        if (print->parsed()) {
            ArrayScenario sc;
            sc.n_agents = print_n;
            std::printf("%s\n", scenario_to_json(sc).dump(2).c_str());
            return 0;
        }
    } catch (const scenario_error& e) {
        std::fprintf(stderr, "scenario rejected:\n");
        for (const auto& d : e.diagnostics()) std::fprintf(stderr, "  - %s\n", d.c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
