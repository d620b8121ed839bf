#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gridtie/engine.hpp"
#include "gridtie/io.hpp"

using namespace gridtie;
using Catch::Approx;

TEST_CASE("scenarios round-trip through JSON") {
    ArrayScenario sc;
    sc.n_agents = 7;
    sc.seed = 99;
    sc.fidelity = Fidelity::IdealSource;
    sc.horizon = 0.05;
    sc.cold_start = true;
    sc.faults.push_back({2, 0.0, FaultKind::Static});
    sc.faults.push_back({5, 0.01, FaultKind::Dynamic});

    const ArrayScenario back = scenario_from_json(scenario_to_json(sc));
    CHECK(back.n_agents == sc.n_agents);
    CHECK(back.seed == sc.seed);
    CHECK(back.fidelity == sc.fidelity);
    CHECK(back.horizon == sc.horizon);
    CHECK(back.cold_start == sc.cold_start);
    REQUIRE(back.faults.size() == 2);
    CHECK(back.faults[1].agent == 5);
    CHECK(back.faults[1].kind == FaultKind::Dynamic);
    CHECK(back.converter.L == sc.converter.L);
    CHECK(back.cyber.hop_delay == sc.cyber.hop_delay);
}

TEST_CASE("missing fields take the documented defaults") {
    const ArrayScenario sc = scenario_from_json(json::parse(R"({"n_agents": 4})"));
    CHECK(sc.n_agents == 4);
    CHECK(sc.grid.v_rms == 120.0);
    CHECK(sc.grid.f_ac == 60.0);
    CHECK(sc.converter.L == 40e-6);
    CHECK(sc.converter.V_sp == 18.6);
    CHECK(sc.sample_period == 1e-6);
    CHECK(sc.fidelity == Fidelity::Full);
}

TEST_CASE("schema violations report every offending field") {
    const json bad = json::parse(R"({
        "n_agents": 0,
        "horizon": -2.0,
        "fidelity": "imaginary",
        "grid": {"v_rms": 120.0, "volts": 1},
        "faults": [{"agent": 99, "time": 0.0, "kind": "static"}]
    })");
    try {
        scenario_from_json(bad);
        FAIL("expected scenario_error");
    } catch (const scenario_error& e) {
        const auto& d = e.diagnostics();
        auto has = [&d](const std::string& needle) {
            for (const auto& s : d)
                if (s.find(needle) != std::string::npos) return true;
            return false;
        };
        CHECK(has("fidelity"));
        CHECK(has("grid.volts"));
        REQUIRE_FALSE(d.empty());
    }

    // semantic problems surface once the schema is clean
    const json semantic = json::parse(R"({"n_agents": 0, "horizon": -2.0})");
    try {
        scenario_from_json(semantic);
        FAIL("expected scenario_error");
    } catch (const scenario_error& e) {
        CHECK(e.diagnostics().size() >= 2);
    }
}

TEST_CASE("loading a missing file fails cleanly") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), error);
}

TEST_CASE("trace CSV has the documented stable layout and is deterministic") {
    ArrayScenario sc;
    sc.n_agents = 2;
    sc.fidelity = Fidelity::IdealSource;
    sc.horizon = 1e-3;
    const WaveformTrace tr = simulate(sc);

    const std::string csv = trace_csv(tr);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "time,v_ac,v_ac_1,v_ac_2,v_dc_1,v_dc_2");

    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == tr.samples());

    CHECK(trace_csv(simulate(sc)) == csv);
}

TEST_CASE("metadata records agents, events and fault summaries") {
    ArrayScenario sc;
    sc.n_agents = 4;
    sc.fidelity = Fidelity::IdealSource;
    sc.horizon = 2.0 / 60.0;
    sc.faults.push_back({4, 0.005, FaultKind::Dynamic});
    const WaveformTrace tr = simulate(sc);
    const json meta = trace_metadata(tr, sc);
    CHECK(meta.at("tool") == "gridtie");
    CHECK(meta.at("agents").size() == 4);
    CHECK(meta.at("faults").size() == 1);
    CHECK(meta.at("faults")[0].at("kind") == "dynamic");
    bool saw_reconfigure = false;
    for (const auto& e : meta.at("events"))
        if (e.at("kind") == "reconfigure") saw_reconfigure = true;
    CHECK(saw_reconfigure);
}

TEST_CASE("scenario hashes are stable and sensitive") {
    ArrayScenario a;
    ArrayScenario b;
    CHECK(scenario_hash(a) == scenario_hash(b));
    b.seed = a.seed + 1;
    CHECK(scenario_hash(a) != scenario_hash(b));
    CHECK(scenario_hash(a).size() == 16);
}

TEST_CASE("manifests list their outputs") {
    RunManifest m;
    m.target = "static_thd_sweep";
    m.scenario_hash = "0123456789abcdef";
    m.seed = 42;
    m.outputs = {"thd_sweep.csv"};
    const json j = manifest_to_json(m);
    CHECK(j.at("target") == "static_thd_sweep");
    CHECK(j.at("outputs").size() == 1);
    CHECK(j.at("tool_version") == std::string(kVersion));
}
