#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridtie/errors.hpp"
#include "gridtie/scenario.hpp"
#include "gridtie/trace.hpp"
#include "gridtie/version.hpp"

namespace gridtie {

using json = nlohmann::ordered_json;

inline std::string fidelity_name(Fidelity f) {
    return f == Fidelity::Full ? "full" : "ideal";
}

inline std::string fault_kind_name(FaultKind k) {
    return k == FaultKind::Static ? "static" : "dynamic";
}

// Canonical (key-ordered, fully explicit) form of a scenario.
inline json scenario_to_json(const ArrayScenario& sc) {
    json j;
    j["version"] = 1;
    j["n_agents"] = sc.n_agents;
    j["grid"] = {{"v_rms", sc.grid.v_rms}, {"f_ac", sc.grid.f_ac}};
    j["converter"] = {{"inductance", sc.converter.L},
                      {"capacitance", sc.converter.C},
                      {"resistance", sc.converter.R},
                      {"pwm_period", sc.converter.T_dc},
                      {"panel_voltage", sc.converter.V_sp}};
    j["tolerance"] = {{"component_pct", sc.tolerance.component_pct},
                      {"panel_pct", sc.tolerance.panel_pct}};
    j["cyber"] = {{"heartbeat_period", sc.cyber.heartbeat_period},
                  {"detection_timeout", sc.cyber.detection_timeout},
                  {"gossip_round", sc.cyber.gossip_round},
                  {"hop_delay", sc.cyber.hop_delay}};
    json faults = json::array();
    for (const FaultEvent& f : sc.faults)
        faults.push_back({{"agent", f.agent}, {"time", f.time}, {"kind", fault_kind_name(f.kind)}});
    j["faults"] = faults;
    j["horizon"] = sc.horizon;
    j["seed"] = sc.seed;
    j["fidelity"] = fidelity_name(sc.fidelity);
    j["sample_period"] = sc.sample_period;
    j["cold_start"] = sc.cold_start;
    return j;
}

namespace detail {

class FieldReader {
public:
    explicit FieldReader(const json& j) : j_(j) {}

    template <typename T>
    void read(const char* key, T& out) {
        if (!j_.contains(key)) return;
        seen_.push_back(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            diags_.push_back(std::string(key) + ": wrong type");
        }
    }

    const json* object(const char* key) {
        if (!j_.contains(key)) return nullptr;
        seen_.push_back(key);
        if (!j_.at(key).is_object()) {
            diags_.push_back(std::string(key) + ": expected an object");
            return nullptr;
        }
        return &j_.at(key);
    }

    void mark_seen(const char* key) { seen_.push_back(key); }

    void flag_unknown() {
        for (const auto& [key, value] : j_.items())
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
                diags_.push_back(key + ": unknown field");
    }

    std::vector<std::string>& diags() { return diags_; }

private:
    const json& j_;
    std::vector<std::string> seen_;
    std::vector<std::string> diags_;
};

}  // namespace detail

// Parse with defaulting; every schema problem is collected and reported in one
// scenario_error, followed by the semantic validation pass.
inline ArrayScenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw scenario_error("invalid scenario", {"document: expected a JSON object"});
    ArrayScenario sc;
    detail::FieldReader top(j);
    int version = 1;
    top.read("version", version);
    if (version != 1) top.diags().push_back("version: unsupported (expected 1)");
    top.read("n_agents", sc.n_agents);
    if (const json* g = top.object("grid")) {
        detail::FieldReader r(*g);
        r.read("v_rms", sc.grid.v_rms);
        r.read("f_ac", sc.grid.f_ac);
        r.flag_unknown();
        for (auto& d : r.diags()) top.diags().push_back("grid." + d);
    }
    if (const json* c = top.object("converter")) {
        detail::FieldReader r(*c);
        r.read("inductance", sc.converter.L);
        r.read("capacitance", sc.converter.C);
        r.read("resistance", sc.converter.R);
        r.read("pwm_period", sc.converter.T_dc);
        r.read("panel_voltage", sc.converter.V_sp);
        r.flag_unknown();
        for (auto& d : r.diags()) top.diags().push_back("converter." + d);
    }
    if (const json* t = top.object("tolerance")) {
        detail::FieldReader r(*t);
        r.read("component_pct", sc.tolerance.component_pct);
        r.read("panel_pct", sc.tolerance.panel_pct);
        r.flag_unknown();
        for (auto& d : r.diags()) top.diags().push_back("tolerance." + d);
    }
    if (const json* c = top.object("cyber")) {
        detail::FieldReader r(*c);
        r.read("heartbeat_period", sc.cyber.heartbeat_period);
        r.read("detection_timeout", sc.cyber.detection_timeout);
        r.read("gossip_round", sc.cyber.gossip_round);
        r.read("hop_delay", sc.cyber.hop_delay);
        r.flag_unknown();
        for (auto& d : r.diags()) top.diags().push_back("cyber." + d);
    }
    if (j.contains("faults")) {
        top.mark_seen("faults");
        if (!j.at("faults").is_array()) {
            top.diags().push_back("faults: expected an array");
        } else {
            std::size_t i = 0;
            for (const json& fj : j.at("faults")) {
                const std::string tag = "faults[" + std::to_string(i++) + "]";
                if (!fj.is_object()) {
                    top.diags().push_back(tag + ": expected an object");
                    continue;
                }
                FaultEvent f;
                detail::FieldReader r(fj);
                r.read("agent", f.agent);
                r.read("time", f.time);
                std::string kind = "static";
                r.read("kind", kind);
                if (kind == "static")
                    f.kind = FaultKind::Static;
                else if (kind == "dynamic")
                    f.kind = FaultKind::Dynamic;
                else
                    top.diags().push_back(tag + ".kind: expected \"static\" or \"dynamic\"");
                r.flag_unknown();
                for (auto& d : r.diags()) top.diags().push_back(tag + "." + d);
                sc.faults.push_back(f);
            }
        }
    }
    top.read("horizon", sc.horizon);
    top.read("seed", sc.seed);
    if (j.contains("fidelity")) {
        std::string fid;
        top.read("fidelity", fid);
        if (fid == "full")
            sc.fidelity = Fidelity::Full;
        else if (fid == "ideal")
            sc.fidelity = Fidelity::IdealSource;
        else
            top.diags().push_back("fidelity: expected \"full\" or \"ideal\"");
    }
    top.read("sample_period", sc.sample_period);
    top.read("cold_start", sc.cold_start);
    top.flag_unknown();

    std::vector<std::string> diags = top.diags();
    if (diags.empty())
        for (auto& d : sc.validate()) diags.push_back(d);
    if (!diags.empty()) throw scenario_error("invalid scenario", std::move(diags));
    return sc;
}

inline ArrayScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open scenario file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw scenario_error("invalid scenario", {std::string("parse error: ") + e.what()});
    }
    return scenario_from_json(j);
}

inline void save_scenario(const ArrayScenario& sc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot write scenario file: " + path.string());
    out << scenario_to_json(sc).dump(2) << "\n";
}

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string scenario_hash(const ArrayScenario& sc) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(scenario_to_json(sc).dump())));
    return buf;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

// Column order is stable: time, aggregate v_ac, per-agent v_ac, per-agent v_dc.
inline void write_trace_csv(const WaveformTrace& trace, std::ostream& out) {
    const int n = trace.n_agents();
    out << "time,v_ac";
    for (int i = 1; i <= n; ++i) out << ",v_ac_" << i;
    for (int i = 1; i <= n; ++i) out << ",v_dc_" << i;
    out << "\n";
    for (std::size_t k = 0; k < trace.samples(); ++k) {
        out << detail::fmt_double(trace.time[k]) << ',' << detail::fmt_double(trace.v_ac[k]);
        for (int i = 0; i < n; ++i) out << ',' << detail::fmt_double(trace.agent_v_ac[i][k]);
        for (int i = 0; i < n; ++i) out << ',' << detail::fmt_double(trace.agent_v_dc[i][k]);
        out << "\n";
    }
}

inline std::string trace_csv(const WaveformTrace& trace) {
    std::ostringstream out;
    write_trace_csv(trace, out);
    return out.str();
}

inline json trace_metadata(const WaveformTrace& trace, const ArrayScenario& sc) {
    json j;
    j["tool"] = "gridtie";
    j["tool_version"] = kVersion;
    j["seed"] = trace.seed;
    j["fidelity"] = fidelity_name(trace.fidelity);
    j["sample_period"] = trace.sample_period;
    j["samples"] = trace.samples();
    j["scenario"] = scenario_to_json(sc);
    json agents = json::array();
    for (const AgentRecord& a : trace.agents)
        agents.push_back({{"index", a.index},
                          {"inductance", a.params.L},
                          {"capacitance", a.params.C},
                          {"resistance", a.params.R},
                          {"pwm_period", a.params.T_dc},
                          {"panel_voltage", a.params.V_sp}});
    j["agents"] = agents;
    json events = json::array();
    for (const TraceEvent& e : trace.events)
        events.push_back({{"time", e.time}, {"agent", e.agent}, {"kind", e.kind}, {"detail", e.detail}});
    j["events"] = events;
    json faults = json::array();
    for (const FaultSummary& f : trace.fault_summaries)
        faults.push_back({{"agent", f.agent},
                          {"time", f.fault_time},
                          {"kind", fault_kind_name(f.kind)},
                          {"first_detection", f.first_detection},
                          {"all_adopted", f.all_adopted}});
    j["faults"] = faults;
    return j;
}

// One manifest per CLI invocation; every output file is listed in exactly one
// manifest.
struct RunManifest {
    std::string target;  // which experiment the run reproduces
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    double wall_ms = 0.0;
};

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["tool"] = "gridtie";
    j["tool_version"] = kVersion;
    j["target"] = m.target;
    j["scenario_hash"] = m.scenario_hash;
    j["seed"] = m.seed;
    j["outputs"] = m.outputs;
    j["wall_ms"] = m.wall_ms;
    return j;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write file: " + path.string());
    out << content;
}

}  // namespace gridtie
