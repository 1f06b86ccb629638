#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbs/cell_model.hpp"
#include "rbs/enumerator.hpp"
#include "rbs/errors.hpp"
#include "rbs/optimizer.hpp"
#include "rbs/simulator.hpp"

namespace rbs::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open file: " + path.string(), path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes through a temp file in the same directory and renames into place,
// so a failed run never leaves a partial output.
inline void atomic_write(const fs::path& path, const std::string& content) {
    fs::path dir = path.parent_path();
    if (!dir.empty() && !fs::exists(dir))
        throw Error(ErrorCode::io, "output directory does not exist: " + dir.string(), dir.string());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::io, "cannot write file: " + tmp.string(), path.string());
        out << content;
        if (!out.good())
            throw Error(ErrorCode::io, "short write: " + tmp.string(), path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::io, "cannot move output into place: " + path.string(), path.string());
    }
}

inline json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad json in " + path.string() + ": " + e.what(), path.string());
    }
}

inline void check_schema(const json& j, const fs::path& path) {
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw Error(ErrorCode::io, "missing or unsupported schema field in " + path.string(),
                    path.string());
}

// ---------------------------------------------------------------------------
// cell model files
// ---------------------------------------------------------------------------

inline OcvCurve load_ocv_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    OcvCurve curve;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double z, v;
        if (ls >> z >> v) {
            curve.table.x.push_back(z);
            curve.table.y.push_back(v);
        }
        // non-numeric lines (headers) are skipped
    }
    curve.validate();
    return curve;
}

inline CellModel load_cell(const fs::path& path) {
    json j = parse_json_file(path);
    check_schema(j, path);
    CellModel m;
    m.name = j.value("name", path.stem().string());
    try {
        m.capacity_As = j.at("capacity_As").get<double>();
        auto grid = j.at("soc").get<std::vector<double>>();
        if (j.contains("ocv_csv")) {
            fs::path csv = path.parent_path() / j["ocv_csv"].get<std::string>();
            m.ocv = load_ocv_csv(csv);
        } else {
            m.ocv.table = {grid, j.at("ocv").get<std::vector<double>>()};
        }
        m.r0 = {grid, j.at("r0").get<std::vector<double>>()};
        m.r1 = {grid, j.at("r1").get<std::vector<double>>()};
        m.c1 = {grid, j.at("c1").get<std::vector<double>>()};
        m.r2 = {grid, j.at("r2").get<std::vector<double>>()};
        m.c2 = {grid, j.at("c2").get<std::vector<double>>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad cell file " + path.string() + ": " + e.what(), path.string());
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// design mask files: {"schema":1,"n_cells":N,"designs":{"a":[...],...}}
// ---------------------------------------------------------------------------

inline DesignMask load_design(const fs::path& path, const std::string& name) {
    json j = parse_json_file(path);
    check_schema(j, path);
    DesignMask m;
    try {
        m.n_cells = j.at("n_cells").get<int>();
        auto bits = j.at("designs").at(name).get<std::vector<int>>();
        if (static_cast<int>(bits.size()) != n_switches(m.n_cells))
            throw Error(ErrorCode::io, "design '" + name + "' has wrong length", path.string());
        for (int b : bits) m.available.push_back(static_cast<std::uint8_t>(b ? 1 : 0));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad design file " + path.string() + ": " + e.what(), path.string());
    }
    return m;
}

// ---------------------------------------------------------------------------
// scenarios
// ---------------------------------------------------------------------------

inline SwitchParams switch_params_from_json(const json& j) {
    SwitchParams p;
    if (j.contains("switch")) {
        const auto& s = j["switch"];
        p.r_ds_on = s.value("r_ds_on", p.r_ds_on);
        p.r_ds_off = s.value("r_ds_off", p.r_ds_off);
        p.r_wire = s.value("r_wire", p.r_wire);
    }
    return p;
}

inline LoadProfile load_profile_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto point = [](const json& seg) {
        const std::string k = seg.at("kind").get<std::string>();
        LoadPoint p;
        if (k == "constant_power")
            p.kind = LoadPoint::Kind::constant_power;
        else if (k == "constant_current")
            p.kind = LoadPoint::Kind::constant_current;
        else
            throw Error(ErrorCode::io, "unknown load kind '" + k + "'");
        p.value = seg.at("value").get<double>();
        return p;
    };
    LoadProfile lp;
    if (kind == "piecewise") {
        for (const auto& seg : j.at("segments"))
            lp.segments.push_back({seg.at("duration_s").get<double>(), point(seg)});
    } else {
        lp.segments.push_back({0.0, point(j)});
    }
    return lp;
}

inline Ssv ssv_from_json(const json& arr, int n_cells) {
    Ssv s;
    s.n_cells = n_cells;
    for (const auto& b : arr) s.bits.push_back(static_cast<std::uint8_t>(b.get<int>() ? 1 : 0));
    s.validate();
    return s;
}

struct LoadedScenario {
    Scenario scenario;
    std::string design_name = "a";
};

// The optional space argument resolves config_index schedule entries.
inline LoadedScenario load_scenario(const fs::path& path, const FeasibleSpace* space = nullptr) {
    json j = parse_json_file(path);
    check_schema(j, path);
    LoadedScenario out;
    Scenario& sc = out.scenario;
    fs::path base = path.parent_path();
    try {
        for (const auto& ref : j.at("cells"))
            sc.cells.push_back(load_cell(base / ref.get<std::string>()));
        const int n = static_cast<int>(sc.cells.size());

        if (j.contains("mask")) {
            sc.mask.n_cells = n;
            for (const auto& b : j["mask"])
                sc.mask.available.push_back(static_cast<std::uint8_t>(b.get<int>() ? 1 : 0));
        } else if (j.contains("design_file")) {
            out.design_name = j.value("design", "a");
            sc.mask = load_design(base / j["design_file"].get<std::string>(), out.design_name);
        } else {
            out.design_name = j.value("design", "a");
            sc.mask = design_mask_builtin(out.design_name, n);
        }
        if (sc.mask.n_cells != n)
            throw Error(ErrorCode::io, "mask cell count mismatch", path.string());

        sc.switches = switch_params_from_json(j);
        sc.dt_s = j.value("dt_s", 0.1);
        sc.method = j.value("method", std::string("euler")) == "zoh" ? DiscretizeMethod::zoh
                                                                     : DiscretizeMethod::euler;
        sc.initial_soc = j.at("initial_soc").get<std::vector<double>>();
        sc.load = load_profile_from_json(j.at("load"));

        std::vector<std::pair<int, const Ssv*>> flat;
        if (space) flat = space->flat();
        for (const auto& e : j.at("schedule")) {
            ScheduleEntry entry;
            entry.duration_s = e.at("duration_s").get<double>();
            if (e.contains("ssv")) {
                entry.ssv = ssv_from_json(e["ssv"], n);
            } else if (e.contains("config_index")) {
                if (!space)
                    throw Error(ErrorCode::io,
                                "schedule uses config_index but no feasible space was supplied",
                                path.string());
                std::size_t idx = e["config_index"].get<std::size_t>();
                if (idx >= flat.size())
                    throw Error(ErrorCode::io, "config_index out of range", path.string());
                entry.ssv = *flat[idx].second;
            } else {
                throw Error(ErrorCode::io, "schedule entry needs ssv or config_index", path.string());
            }
            sc.schedule.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad scenario " + path.string() + ": " + e.what(), path.string());
    }
    return out;
}

// ---------------------------------------------------------------------------
// trace CSV: t,v_t,i_t,i_b_1..N,v_b_1..N,soc_1..N,flags
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string trace_to_csv(const SimTrace& tr, int n_cells) {
    std::ostringstream out;
    out << "t,v_t,i_t";
    for (int i = 1; i <= n_cells; ++i) out << ",i_b_" << i;
    for (int i = 1; i <= n_cells; ++i) out << ",v_b_" << i;
    for (int i = 1; i <= n_cells; ++i) out << ",soc_" << i;
    out << ",flags\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
        out << format_double(tr.t[k]) << ',' << format_double(tr.v_t[k]) << ','
            << format_double(tr.i_t[k]);
        for (int i = 0; i < n_cells; ++i) out << ',' << format_double(tr.i_b[k](i));
        for (int i = 0; i < n_cells; ++i) out << ',' << format_double(tr.v_b[k](i));
        for (int i = 0; i < n_cells; ++i) out << ',' << format_double(tr.soc[k](i));
        out << ',' << tr.flags[k] << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// feasible space
// ---------------------------------------------------------------------------

inline json space_to_json(const FeasibleSpace& s, const std::string& design) {
    json j;
    j["schema"] = 1;
    j["n_cells"] = s.n_cells;
    j["design"] = design;
    j["v_min"] = s.v_lo;
    j["v_max"] = s.v_hi;
    json per = json::array();
    for (const auto& b : s.buckets) {
        json jb;
        jb["v"] = b.v;
        jb["count"] = b.ssvs.size();
        json list = json::array();
        for (const auto& ssv : b.ssvs) {
            json bits = json::array();
            for (auto bit : ssv.bits) bits.push_back(static_cast<int>(bit));
            list.push_back(std::move(bits));
        }
        jb["ssvs"] = std::move(list);
        per.push_back(std::move(jb));
    }
    j["per_voltage"] = std::move(per);
    j["total"] = s.total();
    double denom = std::ldexp(1.0, 5 * s.n_cells - 3);
    j["ratio"] = static_cast<double>(s.total()) / denom;
    return j;
}

inline FeasibleSpace space_from_json(const fs::path& path) {
    json j = parse_json_file(path);
    check_schema(j, path);
    FeasibleSpace s;
    try {
        s.n_cells = j.at("n_cells").get<int>();
        s.design = j.value("design", "a");
        s.v_lo = j.at("v_min").get<int>();
        s.v_hi = j.at("v_max").get<int>();
        for (const auto& jb : j.at("per_voltage")) {
            FeasibleSpace::Bucket b;
            b.v = jb.at("v").get<int>();
            for (const auto& bits : jb.at("ssvs")) b.ssvs.push_back(ssv_from_json(bits, s.n_cells));
            s.buckets.push_back(std::move(b));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad space file " + path.string() + ": " + e.what(), path.string());
    }
    return s;
}

// ---------------------------------------------------------------------------
// optimization problems and results
// ---------------------------------------------------------------------------

struct LoadedProblem {
    ControlProblem problem;
    GaParams ga;
    std::string design_name = "a";
};

inline LoadedProblem load_problem(const fs::path& path) {
    json j = parse_json_file(path);
    check_schema(j, path);
    LoadedProblem out;
    ControlProblem& pr = out.problem;
    fs::path base = path.parent_path();
    try {
        for (const auto& ref : j.at("cells"))
            pr.cells.push_back(load_cell(base / ref.get<std::string>()));
        const int n = static_cast<int>(pr.cells.size());
        if (j.contains("design_file")) {
            out.design_name = j.value("design", "a");
            pr.mask = load_design(base / j["design_file"].get<std::string>(), out.design_name);
        } else {
            out.design_name = j.value("design", "a");
            pr.mask = design_mask_builtin(out.design_name, n);
        }
        pr.switches = switch_params_from_json(j);
        pr.decision_steps = j.at("steps").get<int>();
        pr.step_duration_s = j.at("step_duration_s").get<double>();
        pr.dt_s = j.value("dt_s", 0.1);
        {
            LoadProfile lp = load_profile_from_json(j.at("load"));
            pr.load = lp.segments.front().point;
        }
        pr.initial_soc = j.at("initial_soc").get<std::vector<double>>();
        pr.soc_min = j.value("soc_min", 0.05);
        pr.soc_max = j.value("soc_max", 1.0);
        pr.c_rate_max_A = j.value("c_rate_max_A", 12.0);
        pr.v_norm_min = j.value("v_norm_min", 1);
        pr.v_norm_max = j.value("v_norm_max", 0);
        pr.penalty_weight = j.value("penalty_weight", 10.0);
        if (j.contains("ga")) {
            const auto& g = j["ga"];
            out.ga.population = g.value("pop", 100);
            out.ga.generations = g.value("gens", 220);
            out.ga.crossover_prob = g.value("pc", 0.8);
            out.ga.mutation_prob = g.value("pm", 0.1);
            out.ga.seed = g.value("seed", std::uint64_t{1});
            out.ga.elitism = g.value("elitism", 1);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, "bad problem file " + path.string() + ": " + e.what(), path.string());
    }
    return out;
}

inline json ga_result_to_json(const GaResult& r) {
    json j;
    j["schema"] = 1;
    json best;
    best["fitness"] = r.best_eval.fitness;
    best["terminal_imbalance"] = r.best_eval.terminal_imbalance;
    best["violation"] = r.best_eval.violation;
    best["aborted"] = r.best_eval.aborted;
    if (r.best_eval.final_soc.size() > 0) {
        json socs = json::array();
        for (int i = 0; i < r.best_eval.final_soc.size(); ++i) socs.push_back(r.best_eval.final_soc(i));
        best["final_socs"] = std::move(socs);
    }
    json seq = json::array();
    for (const auto& s : r.best_ssvs) {
        json bits = json::array();
        for (auto b : s.bits) bits.push_back(static_cast<int>(b));
        seq.push_back(std::move(bits));
    }
    best["ssv_sequence"] = std::move(seq);
    if (!r.best_configs.empty()) {
        json cfgs = json::array();
        for (auto [v, idx] : r.best_configs) cfgs.push_back({{"v", v}, {"index", idx}});
        best["per_step_configs"] = std::move(cfgs);
    }
    j["best"] = std::move(best);
    j["fitness_history"] = r.history;
    return j;
}

// Single-line machine-readable error for standard error.
inline std::string error_json(const Error& e) {
    json j;
    j["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
    if (!e.key().empty()) j["error"]["key"] = e.key();
    return j.dump();
}

} // namespace rbs::io
