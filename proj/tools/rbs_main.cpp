// Command-line front end for the reconfigurable battery toolkit: enumerate
// and count feasible switch-state spaces, run simulations, replay the bundled
// 12-configuration discharge scenario, cross-validate the configuration
// enumerator, and run the SoC-balancing optimizer.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "rbs/cell_model.hpp"
#include "rbs/enumerator.hpp"
#include "rbs/errors.hpp"
#include "rbs/io.hpp"
#include "rbs/log.hpp"
#include "rbs/network.hpp"
#include "rbs/optimizer.hpp"
#include "rbs/simulator.hpp"
#include "rbs/topology.hpp"

namespace fs = std::filesystem;
using rbs::io::json;

namespace {

rbs::DesignMask resolve_mask(int n_cells, const std::string& design,
                             const std::string& design_file) {
    if (!design_file.empty()) return rbs::io::load_design(design_file, design);
    return rbs::design_mask_builtin(design, n_cells);
}

std::string format_ratio(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", r);
    return buf;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-")
        std::cout << content;
    else
        rbs::io::atomic_write(out_path, content);
}

int cmd_count(int n_lo, int n_hi, const std::string& format, const std::string& out_path) {
    std::ostringstream out;
    std::vector<rbs::CountTable> tables;
    for (int n = n_lo; n <= n_hi; ++n) tables.push_back(rbs::count_space(n));
    int vmax = n_hi;
    if (format == "csv") {
        out << "v";
        for (const auto& t : tables) out << ",n" << t.n_cells;
        out << "\n";
        for (int v = 1; v <= vmax; ++v) {
            out << v;
            for (const auto& t : tables) {
                out << ',';
                if (v <= t.n_cells) out << t.per_v[static_cast<std::size_t>(v - 1)];
            }
            out << "\n";
        }
        out << "total";
        for (const auto& t : tables) out << ',' << t.total;
        out << "\ncomplete";
        for (const auto& t : tables) out << ',' << format_ratio(t.complete_size);
        out << "\nratio";
        for (const auto& t : tables) out << ',' << format_ratio(t.ratio);
        out << "\n";
    } else {
        out << "feasible switch-state counts per normalized voltage\n";
        out << "v\\n ";
        for (const auto& t : tables) out << '\t' << t.n_cells;
        out << "\n";
        for (int v = 1; v <= vmax; ++v) {
            out << v << "   ";
            for (const auto& t : tables) {
                out << '\t';
                if (v <= t.n_cells)
                    out << t.per_v[static_cast<std::size_t>(v - 1)];
                else
                    out << '-';
            }
            out << "\n";
        }
        out << "total";
        for (const auto& t : tables) out << '\t' << t.total;
        out << "\nratio";
        for (const auto& t : tables) out << '\t' << format_ratio(t.ratio);
        out << "\n";
    }
    emit(out_path, out.str());
    return 0;
}

int cmd_enumerate(int n, int v_lo, int v_hi, const std::string& design,
                  const std::string& design_file, const std::string& out_path) {
    if (v_hi <= 0) v_hi = n;
    rbs::DesignMask mask = resolve_mask(n, design, design_file);
    rbs::FeasibleSpace space = rbs::build_space(n, v_lo, v_hi, mask);
    json j = rbs::io::space_to_json(space, design);
    emit(out_path, j.dump(2) + "\n");
    rbs::log::info("enumerated " + std::to_string(space.total()) + " configurations");
    return 0;
}

int cmd_validate(int n, int v_lo, int v_hi) {
    if (v_hi <= 0) v_hi = n;
    auto key = [](const rbs::Ssv& s) { return s.bits; };
    std::set<std::vector<std::uint8_t>> dp_set, naive_set;
    for (auto& [v, cfg] : rbs::enumerate_cps(n, v_lo, v_hi))
        dp_set.insert(key(rbs::ssv_from_config(cfg)));
    for (auto& [v, cfg] : rbs::naive_cps(n, v_lo, v_hi))
        naive_set.insert(key(rbs::ssv_from_config(cfg)));
    bool ok = dp_set == naive_set;
    std::cout << "cells=" << n << " dp=" << dp_set.size() << " naive=" << naive_set.size()
              << (ok ? " MATCH" : " MISMATCH") << "\n";
    if (!ok) throw rbs::Error(rbs::ErrorCode::domain, "enumerations disagree");
    return 0;
}

int cmd_simulate(const std::string& config, const std::string& space_path,
                 const std::string& out_path) {
    std::optional<rbs::FeasibleSpace> space;
    if (!space_path.empty()) space = rbs::io::space_from_json(space_path);
    auto loaded = rbs::io::load_scenario(config, space ? &*space : nullptr);
    rbs::SimTrace trace = rbs::run(loaded.scenario);
    emit(out_path, rbs::io::trace_to_csv(trace, static_cast<int>(loaded.scenario.cells.size())));
    if (trace.error) {
        throw rbs::Error(trace.error->code,
                         "simulation aborted at sample " + std::to_string(trace.error->sample_index) +
                             ": " + trace.error->message,
                         std::to_string(trace.error->sample_index));
    }
    rbs::log::info("simulated " + std::to_string(trace.size()) + " samples");
    return 0;
}

int cmd_replay(const std::string& cell_file, const std::string& out_path) {
    // Bundled 12-configuration constant-power discharge on three cells with
    // the reduced switch set, parameterized only by the cell model file.
    fs::path self_dir = fs::path(RBS_FIXTURE_DIR);
    auto loaded = rbs::io::load_scenario(self_dir / "replay_3cell.json");
    if (!cell_file.empty()) {
        rbs::CellModel cell = rbs::io::load_cell(cell_file);
        for (auto& c : loaded.scenario.cells) c = cell;
    }
    rbs::SimTrace trace = rbs::run(loaded.scenario);
    emit(out_path, rbs::io::trace_to_csv(trace, 3));
    if (trace.error)
        throw rbs::Error(trace.error->code, "replay aborted: " + trace.error->message);
    std::cout << "replay complete: " << trace.size() << " samples, v_t "
              << trace.v_t.front() << " -> " << trace.v_t.back() << " V\n";
    return 0;
}

int cmd_optimize(const std::string& config, bool complete_space, const std::string& space_path,
                 const std::string& out_path, const std::string& trace_dir, int threads) {
    auto loaded = rbs::io::load_problem(config);
    rbs::ControlProblem& pr = loaded.problem;
    loaded.ga.threads = threads;

    rbs::GaResult result;
    if (complete_space) {
        result = rbs::ga_run_complete(pr, loaded.ga);
    } else {
        rbs::FeasibleSpace space;
        if (!space_path.empty()) {
            space = rbs::io::space_from_json(space_path);
        } else {
            int n = static_cast<int>(pr.cells.size());
            int v_hi = pr.v_norm_max > 0 ? pr.v_norm_max : n;
            space = rbs::build_space(n, pr.v_norm_min, v_hi, pr.mask);
        }
        result = rbs::ga_run(pr, space, loaded.ga);
    }

    json j = rbs::io::ga_result_to_json(result);
    j["space"] = complete_space ? "complete" : "feasible";
    emit(out_path, j.dump(2) + "\n");

    if (!trace_dir.empty() && !result.best_ssvs.empty() && !result.best_eval.aborted) {
        // Re-simulate the best sequence and write one trace per decision step.
        rbs::Scenario sc;
        sc.cells = pr.cells;
        sc.mask = rbs::DesignMask::all_ones(static_cast<int>(pr.cells.size()));
        sc.switches = pr.switches;
        sc.dt_s = pr.dt_s;
        sc.initial_soc = pr.initial_soc;
        sc.load.segments.push_back({0.0, pr.load});
        for (const auto& s : result.best_ssvs) sc.schedule.push_back({pr.step_duration_s, s});
        rbs::SimTrace trace = rbs::run(sc);
        int per = static_cast<int>(std::round(pr.step_duration_s / pr.dt_s));
        for (int k = 0; k < pr.decision_steps; ++k) {
            rbs::SimTrace part;
            part.dt_s = trace.dt_s;
            for (int i = k * per; i < (k + 1) * per && i < static_cast<int>(trace.size()); ++i) {
                part.t.push_back(trace.t[static_cast<std::size_t>(i)]);
                part.X.push_back(trace.X[static_cast<std::size_t>(i)]);
                part.i_b.push_back(trace.i_b[static_cast<std::size_t>(i)]);
                part.v_b.push_back(trace.v_b[static_cast<std::size_t>(i)]);
                part.soc.push_back(trace.soc[static_cast<std::size_t>(i)]);
                part.v_t.push_back(trace.v_t[static_cast<std::size_t>(i)]);
                part.i_t.push_back(trace.i_t[static_cast<std::size_t>(i)]);
                part.flags.push_back(trace.flags[static_cast<std::size_t>(i)]);
            }
            fs::path p = fs::path(trace_dir) / ("step_" + std::to_string(k + 1) + ".csv");
            rbs::io::atomic_write(p, rbs::io::trace_to_csv(part, static_cast<int>(pr.cells.size())));
        }
    }
    std::cout << "best fitness " << result.best_eval.fitness << " terminal imbalance "
              << result.best_eval.terminal_imbalance << "\n";
    return 0;
}

int cmd_dump_model(bool table2, const std::string& cell_file, double soc, int n_cells,
                   const std::string& ssv_str, const std::string& out_path) {
    std::ostringstream out;
    if (table2) {
        out << "index,s1,s2,s3,s4,s5,position\n";
        const auto& t = rbs::cell_pattern_table();
        for (std::size_t i = 0; i < t.size(); ++i) {
            out << (i + 1);
            for (int b : t[i].bits) out << ',' << b;
            out << ",\"" << t[i].position << "\"\n";
        }
        emit(out_path, out.str());
        return 0;
    }
    if (cell_file.empty())
        throw rbs::Error(rbs::ErrorCode::usage, "dump-model needs --table2 or --cell");
    rbs::CellModel cell = rbs::io::load_cell(cell_file);
    if (ssv_str.empty()) {
        rbs::CellParams p = rbs::params_at(cell, soc);
        json j;
        j["schema"] = 1;
        j["name"] = cell.name;
        j["soc"] = soc;
        j["ocv"] = p.ocv;
        j["slope"] = p.kv;
        j["r0"] = p.r0;
        j["r1"] = p.r1;
        j["c1"] = p.c1;
        j["r2"] = p.r2;
        j["c2"] = p.c2;
        j["tau1"] = p.tau1();
        j["tau2"] = p.tau2();
        j["capacity_As"] = p.capacity_As;
        emit(out_path, j.dump(2) + "\n");
        return 0;
    }
    // realization dump as CSV blocks
    rbs::Ssv ssv;
    ssv.n_cells = n_cells;
    for (char c : ssv_str)
        if (c == '0' || c == '1') ssv.bits.push_back(static_cast<std::uint8_t>(c - '0'));
    ssv.validate();
    std::vector<rbs::CellParams> params(static_cast<std::size_t>(n_cells), rbs::params_at(cell, soc));
    auto ss = rbs::assemble(params, ssv, rbs::SwitchParams{});
    auto put = [&](const char* name, const rbs::Mat& m) {
        out << name << "\n";
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << rbs::io::format_double(m(r, c));
            out << "\n";
        }
    };
    put("A", ss.A);
    put("B", ss.B);
    put("C_IB", ss.C_IB);
    put("D_IB", ss.D_IB);
    put("C_VB", ss.C_VB);
    put("D_VB", ss.D_VB);
    put("C_vt", ss.C_vt);
    out << "D_vt\n" << rbs::io::format_double(ss.D_vt) << "\n";
    emit(out_path, out.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reconfigurable battery system toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = hardware)");

    auto* count = app.add_subcommand("count", "print feasible-configuration counts");
    int count_n = 0, count_n_from = 0;
    std::string count_format = "text", count_out;
    count->add_option("--cells", count_n, "cell count (or upper end with --from)")->required();
    count->add_option("--from", count_n_from, "lower cell count for a table");
    count->add_option("--format", count_format, "text|csv");
    count->add_option("--out", count_out, "output path (default stdout)");

    auto* enumerate = app.add_subcommand("enumerate", "write the feasible space as JSON");
    int enum_n = 0, enum_vlo = 1, enum_vhi = 0;
    std::string enum_design = "a", enum_design_file, enum_out;
    enumerate->add_option("--cells", enum_n, "cell count")->required();
    enumerate->add_option("--v-min", enum_vlo, "lowest normalized voltage");
    enumerate->add_option("--v-max", enum_vhi, "highest normalized voltage (0 = cell count)");
    enumerate->add_option("--design", enum_design, "design name (a, d, or from file)");
    enumerate->add_option("--design-file", enum_design_file, "design mask JSON file");
    enumerate->add_option("--out", enum_out, "output path")->required();

    auto* validate = app.add_subcommand("validate", "cross-check the enumerator against direct generation");
    int val_n = 0, val_vlo = 1, val_vhi = 0;
    validate->add_option("--cells", val_n, "cell count (<= 8)")->required();
    validate->add_option("--v-min", val_vlo);
    validate->add_option("--v-max", val_vhi);

    auto* simulate = app.add_subcommand("simulate", "run a scenario file");
    std::string sim_config, sim_space, sim_out;
    simulate->add_option("--config", sim_config, "scenario JSON")->required();
    simulate->add_option("--space", sim_space, "feasible-space JSON for config_index schedules");
    simulate->add_option("--out", sim_out, "trace CSV path")->required();

    auto* replay = app.add_subcommand("replay", "run the bundled 12-configuration discharge");
    std::string rep_cell, rep_out;
    replay->add_option("--cell-file", rep_cell, "override the cell model file");
    replay->add_option("--out", rep_out, "trace CSV path")->required();

    auto* optimize = app.add_subcommand("optimize", "solve a balancing problem with the GA");
    std::string opt_config, opt_space, opt_out, opt_trace_dir;
    bool opt_complete = false;
    optimize->add_option("--config", opt_config, "problem JSON")->required();
    optimize->add_option("--space", opt_space, "precomputed feasible-space JSON");
    optimize->add_flag("--complete-space", opt_complete,
                       "search the raw 2^(5n-3) space instead (control experiment)");
    optimize->add_option("--out", opt_out, "result JSON path")->required();
    optimize->add_option("--trace-dir", opt_trace_dir, "write per-step trace CSVs here");

    auto* dump = app.add_subcommand("dump-model", "inspect tables, cells, or a realization");
    bool dump_table2 = false;
    std::string dump_cell, dump_ssv, dump_out;
    double dump_soc = 0.5;
    int dump_cells_n = 1;
    dump->add_flag("--table2", dump_table2, "print the cell connection-pattern table");
    dump->add_option("--cell", dump_cell, "cell model JSON");
    dump->add_option("--soc", dump_soc, "query SoC");
    dump->add_option("--cells", dump_cells_n, "cell count for --ssv");
    dump->add_option("--ssv", dump_ssv, "bit string; dumps the realization matrices");
    dump->add_option("--out", dump_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*count) {
            int lo = count_n_from > 0 ? count_n_from : count_n;
            return cmd_count(lo, count_n, count_format, count_out);
        }
        if (*enumerate)
            return cmd_enumerate(enum_n, enum_vlo, enum_vhi, enum_design, enum_design_file, enum_out);
        if (*validate) return cmd_validate(val_n, val_vlo, val_vhi <= 0 ? val_n : val_vhi);
        if (*simulate) return cmd_simulate(sim_config, sim_space, sim_out);
        if (*replay) return cmd_replay(rep_cell, rep_out);
        if (*optimize)
            return cmd_optimize(opt_config, opt_complete, opt_space, opt_out, opt_trace_dir, threads);
        if (*dump) return cmd_dump_model(dump_table2, dump_cell, dump_soc, dump_cells_n, dump_ssv, dump_out);
    } catch (const rbs::Error& e) {
        std::cerr << rbs::io::error_json(e) << "\n";
        return e.code() == rbs::ErrorCode::usage ? 2 : 1;
    } catch (const std::exception& e) {
        rbs::Error wrapped(rbs::ErrorCode::domain, e.what());
        std::cerr << rbs::io::error_json(wrapped) << "\n";
        return 1;
    }
    return 2;
}
