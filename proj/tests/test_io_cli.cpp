#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbs/io.hpp"

using namespace rbs;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(RBS_FIXTURE_DIR) + "/" + name; }

struct CmdResult {
    int status = -1;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    fs::path out_file = fs::temp_directory_path() / "rbs_cli_out.txt";
    std::string cmd = std::string(RBS_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.status = WEXITSTATUS(rc);
    std::ifstream in(out_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir() {
    fs::path d = fs::temp_directory_path() / "rbs_tests";
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("scenario files load with relative cell references") {
    auto loaded = io::load_scenario(fixture("replay_3cell.json"));
    CHECK(loaded.scenario.cells.size() == 3);
    CHECK(loaded.scenario.schedule.size() == 12);
    CHECK(loaded.scenario.dt_s == Approx(0.1));
    CHECK(loaded.design_name == "d");
    for (const auto& e : loaded.scenario.schedule)
        CHECK(mask_filter(e.ssv, loaded.scenario.mask));
}

TEST_CASE("problem files load") {
    auto loaded = io::load_problem(fixture("case_study.json"));
    CHECK(loaded.problem.cells.size() == 10);
    CHECK(loaded.problem.decision_steps == 20);
    CHECK(loaded.problem.v_norm_min == 4);
    CHECK(loaded.ga.population == 100);
    CHECK(loaded.ga.generations == 220);
    CHECK(loaded.ga.crossover_prob == Approx(0.8));
    CHECK(loaded.ga.mutation_prob == Approx(0.1));
}

TEST_CASE("space round-trips through json") {
    FeasibleSpace s = build_space(3, 1, 3, DesignMask::all_ones(3));
    io::json j = io::space_to_json(s, "a");
    fs::path p = temp_dir() / "space3.json";
    io::atomic_write(p, j.dump(2));
    FeasibleSpace r = io::space_from_json(p);
    CHECK(r.n_cells == 3);
    REQUIRE(r.buckets.size() == s.buckets.size());
    for (std::size_t i = 0; i < r.buckets.size(); ++i) {
        REQUIRE(r.buckets[i].ssvs.size() == s.buckets[i].ssvs.size());
        for (std::size_t k = 0; k < r.buckets[i].ssvs.size(); ++k)
            CHECK(r.buckets[i].ssvs[k] == s.buckets[i].ssvs[k]);
    }
}

TEST_CASE("atomic write refuses missing directories and leaves no partials") {
    fs::path missing = temp_dir() / "no_such_dir" / "out.txt";
    CHECK_THROWS_AS(io::atomic_write(missing, "x"), Error);
    CHECK_FALSE(fs::exists(missing));
    CHECK_FALSE(fs::exists(temp_dir() / "no_such_dir"));
}

TEST_CASE("cli: count prints the ten-cell totals") {
    auto r = run_cli("count --cells 10");
    CHECK(r.status == 0);
    CHECK(r.out.find("22978") != std::string::npos);
    CHECK(r.out.find("1.633e-10") != std::string::npos);
}

TEST_CASE("cli: validate agrees for six cells") {
    auto r = run_cli("validate --cells 6");
    CHECK(r.status == 0);
    CHECK(r.out.find("MATCH") != std::string::npos);
}

TEST_CASE("cli: missing scenario file exits 1 with a json error naming the path") {
    auto r = run_cli("simulate --config /nonexistent/missing.json --out " +
                     (temp_dir() / "t.csv").string());
    CHECK(r.status == 1);
    CHECK(r.out.find("\"error\"") != std::string::npos);
    CHECK(r.out.find("missing.json") != std::string::npos);
}

TEST_CASE("cli: unknown flags exit 2") {
    auto r = run_cli("count --cells 4 --definitely-not-a-flag");
    CHECK(r.status == 2);
}

TEST_CASE("cli: enumerate output is byte-identical across reruns") {
    fs::path a = temp_dir() / "space_a.json";
    fs::path b = temp_dir() / "space_b.json";
    auto r1 = run_cli("enumerate --cells 4 --out " + a.string());
    auto r2 = run_cli("enumerate --cells 4 --out " + b.string());
    REQUIRE(r1.status == 0);
    REQUIRE(r2.status == 0);
    CHECK(slurp(a) == slurp(b));
    io::json j = io::json::parse(slurp(a));
    CHECK(j["total"].get<int>() == 41);
}

TEST_CASE("cli: simulate writes a plot-ready trace") {
    fs::path out = temp_dir() / "replay.csv";
    auto r = run_cli("simulate --config " + fixture("replay_3cell.json") + " --out " + out.string());
    REQUIRE(r.status == 0);
    std::string csv = slurp(out);
    CHECK(csv.rfind("t,v_t,i_t,i_b_1,i_b_2,i_b_3,v_b_1,v_b_2,v_b_3,soc_1,soc_2,soc_3,flags", 0) == 0);
    // 12 x 20 s at 0.1 s -> 2400 samples + header
    std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 2401);

    fs::path out2 = temp_dir() / "replay2.csv";
    auto r2 = run_cli("simulate --config " + fixture("replay_3cell.json") + " --out " + out2.string());
    REQUIRE(r2.status == 0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("cli: dump-model prints the pattern table and resolved parameters") {
    auto t = run_cli("dump-model --table2");
    CHECK(t.status == 0);
    CHECK(t.out.find("0,1,0,0,1") != std::string::npos);

    auto c = run_cli("dump-model --cell " + fixture("cell_linear.json") + " --soc 0.5");
    CHECK(c.status == 0);
    CHECK(c.out.find("\"ocv\": 3.4") != std::string::npos);

    auto m = run_cli("dump-model --cell " + fixture("cell_linear.json") +
                     " --cells 2 --ssv 0100110 --soc 0.5");
    CHECK(m.status == 0);
    CHECK(m.out.find("C_IB") != std::string::npos);
    CHECK(m.out.find("D_vt") != std::string::npos);
}

TEST_CASE("cli: simulate resolves config_index entries against a space") {
    fs::path dir = temp_dir();
    fs::path space = dir / "space2.json";
    REQUIRE(run_cli("enumerate --cells 2 --out " + space.string()).status == 0);

    io::json scen;
    scen["schema"] = 1;
    // absolute refs keep the scenario independent of the tmp layout
    scen["cells"] = io::json::array({std::string(RBS_FIXTURE_DIR) + "/cell_linear.json",
                                     std::string(RBS_FIXTURE_DIR) + "/cell_linear.json"});
    scen["design"] = "a";
    scen["dt_s"] = 0.1;
    scen["initial_soc"] = {0.7, 0.7};
    scen["load"] = {{"kind", "constant_power"}, {"value", 2.0}};
    scen["schedule"] = io::json::array({io::json{{"duration_s", 1.0}, {"config_index", 3}}});
    fs::path sfile = dir / "scen_by_index.json";
    io::atomic_write(sfile, scen.dump(2));

    fs::path out = dir / "by_index.csv";
    auto r = run_cli("simulate --config " + sfile.string() + " --space " + space.string() +
                     " --out " + out.string());
    CHECK(r.status == 0);
    CHECK(slurp(out).find("t,v_t,i_t") == 0);
}
