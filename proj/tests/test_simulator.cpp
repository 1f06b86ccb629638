#include <catch2/catch.hpp>

#include <cmath>

#include "rbs/io.hpp"
#include "rbs/simulator.hpp"
#include "support/oracles.hpp"

using namespace rbs;

namespace {

CellModel lin() { return make_linear_cell(3.0, 0.8, 0.010, 0.015, 2000, 0.025, 12000, 3600); }

Ssv series_ssv(int n) {
    std::vector<int> cells;
    for (int i = 1; i <= n; ++i) cells.push_back(i);
    return ssv_from_config({PackConfig::Kind::series_pack, n, {{false, cells}}});
}

Ssv parallel_ssv(int n) {
    PackConfig cfg;
    cfg.kind = PackConfig::Kind::parallel_pack;
    cfg.n_cells = n;
    for (int i = 1; i <= n; ++i) cfg.modules.push_back({false, {i}});
    return ssv_from_config(cfg);
}

Ssv solo_ssv(int n, int cell) {
    Ssv s = Ssv::zeros(n);
    s.set(cell, 3, 1);
    s.set(cell, 5, 1);
    return s;
}

} // namespace

TEST_CASE("zero load holds the state") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m, m};
    sc.mask = DesignMask::all_ones(2);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.6, 0.6};
    sc.schedule = {{5.0, parallel_ssv(2)}};
    sc.load = LoadProfile::constant_power(0.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    REQUIRE(tr.size() == 50);
    CHECK(tr.soc.back()(0) == Approx(0.6).margin(1e-6));
    CHECK(tr.X.back()(0) == Approx(tr.X.front()(0)).margin(1e-6));
    CHECK(tr.i_b.back().cwiseAbs().maxCoeff() < 1e-5); // megaohm leakage only
}

TEST_CASE("single cell coulomb counting at constant current") {
    CellModel m = lin(); // 3600 As
    Scenario sc;
    sc.cells = {m};
    sc.mask = DesignMask::all_ones(1);
    sc.dt_s = 1.0;
    sc.initial_soc = {0.5};
    sc.schedule = {{10.0, solo_ssv(1, 1)}};
    sc.load = LoadProfile::constant_current(1.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    REQUIRE(tr.size() == 10);
    // each 1 s step at 1 A moves SoC by 1/3600
    CHECK(tr.soc[1](0) == Approx(0.5 - 1.0 / 3600.0).margin(1e-12));
    CHECK(tr.soc[9](0) == Approx(0.5 - 9.0 / 3600.0).margin(1e-10));
}

TEST_CASE("parallel relaxation of unequal cells matches an independent integration") {
    // Two identical cells at different SoCs connected in parallel at zero
    // load. The loop dynamics reduce to three states: the OCV gap dv and the
    // summed RC resistor currents u1, u2 (per pair), driven by the loop
    // current i = (dv - r1 u1 - r2 u2) / R_loop.
    CellModel m = lin();
    const double k = 0.8, Q = 3600, r0 = 0.010, r1 = 0.015, c1 = 2000, r2 = 0.025, c2 = 12000;
    const double r_tap = 0.008;
    const double R_loop = 2 * r0 + 4 * r_tap; // both cells + two taps each

    auto f = [&](double, const std::vector<double>& y) {
        double dv = y[0], u1 = y[1], u2 = y[2];
        double i = (dv - r1 * u1 - r2 * u2) / R_loop;
        return std::vector<double>{-2.0 * k / Q * i, (2 * i - u1) / (r1 * c1),
                                   (2 * i - u2) / (r2 * c2)};
    };
    auto y = test::rk4(f, {0.8 * 0.2, 0.0, 0.0}, 0.0, 30.0, 300000);

    Scenario sc;
    sc.cells = {m, m};
    sc.mask = DesignMask::all_ones(2);
    sc.switches.r_ds_off = 1e8; // keep leakage far below the checked tolerance
    sc.dt_s = 0.001;
    sc.initial_soc = {0.7, 0.5};
    sc.schedule = {{30.0, parallel_ssv(2)}};
    sc.load = LoadProfile::constant_current(0.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());

    double dv_sim = tr.X.back()(0) - tr.X.back()(1);
    CHECK(dv_sim == Approx(y[0]).epsilon(2e-3));

    // the higher cell discharges, the lower charges, charge is conserved
    CHECK(tr.soc.back()(0) < 0.7);
    CHECK(tr.soc.back()(1) > 0.5);
    double q0 = 0.7 + 0.5;
    double q1 = tr.soc.back()(0) + tr.soc.back()(1);
    CHECK(q1 == Approx(q0).epsilon(1e-9));
}

TEST_CASE("constant-power discharge sags monotonically between switches") {
    CellModel m = io::load_cell(std::string(RBS_FIXTURE_DIR) + "/cell_18650.json");
    Scenario sc;
    sc.cells = {m, m};
    sc.mask = DesignMask::all_ones(2);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.8, 0.8};
    sc.schedule = {{30.0, series_ssv(2)}};
    sc.load = LoadProfile::constant_power(6.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.v_t[i] <= tr.v_t[i - 1] + 1e-12);
}

TEST_CASE("power is tracked exactly at every sample") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m, m, m};
    sc.mask = DesignMask::all_ones(3);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.9, 0.8, 0.7};
    sc.schedule = {{10.0, series_ssv(3)}, {10.0, parallel_ssv(3)}};
    sc.load = LoadProfile::constant_power(4.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    for (std::size_t i = 0; i < tr.size(); ++i)
        CHECK(std::abs(tr.v_t[i] * tr.i_t[i] - 4.0) <= 1e-9 * 4.0);
}

TEST_CASE("state carries across reconfigurations, outputs may jump") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m, m};
    sc.mask = DesignMask::all_ones(2);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.8, 0.8};
    sc.schedule = {{5.0, series_ssv(2)}, {5.0, parallel_ssv(2)}};
    sc.load = LoadProfile::constant_power(3.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    const std::size_t b = 50; // first sample of the second entry
    // the state carries across the boundary: the step there is the same size
    // as ordinary within-interval evolution, while the outputs jump
    double step_scale = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k)
        if (k != b)
            step_scale = std::max(step_scale, (tr.X[k] - tr.X[k - 1]).cwiseAbs().maxCoeff());
    double boundary_step = (tr.X[b] - tr.X[b - 1]).cwiseAbs().maxCoeff();
    CHECK(boundary_step <= 2.0 * step_scale);
    CHECK(std::abs(tr.v_t[b] - tr.v_t[b - 1]) > 0.1);
}

TEST_CASE("bypassed cells stay where they are") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m, m, m};
    sc.mask = DesignMask::all_ones(3);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.8, 0.8, 0.8};
    // series over cells 1,2 with cell 3 bypassed
    sc.schedule.push_back(
        {20.0, ssv_from_config({PackConfig::Kind::series_pack, 3, {{false, {1, 2}}}})});
    sc.load = LoadProfile::constant_power(3.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    CHECK(std::abs(tr.soc.back()(2) - 0.8) < 1e-6);
    CHECK(tr.soc.back()(0) < 0.8 - 1e-3);
}

TEST_CASE("empty schedule gives an empty trace") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m};
    sc.mask = DesignMask::all_ones(1);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.5};
    sc.load = LoadProfile::constant_power(1.0);
    SimTrace tr = run(sc);
    CHECK(tr.size() == 0);
    CHECK_FALSE(tr.error.has_value());
}

TEST_CASE("schedule validation") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m};
    sc.mask = DesignMask::all_ones(1);
    sc.dt_s = 0.3;
    sc.initial_soc = {0.5};
    sc.schedule = {{1.0, solo_ssv(1, 1)}}; // not a multiple of 0.3
    sc.load = LoadProfile::constant_power(1.0);
    CHECK_THROWS_AS(run(sc), Error);

    sc.dt_s = 0.1;
    sc.mask = design_mask_builtin("d", 1);
    Ssv needs_s5 = solo_ssv(1, 1); // uses S5_1 which design d removes at n=1
    sc.schedule = {{1.0, needs_s5}};
    CHECK_THROWS_AS(run(sc), Error);
}

TEST_CASE("power demand beyond the deliverable maximum aborts with a record") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m};
    sc.mask = DesignMask::all_ones(1);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.5};
    sc.schedule = {{5.0, solo_ssv(1, 1)}};
    sc.load = LoadProfile::constant_power(500.0); // far beyond a single cell
    SimTrace tr = run(sc);
    REQUIRE(tr.error.has_value());
    CHECK(tr.error->code == ErrorCode::power_infeasible);
    CHECK(tr.error->sample_index == 0);
    CHECK(tr.size() == 0); // partial trace retained (nothing completed)
}

TEST_CASE("stored energy never increases while discharging") {
    CellModel m = io::load_cell(std::string(RBS_FIXTURE_DIR) + "/cell_18650.json");
    Scenario sc;
    sc.cells = {m, m, m};
    sc.mask = DesignMask::all_ones(3);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.85, 0.8, 0.75};
    sc.schedule = {{10.0, series_ssv(3)},
                   {10.0, ssv_from_config({PackConfig::Kind::series_pack, 3, {{false, {1, 2}}}})},
                   {10.0, parallel_ssv(3)}};
    sc.load = LoadProfile::constant_power(5.0);
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    // discrete stored-energy estimate: sum_n v_n * dq_n accumulated per step
    double prev = 0.0;
    bool first = true;
    double acc = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (!first) {
            // energy change from sample k-1 to k
            for (int i = 0; i < 3; ++i) {
                double dq = (tr.soc[k](i) - tr.soc[k - 1](i)) * m.capacity_As;
                acc += tr.X[k - 1](i) * dq;
            }
            CHECK(acc <= prev + 1e-9);
            prev = acc;
        }
        first = false;
    }
}

TEST_CASE("euler converges to the exact hold discretization at first order") {
    CellModel m = lin();
    Ssv ssv = series_ssv(2);
    auto factors = make_switch_factors(ssv, SwitchParams{});
    std::vector<double> socs = {0.8, 0.6};

    auto run_to_1s = [&](double dt, DiscretizeMethod method) {
        SimState st = initial_state({m, m}, socs);
        int steps = static_cast<int>(std::round(1.0 / dt));
        for (int k = 0; k < steps; ++k)
            step(st, factors, {m, m}, {LoadPoint::Kind::constant_current, 2.0}, dt, method);
        return st.X;
    };

    std::vector<double> errs;
    for (double dt : {0.05, 0.025, 0.0125}) {
        Vec e = run_to_1s(dt, DiscretizeMethod::euler);
        Vec z = run_to_1s(dt, DiscretizeMethod::zoh);
        errs.push_back((e - z).cwiseAbs().maxCoeff());
    }
    double order1 = std::log2(errs[0] / errs[1]);
    double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order1 == Approx(1.0).margin(0.2));
    CHECK(order2 == Approx(1.0).margin(0.2));
}

TEST_CASE("piecewise load profiles switch kind mid-run") {
    CellModel m = lin();
    Scenario sc;
    sc.cells = {m, m};
    sc.mask = DesignMask::all_ones(2);
    sc.dt_s = 0.1;
    sc.initial_soc = {0.8, 0.8};
    sc.schedule = {{4.0, series_ssv(2)}};
    sc.load.segments = {{2.0, {LoadPoint::Kind::constant_current, 1.5}},
                        {0.0, {LoadPoint::Kind::constant_power, 3.0}}};
    SimTrace tr = run(sc);
    REQUIRE_FALSE(tr.error.has_value());
    REQUIRE(tr.size() == 40);
    CHECK(tr.i_t[0] == Approx(1.5));
    CHECK(tr.i_t[19] == Approx(1.5));
    CHECK(tr.v_t[25] * tr.i_t[25] == Approx(3.0).margin(1e-9));
}
