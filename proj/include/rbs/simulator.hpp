#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbs/cell_model.hpp"
#include "rbs/errors.hpp"
#include "rbs/network.hpp"
#include "rbs/topology.hpp"

namespace rbs {

struct LoadPoint {
    enum class Kind { constant_power, constant_current } kind = Kind::constant_power;
    double value = 0.0;
};

// Piecewise load; a segment with duration <= 0 extends to the end of the run.
struct LoadProfile {
    struct Segment {
        double duration_s = 0.0;
        LoadPoint point;
    };
    std::vector<Segment> segments;

    static LoadProfile constant_power(double watts) {
        return {{{0.0, {LoadPoint::Kind::constant_power, watts}}}};
    }
    static LoadProfile constant_current(double amps) {
        return {{{0.0, {LoadPoint::Kind::constant_current, amps}}}};
    }

    LoadPoint at(double t) const {
        if (segments.empty())
            throw Error(ErrorCode::domain, "empty load profile");
        double start = 0.0;
        for (const auto& seg : segments) {
            if (seg.duration_s <= 0.0 || t < start + seg.duration_s) return seg.point;
            start += seg.duration_s;
        }
        return segments.back().point;
    }
};

struct ScheduleEntry {
    double duration_s = 0.0;
    Ssv ssv;
};

struct Scenario {
    std::vector<CellModel> cells;
    DesignMask mask;
    SwitchParams switches;
    double dt_s = 0.1;
    DiscretizeMethod method = DiscretizeMethod::euler;
    std::vector<double> initial_soc;
    std::vector<ScheduleEntry> schedule;
    LoadProfile load;
};

// Per-sample warning flags.
constexpr std::uint32_t kFlagSocClampedLow = 1u << 0;
constexpr std::uint32_t kFlagSocClampedHigh = 1u << 1;

struct SimError {
    ErrorCode code = ErrorCode::domain;
    std::string message;
    int sample_index = -1;
};

struct SimTrace {
    double dt_s = 0.0;
    std::vector<double> t;
    std::vector<Vec> X;
    std::vector<Vec> i_b, v_b;
    std::vector<Vec> soc;
    std::vector<double> v_t, i_t;
    std::vector<std::uint32_t> flags;
    std::optional<SimError> error;

    std::size_t size() const { return t.size(); }
};

struct SimState {
    Vec X;   // [V; I_R1; I_R2]
    Vec soc; // coulomb-counted
};

inline SimState initial_state(const std::vector<CellModel>& cells, const std::vector<double>& soc0) {
    const int n = static_cast<int>(cells.size());
    if (static_cast<int>(soc0.size()) != n)
        throw Error(ErrorCode::domain, "initial soc count does not match cell count");
    SimState st;
    st.X = Vec::Zero(3 * n);
    st.soc = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        double z = soc0[static_cast<std::size_t>(i)];
        if (!(z >= 0.0 && z <= 1.0))
            throw Error(ErrorCode::domain, "initial soc outside [0,1]");
        st.soc(i) = z;
        st.X(i) = ocv(cells[static_cast<std::size_t>(i)], z);
    }
    return st;
}

// Resolve every cell's parameter set at its current SoC, clamping out-of-range
// values and reporting the clamp through flags instead of aborting.
inline std::vector<CellParams> refresh_params(const std::vector<CellModel>& cells, const Vec& soc,
                                              std::uint32_t& flags) {
    std::vector<CellParams> out;
    out.reserve(cells.size());
    for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        double z = soc(i);
        if (z < 0.0) {
            z = 0.0;
            flags |= kFlagSocClampedLow;
        } else if (z > 1.0) {
            z = 1.0;
            flags |= kFlagSocClampedHigh;
        }
        out.push_back(params_at(cells[static_cast<std::size_t>(i)], z));
    }
    return out;
}

struct StepOutputs {
    double v_t = 0, i_t = 0;
    Vec i_b, v_b;
    std::uint32_t flags = 0;
};

// One sampling interval: rebuild parameters at the current SoCs, assemble the
// realization for the active configuration, resolve the terminal current from
// the load, then advance state and coulomb counters.
inline StepOutputs step(SimState& st, const SwitchFactors& factors,
                        const std::vector<CellModel>& cells, const LoadPoint& load, double dt,
                        DiscretizeMethod method, bool check_condition = true) {
    StepOutputs out;
    auto params = refresh_params(cells, st.soc, out.flags);

    if (method == DiscretizeMethod::euler) {
        QuickEval q = quick_eval(factors, params, st.X, check_condition);
        out.i_t = load.kind == LoadPoint::Kind::constant_current ? load.value
                                                                 : current_from_power(q, load.value);
        out.v_t = q.vt0 + q.dvt * out.i_t;
        out.i_b = q.ib0 + q.dib * out.i_t;
        out.v_b = q.vb0 + q.dvb * out.i_t;
        st.X += dt * (q.dX0 + q.dXi * out.i_t);
    } else {
        StateSpaceRealization ss = assemble(factors, params);
        out.i_t = load.kind == LoadPoint::Kind::constant_current
                      ? load.value
                      : current_from_power(ss, st.X, load.value);
        out.v_t = terminal_voltage(ss, st.X, out.i_t);
        out.i_b = cell_currents(ss, st.X, out.i_t);
        out.v_b = cell_voltages(ss, st.X, out.i_t);
        auto [Ad, Bd] = discretize(ss.A, ss.B, dt, method);
        st.X = Ad * st.X + Bd * out.i_t;
    }

    for (int i = 0; i < static_cast<int>(cells.size()); ++i)
        st.soc(i) -= dt * out.i_b(i) / params[static_cast<std::size_t>(i)].capacity_As;
    return out;
}

inline SimTrace run(const Scenario& sc) {
    SimTrace trace;
    trace.dt_s = sc.dt_s;
    if (!(sc.dt_s > 0.0)) throw Error(ErrorCode::domain, "dt must be positive");

    for (const auto& e : sc.schedule) {
        if (!(e.duration_s > 0.0))
            throw Error(ErrorCode::domain, "schedule durations must be positive");
        double steps = e.duration_s / sc.dt_s;
        if (std::abs(steps - std::round(steps)) > 1e-9)
            throw Error(ErrorCode::domain, "schedule durations must be integer multiples of dt");
        if (!mask_filter(e.ssv, sc.mask))
            throw Error(ErrorCode::mapping, "scheduled ssv uses switches absent from the design");
    }

    SimState st = initial_state(sc.cells, sc.initial_soc);

    double t = 0.0;
    int sample = 0;
    for (const auto& entry : sc.schedule) {
        SwitchFactors factors;
        try {
            factors = make_switch_factors(entry.ssv, sc.switches);
        } catch (const Error& err) {
            trace.error = SimError{err.code(), err.what(), sample};
            return trace;
        }
        const int steps = static_cast<int>(std::round(entry.duration_s / sc.dt_s));
        for (int k = 0; k < steps; ++k) {
            try {
                Vec soc_before = st.soc;
                Vec X_before = st.X;
                StepOutputs out =
                    step(st, factors, sc.cells, sc.load.at(t), sc.dt_s, sc.method, k == 0);
                trace.t.push_back(t);
                trace.X.push_back(std::move(X_before));
                trace.soc.push_back(std::move(soc_before));
                trace.i_b.push_back(std::move(out.i_b));
                trace.v_b.push_back(std::move(out.v_b));
                trace.v_t.push_back(out.v_t);
                trace.i_t.push_back(out.i_t);
                trace.flags.push_back(out.flags);
            } catch (const Error& err) {
                trace.error = SimError{err.code(), err.what(), sample};
                return trace;
            }
            t += sc.dt_s;
            ++sample;
        }
    }
    return trace;
}

} // namespace rbs
