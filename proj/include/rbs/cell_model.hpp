#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rbs/errors.hpp"

namespace rbs {

// Piecewise-linear lookup over an ascending SoC grid. Slopes are exact and
// the curve is invertible when values are strictly increasing, which is why
// linear interpolation is used for every cell table.
struct PiecewiseLinear {
    std::vector<double> x; // ascending breakpoints
    std::vector<double> y;

    void validate(const std::string& name) const {
        if (x.size() != y.size() || x.size() < 2)
            throw Error(ErrorCode::domain, "table '" + name + "' needs >= 2 matching points", name);
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw Error(ErrorCode::domain, "table '" + name + "' breakpoints not strictly increasing", name);
    }

    // Index of the segment [x[k], x[k+1]] containing z; ties resolve to the
    // right segment (left segment at the final breakpoint).
    std::size_t segment(double z) const {
        auto it = std::upper_bound(x.begin(), x.end(), z);
        std::size_t k = static_cast<std::size_t>(it - x.begin());
        if (k == 0) return 0;
        if (k >= x.size()) return x.size() - 2;
        return k - 1;
    }

    double value_at(double z) const {
        std::size_t k = segment(z);
        double t = (z - x[k]) / (x[k + 1] - x[k]);
        return y[k] + t * (y[k + 1] - y[k]);
    }

    double slope_at(double z) const {
        std::size_t k = segment(z);
        return (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    }
};

// OCV-SoC curve; strictly increasing in both coordinates so that the inverse
// map is single valued.
struct OcvCurve {
    PiecewiseLinear table;

    void validate() const {
        table.validate("ocv");
        for (std::size_t i = 1; i < table.y.size(); ++i)
            if (!(table.y[i] > table.y[i - 1]))
                throw Error(ErrorCode::domain, "ocv values not strictly increasing", "ocv");
        if (table.x.front() < 0.0 || table.x.back() > 1.0)
            throw Error(ErrorCode::domain, "ocv soc grid must lie in [0,1]", "ocv");
    }

    double v_min() const { return table.y.front(); }
    double v_max() const { return table.y.back(); }
};

// Second-order equivalent-circuit cell: OCV source, series resistance r0 and
// two RC pairs, all SoC dependent, plus the charge capacity.
struct CellModel {
    double capacity_As = 0.0;
    OcvCurve ocv;
    PiecewiseLinear r0, r1, c1, r2, c2;
    std::string name;

    void validate() const {
        if (!(capacity_As > 0.0))
            throw Error(ErrorCode::domain, "capacity_As must be positive");
        ocv.validate();
        r0.validate("r0");
        r1.validate("r1");
        c1.validate("c1");
        r2.validate("r2");
        c2.validate("c2");
        auto nonneg = [](const PiecewiseLinear& t, const char* n) {
            for (double v : t.y)
                if (v < 0.0) throw Error(ErrorCode::domain, std::string("negative resistance in ") + n, n);
        };
        nonneg(r0, "r0");
        auto positive = [](const PiecewiseLinear& t, const char* n) {
            for (double v : t.y)
                if (!(v > 0.0)) throw Error(ErrorCode::domain, std::string("non-positive entries in ") + n, n);
        };
        // r1,r2 and c1,c2 strictly positive keeps both time constants positive
        // at every SoC.
        positive(r1, "r1");
        positive(r2, "r2");
        positive(c1, "c1");
        positive(c2, "c2");
    }
};

// Scalar parameter set resolved at one SoC.
struct CellParams {
    double r0 = 0, r1 = 0, c1 = 0, r2 = 0, c2 = 0;
    double kv = 0;          // dOCV/dSoC at the query point
    double capacity_As = 0;
    double ocv = 0;

    double tau1() const { return r1 * c1; }
    double tau2() const { return r2 * c2; }
};

namespace detail {
inline void check_soc(double z) {
    if (!(z >= 0.0 && z <= 1.0))
        throw Error(ErrorCode::domain, "soc " + std::to_string(z) + " outside [0,1]", std::to_string(z));
}
} // namespace detail

inline double ocv(const CellModel& m, double z) {
    detail::check_soc(z);
    return m.ocv.table.value_at(z);
}

// Slope of the piecewise-linear OCV curve. At interior breakpoints this is
// the right-segment slope; at z = 1 the left-segment slope.
inline double ocv_slope(const CellModel& m, double z) {
    detail::check_soc(z);
    return m.ocv.table.slope_at(z);
}

inline double soc_from_ocv(const CellModel& m, double v) {
    const auto& t = m.ocv.table;
    if (!(v >= t.y.front() && v <= t.y.back()))
        throw Error(ErrorCode::domain, "voltage " + std::to_string(v) + " outside ocv range", std::to_string(v));
    auto it = std::upper_bound(t.y.begin(), t.y.end(), v);
    std::size_t k = static_cast<std::size_t>(it - t.y.begin());
    if (k == 0) return t.x.front();
    if (k >= t.y.size()) return t.x.back();
    --k;
    double u = (v - t.y[k]) / (t.y[k + 1] - t.y[k]);
    return t.x[k] + u * (t.x[k + 1] - t.x[k]);
}

inline CellParams params_at(const CellModel& m, double z) {
    detail::check_soc(z);
    CellParams p;
    p.r0 = m.r0.value_at(z);
    p.r1 = m.r1.value_at(z);
    p.c1 = m.c1.value_at(z);
    p.r2 = m.r2.value_at(z);
    p.c2 = m.c2.value_at(z);
    p.kv = ocv_slope(m, z);
    p.capacity_As = m.capacity_As;
    p.ocv = ocv(m, z);
    return p;
}

// Convenience builder for tests and synthetic fixtures: constant tables over
// [0,1] with a linear OCV v = v0 + k z.
inline CellModel make_linear_cell(double v0, double k, double r0, double r1, double c1,
                                  double r2, double c2, double capacity_As) {
    CellModel m;
    m.capacity_As = capacity_As;
    m.ocv.table = {{0.0, 1.0}, {v0, v0 + k}};
    m.r0 = {{0.0, 1.0}, {r0, r0}};
    m.r1 = {{0.0, 1.0}, {r1, r1}};
    m.c1 = {{0.0, 1.0}, {c1, c1}};
    m.r2 = {{0.0, 1.0}, {r2, r2}};
    m.c2 = {{0.0, 1.0}, {c2, c2}};
    m.name = "linear";
    m.validate();
    return m;
}

} // namespace rbs
