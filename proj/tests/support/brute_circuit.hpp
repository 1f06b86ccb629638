#pragma once

// Direct solve of the unreduced circuit equations, written straight from the
// electrode/terminal current balances and the four meshes per adjacent cell
// pair, with every branch current kept as an unknown. Used as an independent
// oracle for the elimination-based realization; shares no code with it.

#include <Eigen/Dense>

#include "rbs/cell_model.hpp"
#include "rbs/network.hpp"
#include "rbs/topology.hpp"

namespace rbs::test {

struct BruteSolution {
    Eigen::VectorXd i_b, i_s1, i_s2, i_s3, i_s4, i_s5;
    double v_t = 0;
};

// Unknown layout: [i_b (n), i_s1 (n-1), i_s2 (n-1), i_s3 (n), i_s4 (n-1), i_s5 (n)]
inline BruteSolution brute_solve(const std::vector<CellParams>& cells, const Ssv& ssv,
                                 const SwitchParams& sw, const Eigen::VectorXd& X, double i_t) {
    const int n = ssv.n_cells;
    const int nu = 6 * n - 3;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nu);

    auto IB = [&](int k) { return k; };             // k in 0..n-1
    auto IS1 = [&](int k) { return n + k; };        // k in 0..n-2
    auto IS2 = [&](int k) { return 2 * n - 1 + k; };
    auto IS3 = [&](int k) { return 3 * n - 2 + k; };
    auto IS4 = [&](int k) { return 4 * n - 2 + k; };
    auto IS5 = [&](int k) { return 5 * n - 3 + k; };

    SwitchResistances R = switch_resistances(ssv, sw);

    int row = 0;
    // positive-electrode balance of every cell
    for (int k = 0; k < n; ++k, ++row) {
        A(row, IB(k)) -= 1;
        if (k < n - 1) A(row, IS1(k)) -= 1;
        A(row, IS5(k)) += 1;
        if (k > 0) {
            A(row, IS1(k - 1)) += 1;
            A(row, IS2(k - 1)) += 1;
        }
    }
    // negative-electrode balance of cells 1..n-1 (the last is dependent)
    for (int k = 0; k < n - 1; ++k, ++row) {
        A(row, IB(k)) += 1;
        A(row, IS2(k)) -= 1;
        A(row, IS3(k)) -= 1;
        A(row, IS4(k)) -= 1;
        if (k > 0) A(row, IS4(k - 1)) += 1;
    }
    // terminal balances
    for (int k = 0; k < n; ++k) A(row, IS5(k)) = 1;
    b(row) = i_t;
    ++row;
    for (int k = 0; k < n; ++k) A(row, IS3(k)) = 1;
    b(row) = i_t;
    ++row;
    // meshes
    for (int j = 0; j < n - 1; ++j) {
        A(row, IS5(j)) += R.s5(j);
        A(row, IS5(j + 1)) -= R.s5(j + 1);
        A(row, IS1(j)) += R.s1(j);
        ++row;

        const auto& p = cells[static_cast<std::size_t>(j)];
        A(row, IB(j)) += p.r0;
        A(row, IS1(j)) -= R.s1(j);
        A(row, IS2(j)) += R.s2(j);
        b(row) = X(j) - p.r1 * X(n + j) - p.r2 * X(2 * n + j);
        ++row;

        const auto& pn = cells[static_cast<std::size_t>(j + 1)];
        A(row, IB(j + 1)) += pn.r0;
        A(row, IS2(j)) += R.s2(j);
        A(row, IS4(j)) -= R.s4(j);
        b(row) = X(j + 1) - pn.r1 * X(n + j + 1) - pn.r2 * X(2 * n + j + 1);
        ++row;

        A(row, IS3(j)) += R.s3(j);
        A(row, IS3(j + 1)) -= R.s3(j + 1);
        A(row, IS4(j)) -= R.s4(j);
        ++row;
    }

    // the raw system mixes milliohm and megaohm rows; equilibrate and solve
    // in extended precision so the oracle's own roundoff stays negligible
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    MatL Al = A.cast<long double>();
    VecL rs = Al.cwiseAbs().rowwise().maxCoeff();
    for (int i = 0; i < nu; ++i) rs(i) = rs(i) > 0 ? 1.0L / rs(i) : 1.0L;
    VecL yl = MatL(rs.asDiagonal() * Al).fullPivLu().solve(VecL(rs.asDiagonal() * b.cast<long double>()));
    Eigen::VectorXd y = yl.cast<double>();

    BruteSolution s;
    s.i_b = y.segment(0, n);
    s.i_s1 = y.segment(n, n - 1);
    s.i_s2 = y.segment(2 * n - 1, n - 1);
    s.i_s3 = y.segment(3 * n - 2, n);
    s.i_s4 = y.segment(4 * n - 2, n - 1);
    s.i_s5 = y.segment(5 * n - 3, n);
    {
        const auto& p0 = cells[0];
        double vb0 = X(0) - p0.r0 * s.i_b(0) - p0.r1 * X(n) - p0.r2 * X(2 * n);
        s.v_t = vb0 - R.s3(0) * s.i_s3(0) - R.s5(0) * s.i_s5(0);
    }
    return s;
}

} // namespace rbs::test
