#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>
#include <vector>

#include "rbs/cell_model.hpp"
#include "rbs/errors.hpp"
#include "rbs/topology.hpp"

namespace rbs {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Sign conventions, used consistently everywhere:
//   i_t > 0 : system discharge (current out of the positive terminal)
//   i_b > 0 : cell discharge (current out of the cell's positive electrode)
// so SoC evolves as dz/dt = -i_b/Q and OCV as dv/dt = -(k_v/Q) i_b.

struct SwitchResistances {
    Vec s1, s2, s4; // inter-cell links, length n-1
    Vec s3, s5;     // terminal taps, length n
};

inline SwitchResistances switch_resistances(const Ssv& ssv, const SwitchParams& p) {
    const int n = ssv.n_cells;
    SwitchResistances r;
    r.s1.resize(std::max(n - 1, 0));
    r.s2.resize(std::max(n - 1, 0));
    r.s4.resize(std::max(n - 1, 0));
    r.s3.resize(n);
    r.s5.resize(n);
    for (int k = 1; k < n; ++k) {
        r.s1(k - 1) = switch_resistance(ssv.get(k, 1), p);
        r.s2(k - 1) = switch_resistance(ssv.get(k, 2), p);
        r.s4(k - 1) = switch_resistance(ssv.get(k, 4), p);
    }
    for (int k = 1; k <= n; ++k) {
        r.s3(k - 1) = switch_resistance(ssv.get(k, 3), p);
        r.s5(k - 1) = switch_resistance(ssv.get(k, 5), p);
    }
    return r;
}

namespace detail {

// Row-equilibrated LU. The raw blocks mix milliohm and megaohm rows, which
// inflates the plain condition number by the scale ratio alone; equilibration
// makes the estimate reflect actual rank deficiency.
struct ScaledSolver {
    Vec scale;
    Eigen::PartialPivLU<Mat> lu;

    void compute(const Mat& A, const char* name, bool check = true) {
        const int n = static_cast<int>(A.rows());
        scale = A.cwiseAbs().rowwise().maxCoeff();
        for (int i = 0; i < n; ++i) scale(i) = scale(i) > 0.0 ? 1.0 / scale(i) : 1.0;
        Mat eq = scale.asDiagonal() * A;
        lu.compute(eq);
        if (!check) return;
        double rc = lu.rcond();
        if (!(rc > 1e-12))
            throw Error(ErrorCode::degenerate_config,
                        std::string("degenerate configuration: matrix ") + name +
                            " has condition estimate above 1e12",
                        name);
    }

    template <typename Derived>
    Mat solve(const Eigen::MatrixBase<Derived>& b) const {
        return lu.solve(Mat(scale.asDiagonal() * b.derived()));
    }
};

} // namespace detail

// Coefficient blocks of the mesh/balance system, switch-dependent parts only.
// Within each family, rows 1..n-1 come from the meshes between adjacent
// cells; the n-th row closes the block (terminal current balance for the
// S5/S3 families, the appended zero virtual series current for the S2
// family, and the last cell's negative-electrode balance for its
// counterpart). The lateral currents i_s1/i_s4 are already eliminated via
// the electrode balances, whose prefix sums reappear below.
struct IntermediateMatrices {
    Mat E_S5, E_B, E_S2;
    Vec E_t;
    Mat F_S2, F_S5, F_B_sw; // F_B = F_B_sw - diag0(r0)
    Mat G_S2, G_S3, G_B_sw; // G_B = G_B_sw - superdiag(r0)
    Mat H_S3, H_B, H_S2;
    Vec H_t;
    Mat J_S2;               // F_S2 - F_S5 E_S5^{-1} E_S2
    Mat K_S2;               // G_S2 - G_S3 H_S3^{-1} H_S2
};

// Per-configuration cache: everything that depends only on the switch state
// vector. The three named eliminations are factored once here, which is also
// where a degenerate (short/open) configuration is detected.
struct SwitchFactors {
    int n = 0;
    Ssv ssv;
    SwitchResistances R;
    IntermediateMatrices blocks;
    // 4n x 4n block system over [I_B; I_S2; I_S3; I_S5], switch-only part.
    // Kept in 80-bit precision: entries such as r_off + r_on would otherwise
    // round away the milliohm-scale information at the megaohm scale, which
    // is exactly what determines parallel-loop currents.
    MatL M_sw;
    Mat M_sw_d; // double copy for the fast evaluation path
};

inline SwitchFactors make_switch_factors(const Ssv& ssv, const SwitchParams& params) {
    ssv.validate();
    const int n = ssv.n_cells;
    SwitchFactors f;
    f.n = n;
    f.ssv = ssv;
    f.R = switch_resistances(ssv, params);
    const auto& R = f.R;
    auto& B = f.blocks;

    B.E_S5 = Mat::Zero(n, n);
    B.E_B = Mat::Zero(n, n);
    B.E_S2 = Mat::Zero(n, n);
    B.E_t = Vec::Zero(n);
    B.F_S2 = Mat::Zero(n, n);
    B.F_S5 = Mat::Zero(n, n);
    B.F_B_sw = Mat::Zero(n, n);
    B.G_S2 = Mat::Zero(n, n);
    B.G_S3 = Mat::Zero(n, n);
    B.G_B_sw = Mat::Zero(n, n);
    B.H_S3 = Mat::Zero(n, n);
    B.H_B = Mat::Zero(n, n);
    B.H_S2 = Mat::Zero(n, n);
    B.H_t = Vec::Zero(n);

    for (int j = 1; j <= n - 1; ++j) {
        const int r = j - 1;
        const double rs1 = R.s1(j - 1), rs2 = R.s2(j - 1), rs4 = R.s4(j - 1);

        // positive-terminal mesh through S5_j, S5_{j+1} and eliminated S1_j
        for (int k = 0; k < j; ++k) {
            B.E_S5(r, k) += rs1;
            B.E_B(r, k) = rs1;
        }
        for (int k = 0; k < j - 1; ++k) B.E_S2(r, k) = -rs1;
        B.E_S5(r, j - 1) += R.s5(j - 1);
        B.E_S5(r, j) -= R.s5(j);

        // negative-terminal mesh through S3_j, S3_{j+1} and eliminated S4_j
        for (int k = 0; k < j; ++k) {
            B.H_S3(r, k) += rs4;
            B.H_B(r, k) = rs4;
            B.H_S2(r, k) = -rs4;
        }
        B.H_S3(r, j - 1) += R.s3(j - 1);
        B.H_S3(r, j) -= R.s3(j);

        // cell-j loop through S1_j and S2_j
        B.F_S2(r, j - 1) += rs2;
        for (int k = 0; k < j - 1; ++k) B.F_S2(r, k) -= rs1;
        for (int k = 0; k < j; ++k) {
            B.F_B_sw(r, k) = -rs1;
            B.F_S5(r, k) = rs1;
        }

        // cell-(j+1) loop through S2_j and S4_j
        B.G_S2(r, j - 1) += rs2;
        for (int k = 0; k < j; ++k) {
            B.G_S2(r, k) += rs4;
            B.G_B_sw(r, k) = rs4;
            B.G_S3(r, k) = -rs4;
        }
    }

    B.E_S5.row(n - 1).setOnes();
    B.E_t(n - 1) = 1.0;
    B.H_S3.row(n - 1).setOnes();
    B.H_t(n - 1) = 1.0;
    B.F_S2(n - 1, n - 1) = 1.0; // virtual series current of the last cell
    for (int k = 0; k < n - 1; ++k) B.G_S2(n - 1, k) = -1.0;
    B.G_B_sw.row(n - 1).setConstant(-1.0);
    B.G_S3.row(n - 1).setOnes();

    detail::ScaledSolver lu_E, lu_H, lu_J;
    lu_E.compute(B.E_S5, "E_S5");
    lu_H.compute(B.H_S3, "H_S3");
    B.J_S2 = B.F_S2 - B.F_S5 * lu_E.solve(B.E_S2);
    lu_J.compute(B.J_S2, "J_S2");
    B.K_S2 = B.G_S2 - B.G_S3 * lu_H.solve(B.H_S2);

    // Assemble the coupled block system: unknowns y = [I_B; I_S2; I_S3; I_S5],
    // rows [E; F; G; H]. Solving it directly (instead of chaining the block
    // inverses) keeps the megaohm-leakage currents accurate to full precision.
    // The compound entries (sums of on/off resistances and their prefix
    // accumulations) are rebuilt in 80-bit arithmetic so the milliohm content
    // survives the megaohm scale.
    MatL M = MatL::Zero(4 * n, 4 * n);
    {
        auto E_S5 = M.block(0, 3 * n, n, n);
        auto E_B = M.block(0, 0, n, n);
        auto E_S2 = M.block(0, n, n, n);
        auto F_S2 = M.block(n, n, n, n);
        auto F_B = M.block(n, 0, n, n);
        auto F_S5 = M.block(n, 3 * n, n, n);
        auto G_S2 = M.block(2 * n, n, n, n);
        auto G_B = M.block(2 * n, 0, n, n);
        auto G_S3 = M.block(2 * n, 2 * n, n, n);
        auto H_S3 = M.block(3 * n, 2 * n, n, n);
        auto H_B = M.block(3 * n, 0, n, n);
        auto H_S2 = M.block(3 * n, n, n, n);
        for (int j = 1; j <= n - 1; ++j) {
            const int r = j - 1;
            const long double rs1 = R.s1(j - 1), rs2 = R.s2(j - 1), rs4 = R.s4(j - 1);
            for (int k = 0; k < j; ++k) {
                E_S5(r, k) += rs1;
                E_B(r, k) = -rs1;
                H_S3(r, k) += rs4;
                H_B(r, k) = -rs4;
                H_S2(r, k) = rs4;
                F_B(r, k) = rs1; // -F_B_sw
                F_S5(r, k) = -rs1;
                G_S2(r, k) += rs4;
                G_B(r, k) = -rs4;
                G_S3(r, k) = rs4;
            }
            for (int k = 0; k < j - 1; ++k) {
                E_S2(r, k) = rs1; // -E_S2
                F_S2(r, k) -= rs1;
            }
            E_S5(r, j - 1) += (long double)R.s5(j - 1);
            E_S5(r, j) -= (long double)R.s5(j);
            H_S3(r, j - 1) += (long double)R.s3(j - 1);
            H_S3(r, j) -= (long double)R.s3(j);
            F_S2(r, j - 1) += rs2;
            G_S2(r, j - 1) += rs2;
        }
        for (int k = 0; k < n; ++k) {
            E_S5(n - 1, k) = 1.0L;
            H_S3(n - 1, k) = 1.0L;
            G_S3(n - 1, k) = -1.0L;
            G_B(n - 1, k) = 1.0L;
        }
        F_S2(n - 1, n - 1) = 1.0L;
        for (int k = 0; k < n - 1; ++k) G_S2(n - 1, k) = -1.0L;
    }
    f.M_sw = std::move(M);
    f.M_sw_d = f.M_sw.cast<double>();
    return f;
}

namespace detail {

// Completed block matrix for one parameter refresh.
template <typename M>
inline M completed_block_matrix_t(const M& sw, int n, const Vec& r0) {
    M out = sw;
    for (int j = 0; j < n - 1; ++j) {
        out(n + j, j) += r0(j);             // F rows: + r0_j i_b_j
        out(2 * n + j, j + 1) += r0(j + 1); // G rows: + r0_{j+1} i_b_{j+1}
    }
    return out;
}

// Extended-precision equilibrated solve for the full realization maps. With
// megaohm off-branches the block system's condition sits near 1e9, leaving
// only ~8 accurate digits in double; the realization is the reference
// surface of the toolkit, so its maps are produced with 80-bit arithmetic.
inline Mat solve_blocks_precise(const MatL& Ml, const Mat& rhs, const char* name) {
    const int n = static_cast<int>(Ml.rows());
    VecL scale = Ml.cwiseAbs().rowwise().maxCoeff();
    for (int i = 0; i < n; ++i) scale(i) = scale(i) > 0.0L ? 1.0L / scale(i) : 1.0L;
    MatL eq = scale.asDiagonal() * Ml;
    Eigen::PartialPivLU<MatL> lu(eq);
    // 80-bit arithmetic keeps ~18 digits; only flag conditioning that would
    // actually destroy the solution (true shorts/opens), not extreme but
    // legitimate off-resistance settings
    if (!(lu.rcond() > 1e-16L))
        throw Error(ErrorCode::degenerate_config,
                    std::string("degenerate configuration: matrix ") + name +
                        " has condition estimate above 1e16",
                    name);
    MatL beq = scale.asDiagonal() * rhs.cast<long double>();
    return lu.solve(beq).cast<double>();
}

} // namespace detail

// Maps from (state, terminal current) to every branch current.
struct BranchMaps {
    Mat C_S1, C_S2, C_S3, C_S4, C_S5; // S1/S4: (n-1) x 3n, others n x 3n
    Vec D_S1, D_S2, D_S3, D_S4, D_S5;
};

struct StateSpaceRealization {
    int n = 0;
    Mat A;       // 3n x 3n
    Vec B;       // 3n
    Mat C_IB;    // n x 3n
    Vec D_IB;    // n
    Mat C_VB;    // n x 3n
    Vec D_VB;    // n
    RowVec C_vt; // 1 x 3n
    double D_vt = 0;
    Ssv ssv;
    std::vector<CellParams> params;
    SwitchResistances R;
    BranchMaps branches;

    // Terminal voltage expressed through cell r (0-based); all choices agree.
    RowVec C_vt_via(int r) const {
        return C_VB.row(r) - R.s3(r) * branches.C_S3.row(r) - R.s5(r) * branches.C_S5.row(r);
    }
    double D_vt_via(int r) const {
        return D_VB(r) - R.s3(r) * branches.D_S3(r) - R.s5(r) * branches.D_S5(r);
    }
};

inline StateSpaceRealization assemble(const SwitchFactors& f, const std::vector<CellParams>& cells) {
    const int n = f.n;
    if (static_cast<int>(cells.size()) != n)
        throw Error(ErrorCode::index, "cell parameter count does not match configuration");

    StateSpaceRealization ss;
    ss.n = n;
    ss.ssv = f.ssv;
    ss.params = cells;
    ss.R = f.R;

    Vec r0(n), r1(n), r2(n), t1(n), t2(n), kvq(n);
    for (int i = 0; i < n; ++i) {
        const auto& p = cells[static_cast<std::size_t>(i)];
        r0(i) = p.r0;
        r1(i) = p.r1;
        r2(i) = p.r2;
        t1(i) = p.tau1();
        t2(i) = p.tau2();
        kvq(i) = p.kv / p.capacity_As;
    }

    // RHS columns: one per state variable, plus the terminal current.
    Mat rhs = Mat::Zero(4 * n, 3 * n + 1);
    for (int j = 0; j < n - 1; ++j) {
        rhs(n + j, j) = 1.0;                       // F_v
        rhs(n + j, n + j) = -r1(j);                // F_R1
        rhs(n + j, 2 * n + j) = -r2(j);            // F_R2
        rhs(2 * n + j, j + 1) = 1.0;               // G_v
        rhs(2 * n + j, n + j + 1) = -r1(j + 1);    // G_R1
        rhs(2 * n + j, 2 * n + j + 1) = -r2(j + 1); // G_R2
    }
    rhs(n - 1, 3 * n) = 1.0;     // E_t
    rhs(4 * n - 1, 3 * n) = 1.0; // H_t

    Mat Y = detail::solve_blocks_precise(
        detail::completed_block_matrix_t(f.M_sw, n, r0), rhs, "block system");

    ss.C_IB = Y.block(0, 0, n, 3 * n);
    ss.D_IB = Y.block(0, 3 * n, n, 1);
    Mat C_S2 = Y.block(n, 0, n, 3 * n);
    Vec D_S2 = Y.block(n, 3 * n, n, 1);
    Mat C_S3 = Y.block(2 * n, 0, n, 3 * n);
    Vec D_S3 = Y.block(2 * n, 3 * n, n, 1);
    Mat C_S5 = Y.block(3 * n, 0, n, 3 * n);
    Vec D_S5 = Y.block(3 * n, 3 * n, n, 1);

    // The eliminated lateral currents come back as electrode-balance prefix
    // sums: i_s1_j collects the positive side, i_s4_j the negative side.
    const int m = std::max(n - 1, 0);
    Mat C_S1 = Mat::Zero(m, 3 * n), C_S4 = Mat::Zero(m, 3 * n);
    Vec D_S1 = Vec::Zero(m), D_S4 = Vec::Zero(m);
    {
        RowVec acc1 = RowVec::Zero(3 * n), acc4 = RowVec::Zero(3 * n);
        double accd1 = 0, accd4 = 0;
        for (int j = 0; j < m; ++j) {
            acc1 += C_S5.row(j) - ss.C_IB.row(j);
            accd1 += D_S5(j) - ss.D_IB(j);
            if (j >= 1) {
                acc1 += C_S2.row(j - 1);
                accd1 += D_S2(j - 1);
            }
            C_S1.row(j) = acc1;
            D_S1(j) = accd1;

            acc4 += ss.C_IB.row(j) - C_S2.row(j) - C_S3.row(j);
            accd4 += ss.D_IB(j) - D_S2(j) - D_S3(j);
            C_S4.row(j) = acc4;
            D_S4(j) = accd4;
        }
    }

    ss.branches = {std::move(C_S1), std::move(C_S2), std::move(C_S3),
                   std::move(C_S4), std::move(C_S5),
                   std::move(D_S1), std::move(D_S2), std::move(D_S3),
                   std::move(D_S4), std::move(D_S5)};

    // Cell terminal voltages v_b = v - r0 i_b - r1 i_r1 - r2 i_r2
    ss.C_VB = Vec(-r0).asDiagonal() * ss.C_IB;
    for (int i = 0; i < n; ++i) {
        ss.C_VB(i, i) += 1.0;
        ss.C_VB(i, n + i) -= r1(i);
        ss.C_VB(i, 2 * n + i) -= r2(i);
    }
    ss.D_VB = -(r0.array() * ss.D_IB.array()).matrix();

    ss.C_vt = ss.C_vt_via(0);
    ss.D_vt = ss.D_vt_via(0);

    // State dynamics: OCV rows, then the two RC current families.
    ss.A = Mat::Zero(3 * n, 3 * n);
    ss.B = Vec::Zero(3 * n);
    ss.A.topRows(n) = Vec(-kvq).asDiagonal() * ss.C_IB;
    ss.B.head(n) = -(kvq.array() * ss.D_IB.array()).matrix();
    Mat rc1 = ss.C_IB;
    rc1.block(0, n, n, n) -= Mat::Identity(n, n);
    ss.A.middleRows(n, n) = Vec(t1.cwiseInverse()).asDiagonal() * rc1;
    ss.B.segment(n, n) = (ss.D_IB.array() / t1.array()).matrix();
    Mat rc2 = ss.C_IB;
    rc2.block(0, 2 * n, n, n) -= Mat::Identity(n, n);
    ss.A.bottomRows(n) = Vec(t2.cwiseInverse()).asDiagonal() * rc2;
    ss.B.tail(n) = (ss.D_IB.array() / t2.array()).matrix();

    return ss;
}

inline StateSpaceRealization assemble(const std::vector<CellParams>& cells, const Ssv& ssv,
                                      const SwitchParams& params) {
    return assemble(make_switch_factors(ssv, params), cells);
}

// Point evaluation for the simulation hot path: solves the block system for
// the current state and the unit terminal current only, instead of building
// the full realization maps.
struct QuickEval {
    int n = 0;
    Vec ib0, dib;     // I_B = ib0 + dib * i_t
    double vt0 = 0, dvt = 0;
    Vec vb0, dvb;     // V_B = vb0 + dvb * i_t
    Vec dX0, dXi;     // dX/dt = dX0 + dXi * i_t
};

inline QuickEval quick_eval(const SwitchFactors& f, const std::vector<CellParams>& cells,
                            const Vec& X, bool check_condition = true) {
    const int n = f.n;
    if (static_cast<int>(cells.size()) != n)
        throw Error(ErrorCode::index, "cell parameter count does not match configuration");
    if (X.size() != 3 * n)
        throw Error(ErrorCode::index, "state vector length must be 3n");

    Vec r0(n), r1(n), r2(n), t1(n), t2(n), kvq(n);
    for (int i = 0; i < n; ++i) {
        const auto& p = cells[static_cast<std::size_t>(i)];
        r0(i) = p.r0;
        r1(i) = p.r1;
        r2(i) = p.r2;
        t1(i) = p.tau1();
        t2(i) = p.tau2();
        kvq(i) = p.kv / p.capacity_As;
    }

    detail::ScaledSolver lu;
    lu.compute(detail::completed_block_matrix_t(f.M_sw_d, n, r0), "block system",
               check_condition);

    Mat rhs = Mat::Zero(4 * n, 2); // col 0: state at i_t = 0, col 1: unit i_t
    for (int j = 0; j < n - 1; ++j) {
        rhs(n + j, 0) = X(j) - r1(j) * X(n + j) - r2(j) * X(2 * n + j);
        rhs(2 * n + j, 0) = X(j + 1) - r1(j + 1) * X(n + j + 1) - r2(j + 1) * X(2 * n + j + 1);
    }
    rhs(n - 1, 1) = 1.0;
    rhs(4 * n - 1, 1) = 1.0;

    Mat Y = lu.solve(rhs);

    QuickEval q;
    q.n = n;
    q.ib0 = Y.block(0, 0, n, 1);
    q.dib = Y.block(0, 1, n, 1);
    Vec i3_0 = Y.block(2 * n, 0, n, 1), i3_i = Y.block(2 * n, 1, n, 1);
    Vec i5_0 = Y.block(3 * n, 0, n, 1), i5_i = Y.block(3 * n, 1, n, 1);

    q.vb0 = Vec(n);
    q.dvb = Vec(n);
    for (int i = 0; i < n; ++i) {
        q.vb0(i) = X(i) - r0(i) * q.ib0(i) - r1(i) * X(n + i) - r2(i) * X(2 * n + i);
        q.dvb(i) = -r0(i) * q.dib(i);
    }
    q.vt0 = q.vb0(0) - f.R.s3(0) * i3_0(0) - f.R.s5(0) * i5_0(0);
    q.dvt = q.dvb(0) - f.R.s3(0) * i3_i(0) - f.R.s5(0) * i5_i(0);

    q.dX0 = Vec(3 * n);
    q.dXi = Vec(3 * n);
    for (int i = 0; i < n; ++i) {
        q.dX0(i) = -kvq(i) * q.ib0(i);
        q.dXi(i) = -kvq(i) * q.dib(i);
        q.dX0(n + i) = (q.ib0(i) - X(n + i)) / t1(i);
        q.dXi(n + i) = q.dib(i) / t1(i);
        q.dX0(2 * n + i) = (q.ib0(i) - X(2 * n + i)) / t2(i);
        q.dXi(2 * n + i) = q.dib(i) / t2(i);
    }
    return q;
}

inline Vec cell_currents(const StateSpaceRealization& ss, const Vec& X, double i_t) {
    return ss.C_IB * X + ss.D_IB * i_t;
}

inline Vec cell_voltages(const StateSpaceRealization& ss, const Vec& X, double i_t) {
    return ss.C_VB * X + ss.D_VB * i_t;
}

inline double terminal_voltage(const StateSpaceRealization& ss, const Vec& X, double i_t) {
    return ss.C_vt * X + ss.D_vt * i_t;
}

struct BranchCurrents {
    Vec i_b, i_s1, i_s2, i_s3, i_s4, i_s5;
};

inline BranchCurrents branch_currents(const StateSpaceRealization& ss, const Vec& X, double i_t) {
    BranchCurrents bc;
    bc.i_b = cell_currents(ss, X, i_t);
    const auto& b = ss.branches;
    bc.i_s1 = b.C_S1 * X + b.D_S1 * i_t;
    bc.i_s2 = b.C_S2 * X + b.D_S2 * i_t;
    bc.i_s3 = b.C_S3 * X + b.D_S3 * i_t;
    bc.i_s4 = b.C_S4 * X + b.D_S4 * i_t;
    bc.i_s5 = b.C_S5 * X + b.D_S5 * i_t;
    return bc;
}

namespace detail {

// Root of a*i^2 + b*i - p = 0 with the smaller magnitude (the stable
// high-voltage branch).
inline double power_root(double a, double b, double p) {
    if (std::abs(a) < 1e-15) {
        if (std::abs(b) < 1e-15)
            throw Error(ErrorCode::power_infeasible, "terminal voltage identically zero");
        return p / b;
    }
    const double disc = b * b + 4.0 * a * p;
    if (disc < 0.0)
        throw Error(ErrorCode::power_infeasible,
                    "requested power " + std::to_string(p) +
                        " W exceeds the deliverable maximum for this configuration");
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
    const double root1 = q / a;
    const double root2 = (q != 0.0) ? (-p) / q : 0.0;
    return (std::abs(root1) <= std::abs(root2)) ? root1 : root2;
}

} // namespace detail

inline double current_from_power(const StateSpaceRealization& ss, const Vec& X, double p_t) {
    return detail::power_root(ss.D_vt, ss.C_vt * X, p_t);
}

inline double current_from_power(const QuickEval& q, double p_t) {
    return detail::power_root(q.dvt, q.vt0, p_t);
}

enum class DiscretizeMethod { euler, zoh };

inline std::pair<Mat, Vec> discretize(const Mat& A, const Vec& B, double dt, DiscretizeMethod m) {
    if (!(dt > 0.0)) throw Error(ErrorCode::domain, "dt must be positive");
    const int s = static_cast<int>(A.rows());
    if (m == DiscretizeMethod::euler)
        return {Mat::Identity(s, s) + dt * A, dt * B};
    // exact hold discretization via the augmented exponential
    Mat aug = Mat::Zero(s + 1, s + 1);
    aug.topLeftCorner(s, s) = A * dt;
    aug.topRightCorner(s, 1) = B * dt;
    Mat e = aug.exp();
    return {e.topLeftCorner(s, s), e.topRightCorner(s, 1)};
}

} // namespace rbs
