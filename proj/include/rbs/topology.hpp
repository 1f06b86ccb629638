#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rbs/errors.hpp"

namespace rbs {

// Switch branch electrical parameters. An off switch keeps its branch in the
// network with the (large but finite) off resistance, so the mesh structure
// never changes under reconfiguration.
struct SwitchParams {
    double r_ds_on = 4e-3;
    double r_ds_off = 2e6;
    double r_wire = 4e-3;
};

inline double switch_resistance(int s, const SwitchParams& p) {
    return s * p.r_ds_on + (1 - s) * p.r_ds_off + p.r_wire;
}

// Switch roles for an n-cell chain, cell indices 1-based:
//   m=1  S1_k : P_k  -- P_{k+1}   (positive-electrode lateral link, k < n)
//   m=2  S2_k : N_k  -- P_{k+1}   (series link, k < n)
//   m=3  S3_k : N_k  -- T-        (negative terminal tap, all k)
//   m=4  S4_k : N_k  -- N_{k+1}   (negative-electrode lateral link, k < n)
//   m=5  S5_k : P_k  -- T+        (positive terminal tap, all k)
// The last cell therefore carries only m in {3,5}, giving 5n-3 switches.
inline int n_switches(int n_cells) {
    if (n_cells < 1) throw Error(ErrorCode::index, "need at least one cell");
    return 5 * n_cells - 3;
}

// Flat position of switch m of cell n under cell-major, switch-minor order,
// the last cell contributing (S3, S5) in that order.
inline int flat_index(int n_cells, int cell, int m) {
    if (cell < 1 || cell > n_cells)
        throw Error(ErrorCode::index, "cell index " + std::to_string(cell) + " out of range");
    if (cell < n_cells) {
        if (m < 1 || m > 5)
            throw Error(ErrorCode::index, "switch index " + std::to_string(m) + " out of 1..5");
        return (cell - 1) * 5 + (m - 1);
    }
    if (m == 3) return 5 * (n_cells - 1);
    if (m == 5) return 5 * (n_cells - 1) + 1;
    throw Error(ErrorCode::index,
                "last cell carries only switches 3 and 5, got " + std::to_string(m));
}

// Binary switch state vector for one configuration; the control input.
struct Ssv {
    int n_cells = 0;
    std::vector<std::uint8_t> bits;

    static Ssv zeros(int n_cells) {
        Ssv s;
        s.n_cells = n_cells;
        s.bits.assign(static_cast<std::size_t>(n_switches(n_cells)), 0);
        return s;
    }

    int size() const { return static_cast<int>(bits.size()); }

    void validate() const {
        if (size() != n_switches(n_cells))
            throw Error(ErrorCode::index, "ssv length " + std::to_string(size()) +
                                              " != " + std::to_string(n_switches(n_cells)));
        for (auto b : bits)
            if (b > 1) throw Error(ErrorCode::domain, "ssv entries must be 0/1");
    }

    int get(int cell, int m) const { return bits[static_cast<std::size_t>(flat_index(n_cells, cell, m))]; }
    void set(int cell, int m, int v) { bits[static_cast<std::size_t>(flat_index(n_cells, cell, m))] = static_cast<std::uint8_t>(v); }

    std::string to_string() const {
        std::string s;
        s.reserve(bits.size());
        for (auto b : bits) s.push_back(b ? '1' : '0');
        return s;
    }

    friend bool operator==(const Ssv& a, const Ssv& b) {
        return a.n_cells == b.n_cells && a.bits == b.bits;
    }
    friend bool operator<(const Ssv& a, const Ssv& b) { return a.bits < b.bits; }
};

// Availability mask: 1 = switch branch physically present in the design.
struct DesignMask {
    int n_cells = 0;
    std::vector<std::uint8_t> available;

    static DesignMask all_ones(int n_cells) {
        DesignMask m;
        m.n_cells = n_cells;
        m.available.assign(static_cast<std::size_t>(n_switches(n_cells)), 1);
        return m;
    }
};

// true iff every on-bit of the ssv is available in the design.
inline bool mask_filter(const Ssv& ssv, const DesignMask& mask) {
    if (static_cast<std::size_t>(ssv.size()) != mask.available.size() || ssv.n_cells != mask.n_cells)
        throw Error(ErrorCode::index, "ssv/mask length mismatch");
    for (std::size_t i = 0; i < mask.available.size(); ++i)
        if (ssv.bits[i] && !mask.available[i]) return false;
    return true;
}

// Built-in designs. "a" keeps every branch. "d" is a reduced design with
// 3n-2 switches: the lateral links S1_k, S4_k and the last positive tap
// S5_n are removed, leaving the series links and the terminal taps.
inline DesignMask design_mask_builtin(const std::string& name, int n_cells) {
    DesignMask m = DesignMask::all_ones(n_cells);
    if (name == "a") return m;
    if (name == "d") {
        for (int k = 1; k < n_cells; ++k) {
            m.available[static_cast<std::size_t>(flat_index(n_cells, k, 1))] = 0;
            m.available[static_cast<std::size_t>(flat_index(n_cells, k, 4))] = 0;
        }
        m.available[static_cast<std::size_t>(flat_index(n_cells, n_cells, 5))] = 0;
        return m;
    }
    throw Error(ErrorCode::domain, "unknown built-in design '" + name + "'", name);
}

// Cell position flags used by the configuration grammar.
enum class CellFlag : std::uint8_t { P_bgn, P_mid, P_end, S, B };

inline const char* cell_flag_name(CellFlag f) {
    switch (f) {
        case CellFlag::P_bgn: return "P_bgn";
        case CellFlag::P_mid: return "P_mid";
        case CellFlag::P_end: return "P_end";
        case CellFlag::S: return "S";
        case CellFlag::B: return "B";
    }
    return "?";
}

// The eight 5-bit cell patterns, one per cell-module position-and-connection
// class, in (S1..S5) order.
struct CellPatternRow {
    std::array<std::uint8_t, 5> bits;
    const char* position;
};

inline const std::array<CellPatternRow, 8>& cell_pattern_table() {
    static const std::array<CellPatternRow, 8> table = {{
        {{0, 1, 0, 0, 1}, "first cell of a series module on the positive-terminal side; last cell of a leading parallel block"},
        {{0, 1, 0, 0, 0}, "interior series cell; last cell of a mid-chain parallel block"},
        {{0, 0, 1, 0, 0}, "last cell of a series module on the negative-terminal side; last cell of a trailing parallel block"},
        {{0, 0, 0, 1, 1}, "non-last cell of a leading parallel block"},
        {{1, 0, 0, 1, 0}, "non-last cell of a mid-chain parallel block"},
        {{1, 0, 1, 0, 0}, "non-last cell of a trailing parallel block"},
        {{1, 0, 0, 0, 0}, "bypassed cell crossed by a positive-side chain"},
        {{0, 0, 0, 1, 0}, "bypassed cell crossed by a negative-side chain"},
    }};
    return table;
}

// One module of a configuration: a series chain or a parallel block over an
// ascending set of (1-based) cell indices.
struct Module {
    bool parallel = false;
    std::vector<int> cells;
};

// A full configuration. series_pack chains its modules from the positive to
// the negative terminal; parallel_pack places every (series) module directly
// across the terminals. Cells not listed in any module are bypassed.
struct PackConfig {
    enum class Kind { series_pack, parallel_pack };
    Kind kind = Kind::series_pack;
    int n_cells = 0;
    std::vector<Module> modules;

    void validate() const {
        if (n_cells < 1) throw Error(ErrorCode::mapping, "pack with no cells");
        if (modules.empty()) throw Error(ErrorCode::mapping, "configuration has no modules");
        int prev_last = 0;
        for (const auto& mod : modules) {
            if (mod.cells.empty()) throw Error(ErrorCode::mapping, "empty module");
            int prev = 0;
            for (int c : mod.cells) {
                if (c < 1 || c > n_cells)
                    throw Error(ErrorCode::mapping, "cell index " + std::to_string(c) + " out of range");
                if (c <= prev) throw Error(ErrorCode::mapping, "module cells not strictly ascending");
                prev = c;
            }
            if (mod.parallel && mod.cells.size() < 2)
                throw Error(ErrorCode::mapping, "parallel block needs at least 2 cells");
            if (mod.cells.front() <= prev_last)
                throw Error(ErrorCode::mapping, "modules overlap or are out of order");
            prev_last = mod.cells.back();
        }
        if (kind == Kind::parallel_pack)
            for (const auto& mod : modules)
                if (mod.parallel)
                    throw Error(ErrorCode::mapping, "parallel pack must consist of series modules");
    }
};

// Wires a configuration into its switch state vector. Only load-bearing
// switches are turned on: terminal taps, series links, and the lateral
// chains that carry current across parallel blocks or bypassed cells. In the
// non-degenerate positions the per-cell bit patterns coincide with the rows
// of cell_pattern_table().
inline Ssv ssv_from_config(const PackConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_cells;
    Ssv ssv = Ssv::zeros(n);

    auto on = [&](int cell, int m) { ssv.set(cell, m, 1); };

    // Series chain internal wiring: consecutive actives linked N_a -> P_{a+1}
    // (S2), bypassed cells inside a gap pass the chain along the positive
    // side (S1).
    auto wire_series_run = [&](const std::vector<int>& cells) {
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            int a = cells[i], b = cells[i + 1];
            on(a, 2);
            for (int p = a + 1; p < b; ++p) on(p, 1);
        }
    };

    if (cfg.kind == PackConfig::Kind::parallel_pack) {
        // Every module spans both terminals.
        for (const auto& mod : cfg.modules) {
            on(mod.cells.front(), 5);
            on(mod.cells.back(), 3);
            wire_series_run(mod.cells);
        }
        return ssv;
    }

    const std::size_t K = cfg.modules.size();
    for (std::size_t k = 0; k < K; ++k) {
        const Module& mod = cfg.modules[k];
        const bool first = (k == 0);
        const bool last = (k + 1 == K);
        const int lo = mod.cells.front();
        const int hi = mod.cells.back();

        if (!mod.parallel) {
            if (first) on(lo, 5);
            wire_series_run(mod.cells);
            if (last) on(hi, 3);
        } else {
            if (first) {
                for (int c : mod.cells) on(c, 5);
                // Negative-side collection chain toward the exit cell.
                if (!last)
                    for (int p = lo; p < hi; ++p) on(p, 4);
            }
            if (last) {
                for (int c : mod.cells) on(c, 3);
                // Positive-side distribution chain from the entry cell.
                if (!first)
                    for (int p = lo; p < hi; ++p) on(p, 1);
            }
            if (!first && !last) {
                for (int p = lo; p < hi; ++p) {
                    on(p, 1);
                    on(p, 4);
                }
            }
        }

        if (!last) {
            // Exit toward the next module: series link from the last active,
            // then a positive-side chain across any bypassed cells between.
            on(hi, 2);
            int next_lo = cfg.modules[k + 1].cells.front();
            for (int p = hi + 1; p < next_lo; ++p) on(p, 1);
        }
    }
    return ssv;
}

} // namespace rbs
