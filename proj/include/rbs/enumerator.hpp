#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "rbs/errors.hpp"
#include "rbs/topology.hpp"

namespace rbs {

// Integer normalized-voltage window derived from terminal voltage limits.
enum class VoltageBoundMode { nominal, extended };

inline std::pair<int, int> voltage_bounds(double v_min, double v_max, double cell_v_nom,
                                          double cell_v_min, double cell_v_max,
                                          VoltageBoundMode mode, int n_cells) {
    if (!(v_min > 0.0) || !(v_max >= v_min))
        throw Error(ErrorCode::domain, "terminal voltage limits must satisfy 0 < v_min <= v_max");
    if (!(cell_v_nom > 0.0) || !(cell_v_min > 0.0) || !(cell_v_max > 0.0))
        throw Error(ErrorCode::domain, "cell voltages must be positive");
    double lo_raw, hi_raw;
    if (mode == VoltageBoundMode::nominal) {
        lo_raw = std::floor(v_min / cell_v_nom);
        hi_raw = std::ceil(v_max / cell_v_nom);
    } else {
        lo_raw = std::floor(v_min / cell_v_min);
        hi_raw = std::ceil(v_max / cell_v_max);
    }
    int lo = std::max(1, std::min(n_cells, static_cast<int>(lo_raw)));
    int hi = std::max(1, std::min(n_cells, static_cast<int>(hi_raw)));
    if (lo > hi)
        throw Error(ErrorCode::domain, "normalized voltage range is empty after clamping");
    return {lo, hi};
}

// Per-cell token of a parallel-then-series descriptor. pm_first marks the
// start of a mid-chain parallel block so adjacent blocks stay separable.
enum class DpToken : std::uint8_t { B = 0, S = 1, PB = 2, PM_first = 3, PM = 4, PE = 5 };

using DpVec = std::vector<DpToken>;

inline CellFlag token_flag(DpToken t) {
    switch (t) {
        case DpToken::B: return CellFlag::B;
        case DpToken::S: return CellFlag::S;
        case DpToken::PB: return CellFlag::P_bgn;
        case DpToken::PM_first:
        case DpToken::PM: return CellFlag::P_mid;
        case DpToken::PE: return CellFlag::P_end;
    }
    return CellFlag::B;
}

// Segment a token vector into the module list it denotes. Series cells
// separated only by bypasses merge into one chain (the wiring is identical
// either way); parallel blocks keep their explicit boundaries.
inline PackConfig dp_to_pack(const DpVec& v) {
    PackConfig cfg;
    cfg.kind = PackConfig::Kind::series_pack;
    cfg.n_cells = static_cast<int>(v.size());
    enum class Cur { none, s, pb, pm, pe };
    Cur cur = Cur::none;
    for (int i = 0; i < cfg.n_cells; ++i) {
        DpToken t = v[static_cast<std::size_t>(i)];
        int cell = i + 1;
        switch (t) {
            case DpToken::B: break;
            case DpToken::S:
                if (cur != Cur::s) {
                    cfg.modules.push_back({false, {}});
                    cur = Cur::s;
                }
                cfg.modules.back().cells.push_back(cell);
                break;
            case DpToken::PB:
                if (cur != Cur::pb) {
                    cfg.modules.push_back({true, {}});
                    cur = Cur::pb;
                }
                cfg.modules.back().cells.push_back(cell);
                break;
            case DpToken::PM_first:
                cfg.modules.push_back({true, {}});
                cfg.modules.back().cells.push_back(cell);
                cur = Cur::pm;
                break;
            case DpToken::PM:
                if (cfg.modules.empty() || !cfg.modules.back().parallel || cur != Cur::pm)
                    throw Error(ErrorCode::mapping, "mid-chain parallel cell without block start");
                cfg.modules.back().cells.push_back(cell);
                break;
            case DpToken::PE:
                if (cur != Cur::pe) {
                    cfg.modules.push_back({true, {}});
                    cur = Cur::pe;
                }
                cfg.modules.back().cells.push_back(cell);
                break;
        }
    }
    return cfg;
}

// Dynamic-programming table over (cell count, normalized voltage, list type).
// Types 0..2 are returnable (single leading parallel block / series module
// last / trailing parallel block last); types 3..5 are transitional states
// (mid-chain block just closed, lone leading-parallel cell, lone trailing-
// parallel cell).
struct VlTable {
    int n = 0;
    // lists[i][j][t], i,j 1-based.
    std::vector<std::vector<std::array<std::vector<DpVec>, 6>>> lists;

    const std::vector<DpVec>& at(int i, int j, int t) const {
        return lists[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
    }
};

inline VlTable build_vl_table(int n) {
    if (n < 1) throw Error(ErrorCode::domain, "need at least one cell");
    VlTable vl;
    vl.n = n;
    vl.lists.assign(static_cast<std::size_t>(n + 1),
                    std::vector<std::array<std::vector<DpVec>, 6>>(static_cast<std::size_t>(n + 1)));

    auto& L = vl.lists;
    auto append = [](std::vector<DpVec>& dst, const std::vector<DpVec>& src, DpToken extra) {
        for (const auto& h : src) {
            DpVec v = h;
            v.push_back(extra);
            dst.push_back(std::move(v));
        }
    };

    L[1][1][1].push_back({DpToken::S});
    L[1][1][4].push_back({DpToken::PB});

    for (int i = 2; i <= n; ++i) {
        for (int j = 1; j <= i; ++j) {
            auto& cell = L[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const auto& prev = L[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];

            if (j == 1) {
                DpVec all_bypass(static_cast<std::size_t>(i - 1), DpToken::B);
                DpVec s = all_bypass;
                s.push_back(DpToken::S);
                cell[1].push_back(std::move(s));
                DpVec p = all_bypass;
                p.push_back(DpToken::PB);
                cell[4].push_back(std::move(p));
            }

            append(cell[0], prev[0], DpToken::B);
            append(cell[0], prev[0], DpToken::PB);
            append(cell[0], prev[4], DpToken::PB);

            append(cell[1], prev[1], DpToken::B);
            if (j >= 2) {
                const auto& pv = L[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
                append(cell[1], pv[0], DpToken::S);
                append(cell[1], pv[1], DpToken::S);
                append(cell[1], pv[3], DpToken::S);
            }

            append(cell[2], prev[2], DpToken::B);
            append(cell[2], prev[2], DpToken::PE);
            append(cell[2], prev[5], DpToken::PE);

            append(cell[3], prev[3], DpToken::B);
            if (j >= 2) {
                for (int n_mp = 2; n_mp <= i - 1; ++n_mp) {
                    const auto& base = L[static_cast<std::size_t>(i - n_mp)][static_cast<std::size_t>(j - 1)];
                    for (int t : {0, 1, 3}) {
                        for (const auto& h : base[static_cast<std::size_t>(t)]) {
                            DpVec v = h;
                            v.push_back(DpToken::PM_first);
                            for (int q = 1; q < n_mp; ++q) v.push_back(DpToken::PM);
                            cell[3].push_back(std::move(v));
                        }
                    }
                }
            }

            append(cell[4], prev[4], DpToken::B);

            append(cell[5], prev[5], DpToken::B);
            if (j >= 2) {
                const auto& pv = L[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
                append(cell[5], pv[0], DpToken::PE);
                append(cell[5], pv[1], DpToken::PE);
                append(cell[5], pv[3], DpToken::PE);
            }
        }
    }
    return vl;
}

// All feasible parallel-then-series descriptors for each voltage in range.
inline std::vector<std::pair<int, PackConfig>> enumerate_cps(int n, int v_lo, int v_hi) {
    if (v_lo < 1) v_lo = 1;
    if (v_hi > n) v_hi = n;
    VlTable vl = build_vl_table(n);
    std::vector<std::pair<int, PackConfig>> out;
    for (int j = v_lo; j <= v_hi; ++j)
        for (int t : {0, 1, 2})
            for (const auto& v : vl.at(n, j, t)) out.emplace_back(j, dp_to_pack(v));
    return out;
}

// Series-then-parallel configurations at normalized voltage v: equal-length
// series modules placed on an ascending choice of cells, remaining cells
// bypassed. max_modules = 0 allows every split up to n/v; the canonical
// feasible space uses exactly two parallel strings (deeper splits are valid
// circuits but are not part of the reference space).
inline std::vector<PackConfig> enumerate_csp(int n, int v, int max_modules = 0) {
    if (v < 1 || v > n) throw Error(ErrorCode::domain, "normalized voltage out of range");
    std::vector<PackConfig> out;
    if (max_modules <= 0 || max_modules > n / v) max_modules = n / v;
    for (int n_ms = 2; n_ms <= max_modules; ++n_ms) {
        int active = n_ms * v;
        // enumerate ascending subsets of size `active` from 1..n
        std::vector<int> pick(static_cast<std::size_t>(active));
        for (int i = 0; i < active; ++i) pick[static_cast<std::size_t>(i)] = i + 1;
        while (true) {
            PackConfig cfg;
            cfg.kind = PackConfig::Kind::parallel_pack;
            cfg.n_cells = n;
            for (int m = 0; m < n_ms; ++m) {
                Module mod;
                mod.parallel = false;
                for (int k = 0; k < v; ++k)
                    mod.cells.push_back(pick[static_cast<std::size_t>(m * v + k)]);
                cfg.modules.push_back(std::move(mod));
            }
            out.push_back(std::move(cfg));

            // next combination
            int i = active - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - (active - 1 - i)) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int k = i + 1; k < active; ++k)
                pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
        }
    }
    return out;
}

// Exhaustive oracle for the DP: generates every token assignment and keeps
// the valid ones. Exponential, so hard-capped.
inline std::vector<std::pair<int, PackConfig>> naive_cps(int n, int v_lo, int v_hi) {
    if (n > 8)
        throw Error(ErrorCode::refusal, "naive enumeration capped at 8 cells, got " + std::to_string(n));
    std::vector<std::pair<int, PackConfig>> out;
    std::vector<DpToken> v(static_cast<std::size_t>(n));
    const std::array<DpToken, 6> all = {DpToken::B, DpToken::S, DpToken::PB,
                                        DpToken::PM_first, DpToken::PM, DpToken::PE};

    auto valid_voltage = [&]() -> int {
        // returns normalized voltage, or 0 if invalid
        bool seen_non_b = false, seen_main = false, seen_pe = false;
        int pb_count = 0, pe_count = 0, s_count = 0, pm_blocks = 0;
        int pm_open = 0; // cells in the currently open mid block
        bool pm_needs_follow = false;
        for (int i = 0; i < n; ++i) {
            DpToken t = v[static_cast<std::size_t>(i)];
            if (t != DpToken::PM && pm_open == 1) return 0; // block of one
            if (t != DpToken::PM && t != DpToken::B && pm_open > 0) pm_open = 0;
            switch (t) {
                case DpToken::B: break;
                case DpToken::PB:
                    if (seen_main || seen_pe) return 0; // leading block only
                    ++pb_count;
                    seen_non_b = true;
                    break;
                case DpToken::S:
                    if (seen_pe) return 0;
                    ++s_count;
                    seen_non_b = seen_main = true;
                    pm_needs_follow = false;
                    break;
                case DpToken::PM_first:
                    if (seen_pe) return 0;
                    if (!seen_non_b) return 0; // needs a module before
                    pm_open = 1;
                    ++pm_blocks;
                    seen_main = true;
                    pm_needs_follow = true;
                    break;
                case DpToken::PM:
                    if (pm_open < 1) return 0; // continuation without start
                    if (i > 0 && v[static_cast<std::size_t>(i - 1)] != DpToken::PM_first &&
                        v[static_cast<std::size_t>(i - 1)] != DpToken::PM)
                        return 0; // blocks are contiguous
                    ++pm_open;
                    break;
                case DpToken::PE:
                    if (!seen_non_b) return 0; // needs a module before
                    ++pe_count;
                    seen_pe = true;
                    pm_needs_follow = false;
                    break;
            }
        }
        if (pm_open == 1) return 0;
        if (pm_needs_follow) return 0; // mid block cannot end the pack
        if (pb_count == 1) return 0;  // a lone leading-parallel cell is not a module
        if (pe_count == 1) return 0;
        if (!seen_non_b) return 0;
        return (pb_count >= 2 ? 1 : 0) + s_count + pm_blocks + (pe_count >= 2 ? 1 : 0);
    };

    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= all.size();
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (int i = 0; i < n; ++i) {
            v[static_cast<std::size_t>(i)] = all[c % all.size()];
            c /= all.size();
        }
        int vj = valid_voltage();
        if (vj >= v_lo && vj <= v_hi) out.emplace_back(vj, dp_to_pack(v));
    }
    return out;
}

// Deduplicated switch state vectors per normalized voltage.
struct FeasibleSpace {
    int n_cells = 0;
    std::string design = "a";
    int v_lo = 1, v_hi = 1;
    struct Bucket {
        int v = 0;
        std::vector<Ssv> ssvs;
    };
    std::vector<Bucket> buckets;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& b : buckets) t += b.ssvs.size();
        return t;
    }

    // Stable flattened view: ascending voltage, lexicographic bits.
    std::vector<std::pair<int, const Ssv*>> flat() const {
        std::vector<std::pair<int, const Ssv*>> f;
        for (const auto& b : buckets)
            for (const auto& s : b.ssvs) f.emplace_back(b.v, &s);
        return f;
    }
};

inline FeasibleSpace build_space(int n, int v_lo, int v_hi, const DesignMask& mask) {
    if (v_lo < 1) v_lo = 1;
    if (v_hi > n) v_hi = n;
    if (v_lo > v_hi) throw Error(ErrorCode::domain, "empty normalized voltage range");
    FeasibleSpace space;
    space.n_cells = n;
    space.v_lo = v_lo;
    space.v_hi = v_hi;

    std::map<int, std::set<std::vector<std::uint8_t>>> per_v;
    for (auto& [v, cfg] : enumerate_cps(n, v_lo, v_hi))
        per_v[v].insert(ssv_from_config(cfg).bits);
    for (int v = v_lo; v <= v_hi; ++v) {
        for (const auto& cfg : enumerate_csp(n, v, 2))
            per_v[v].insert(ssv_from_config(cfg).bits);
        (void)per_v[v]; // materialize empty buckets too
    }

    for (int v = v_lo; v <= v_hi; ++v) {
        FeasibleSpace::Bucket b;
        b.v = v;
        for (const auto& bits : per_v[v]) {
            Ssv s;
            s.n_cells = n;
            s.bits = bits;
            if (mask_filter(s, mask)) b.ssvs.push_back(std::move(s));
        }
        space.buckets.push_back(std::move(b));
    }
    return space;
}

struct CountTable {
    int n_cells = 0;
    std::vector<std::size_t> per_v; // index 0 -> v=1
    std::size_t total = 0;
    double complete_size = 0; // 2^(5n-3)
    double ratio = 0;
};

inline CountTable count_space(int n) {
    if (n < 2 || n > 16)
        throw Error(ErrorCode::domain, "cell count for counting must be in 2..16");
    FeasibleSpace s = build_space(n, 1, n, DesignMask::all_ones(n));
    CountTable t;
    t.n_cells = n;
    for (const auto& b : s.buckets) t.per_v.push_back(b.ssvs.size());
    t.total = s.total();
    t.complete_size = std::ldexp(1.0, 5 * n - 3);
    t.ratio = static_cast<double>(t.total) / t.complete_size;
    return t;
}

} // namespace rbs
