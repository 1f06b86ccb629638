#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "rbs/enumerator.hpp"
#include "rbs/errors.hpp"
#include "rbs/simulator.hpp"

namespace rbs {

// Total unused SoC: the charge stranded above the weakest cell when that cell
// hits its lower limit. Zero iff all cells are equal.
inline double soc_imbalance(const Vec& socs) {
    if (socs.size() == 0)
        throw Error(ErrorCode::domain, "soc vector is empty");
    for (int i = 0; i < socs.size(); ++i)
        if (!std::isfinite(socs(i)))
            throw Error(ErrorCode::domain, "non-finite soc entry");
    return socs.sum() - static_cast<double>(socs.size()) * socs.minCoeff();
}

inline double soc_imbalance(const std::vector<double>& socs) {
    Eigen::Map<const Vec> v(socs.data(), static_cast<Eigen::Index>(socs.size()));
    return soc_imbalance(Vec(v));
}

struct GaParams {
    int population = 100;
    int generations = 220;
    double crossover_prob = 0.8;
    double mutation_prob = 0.1;
    std::uint64_t seed = 1;
    int elitism = 1;
    int threads = 0; // 0 = hardware concurrency
};

struct ControlProblem {
    std::vector<CellModel> cells;
    DesignMask mask;
    SwitchParams switches;
    int decision_steps = 20;
    double step_duration_s = 20.0;
    double dt_s = 0.1;
    LoadPoint load{LoadPoint::Kind::constant_power, 70.0};
    std::vector<double> initial_soc;
    double soc_min = 0.05;
    double soc_max = 1.0;
    double c_rate_max_A = 12.0;
    int v_norm_min = 1;
    int v_norm_max = 0; // 0 = cell count
    double penalty_weight = 10.0;
};

struct EvalResult {
    double fitness = std::numeric_limits<double>::infinity();
    double terminal_imbalance = std::numeric_limits<double>::infinity();
    double violation = 0.0;
    bool aborted = false;
    int abort_step = -1;
    std::string abort_reason;
    Vec final_soc;
};

// Simulates the decision-step sequence and scores it: terminal imbalance plus
// weighted constraint violations; infeasible simulations collapse to +inf.
inline EvalResult evaluate(const std::vector<Ssv>& ssv_sequence, const ControlProblem& pr) {
    EvalResult res;
    const int n = static_cast<int>(pr.cells.size());
    const int samples_per_step = static_cast<int>(std::round(pr.step_duration_s / pr.dt_s));
    double violation = 0.0;

    SimState st;
    try {
        st = initial_state(pr.cells, pr.initial_soc);
    } catch (const Error&) {
        res.aborted = true;
        res.abort_reason = "bad initial state";
        return res;
    }

    for (int k = 0; k < static_cast<int>(ssv_sequence.size()); ++k) {
        SwitchFactors factors;
        try {
            factors = make_switch_factors(ssv_sequence[static_cast<std::size_t>(k)], pr.switches);
        } catch (const Error& e) {
            res.aborted = true;
            res.abort_step = k;
            res.abort_reason = e.what();
            return res;
        }
        for (int s = 0; s < samples_per_step; ++s) {
            StepOutputs out;
            try {
                out = step(st, factors, pr.cells, pr.load, pr.dt_s, DiscretizeMethod::euler, s == 0);
            } catch (const Error& e) {
                res.aborted = true;
                res.abort_step = k;
                res.abort_reason = e.what();
                return res;
            }
            for (int i = 0; i < n; ++i) {
                double z = st.soc(i);
                if (z < pr.soc_min) violation += (pr.soc_min - z) * pr.dt_s;
                if (z > pr.soc_max) violation += (z - pr.soc_max) * pr.dt_s;
                double over = std::abs(out.i_b(i)) - pr.c_rate_max_A;
                if (over > 0.0) violation += (over / pr.c_rate_max_A) * pr.dt_s;
            }
        }
    }

    res.aborted = false;
    res.violation = violation;
    res.terminal_imbalance = soc_imbalance(st.soc);
    res.fitness = res.terminal_imbalance + pr.penalty_weight * violation;
    res.final_soc = st.soc;
    return res;
}

namespace detail {

template <typename Fn>
inline void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

struct GaResult {
    std::vector<int> best_genes;              // empty in complete-space mode
    std::vector<Ssv> best_ssvs;
    std::vector<double> history;              // per-generation best-ever fitness
    EvalResult best_eval;
    std::vector<std::pair<int, int>> best_configs; // (normalized voltage, index in bucket)
};

// A gene space provides sampling, mutation and decoding of one gene.
struct FeasibleGeneSpace {
    const FeasibleSpace* space = nullptr;
    std::vector<std::pair<int, const Ssv*>> flat;

    explicit FeasibleGeneSpace(const FeasibleSpace& s) : space(&s), flat(s.flat()) {
        if (flat.empty())
            throw Error(ErrorCode::domain,
                        "feasible search space is empty for the requested voltage range");
    }
    int sample(std::mt19937_64& rng) const {
        return static_cast<int>(rng() % flat.size());
    }
    const Ssv& decode(int g) const { return *flat[static_cast<std::size_t>(g)].second; }
    int voltage(int g) const { return flat[static_cast<std::size_t>(g)].first; }
};

inline GaResult ga_run(const ControlProblem& pr, const FeasibleSpace& space, const GaParams& gp) {
    if (gp.population < 2) throw Error(ErrorCode::domain, "population must be >= 2");
    FeasibleGeneSpace genes(space);
    const int K = pr.decision_steps;
    std::mt19937_64 rng(gp.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    using Chrom = std::vector<int>;
    std::vector<Chrom> pop(static_cast<std::size_t>(gp.population), Chrom(static_cast<std::size_t>(K)));
    for (auto& c : pop)
        for (auto& g : c) g = genes.sample(rng);

    std::vector<EvalResult> evals(pop.size());
    std::map<Chrom, EvalResult> cache;
    auto eval_all = [&](const std::vector<Chrom>& p, std::vector<EvalResult>& out) {
        out.resize(p.size());
        std::vector<int> missing;
        for (int i = 0; i < static_cast<int>(p.size()); ++i) {
            auto it = cache.find(p[static_cast<std::size_t>(i)]);
            if (it != cache.end())
                out[static_cast<std::size_t>(i)] = it->second;
            else
                missing.push_back(i);
        }
        detail::parallel_for(static_cast<int>(missing.size()), gp.threads, [&](int mi) {
            int i = missing[static_cast<std::size_t>(mi)];
            std::vector<Ssv> seq;
            seq.reserve(p[static_cast<std::size_t>(i)].size());
            for (int g : p[static_cast<std::size_t>(i)]) seq.push_back(genes.decode(g));
            out[static_cast<std::size_t>(i)] = evaluate(seq, pr);
        });
        for (int i : missing) cache.emplace(p[static_cast<std::size_t>(i)], out[static_cast<std::size_t>(i)]);
    };

    eval_all(pop, evals);

    auto better = [](const EvalResult& a, const EvalResult& b) { return a.fitness < b.fitness; };
    int best_idx = 0;
    for (int i = 1; i < static_cast<int>(pop.size()); ++i)
        if (better(evals[static_cast<std::size_t>(i)], evals[static_cast<std::size_t>(best_idx)])) best_idx = i;
    Chrom best = pop[static_cast<std::size_t>(best_idx)];
    EvalResult best_eval = evals[static_cast<std::size_t>(best_idx)];

    GaResult result;
    result.history.push_back(best_eval.fitness);

    auto tournament = [&]() -> int {
        int a = static_cast<int>(rng() % pop.size());
        int b = static_cast<int>(rng() % pop.size());
        return better(evals[static_cast<std::size_t>(a)], evals[static_cast<std::size_t>(b)]) ? a : b;
    };

    for (int gen = 1; gen < gp.generations; ++gen) {
        std::vector<Chrom> next;
        next.reserve(pop.size());
        for (int e = 0; e < gp.elitism && e < static_cast<int>(pop.size()); ++e)
            next.push_back(best);
        while (static_cast<int>(next.size()) < gp.population) {
            Chrom child_a = pop[static_cast<std::size_t>(tournament())];
            Chrom child_b = pop[static_cast<std::size_t>(tournament())];
            if (unit(rng) < gp.crossover_prob && K > 1) {
                int cut = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(K - 1));
                for (int i = cut; i < K; ++i)
                    std::swap(child_a[static_cast<std::size_t>(i)], child_b[static_cast<std::size_t>(i)]);
            }
            for (auto* c : {&child_a, &child_b})
                for (auto& g : *c)
                    if (unit(rng) < gp.mutation_prob) g = genes.sample(rng);
            next.push_back(std::move(child_a));
            if (static_cast<int>(next.size()) < gp.population) next.push_back(std::move(child_b));
        }
        pop = std::move(next);
        eval_all(pop, evals);
        for (int i = 0; i < static_cast<int>(pop.size()); ++i) {
            if (better(evals[static_cast<std::size_t>(i)], best_eval)) {
                best_eval = evals[static_cast<std::size_t>(i)];
                best = pop[static_cast<std::size_t>(i)];
            }
        }
        result.history.push_back(best_eval.fitness);
    }

    result.best_genes = best;
    result.best_eval = best_eval;
    for (int g : best) {
        result.best_ssvs.push_back(genes.decode(g));
        // locate bucket-relative index for reporting
        int v = genes.voltage(g);
        int idx = g;
        for (const auto& b : space.buckets) {
            if (b.v == v) break;
            idx -= static_cast<int>(b.ssvs.size());
        }
        result.best_configs.emplace_back(v, idx);
    }
    return result;
}

// Control experiment: genes drawn uniformly from the complete 2^(5n-3) space.
inline GaResult ga_run_complete(const ControlProblem& pr, const GaParams& gp) {
    const int n = static_cast<int>(pr.cells.size());
    const int K = pr.decision_steps;
    std::mt19937_64 rng(gp.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto random_ssv = [&]() {
        Ssv s = Ssv::zeros(n);
        for (auto& b : s.bits) b = static_cast<std::uint8_t>(rng() & 1u);
        return s;
    };

    using Chrom = std::vector<Ssv>;
    std::vector<Chrom> pop(static_cast<std::size_t>(gp.population));
    for (auto& c : pop) {
        c.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) c.push_back(random_ssv());
    }

    std::vector<EvalResult> evals(pop.size());
    auto eval_all = [&]() {
        detail::parallel_for(static_cast<int>(pop.size()), gp.threads, [&](int i) {
            evals[static_cast<std::size_t>(i)] = evaluate(pop[static_cast<std::size_t>(i)], pr);
        });
    };
    eval_all();

    auto better = [](const EvalResult& a, const EvalResult& b) { return a.fitness < b.fitness; };
    int best_idx = 0;
    for (int i = 1; i < static_cast<int>(pop.size()); ++i)
        if (better(evals[static_cast<std::size_t>(i)], evals[static_cast<std::size_t>(best_idx)])) best_idx = i;
    Chrom best = pop[static_cast<std::size_t>(best_idx)];
    EvalResult best_eval = evals[static_cast<std::size_t>(best_idx)];

    GaResult result;
    result.history.push_back(best_eval.fitness);

    auto tournament = [&]() -> int {
        int a = static_cast<int>(rng() % pop.size());
        int b = static_cast<int>(rng() % pop.size());
        return better(evals[static_cast<std::size_t>(a)], evals[static_cast<std::size_t>(b)]) ? a : b;
    };

    for (int gen = 1; gen < gp.generations; ++gen) {
        std::vector<Chrom> next;
        next.reserve(pop.size());
        for (int e = 0; e < gp.elitism && e < static_cast<int>(pop.size()); ++e) next.push_back(best);
        while (static_cast<int>(next.size()) < gp.population) {
            Chrom a = pop[static_cast<std::size_t>(tournament())];
            Chrom b = pop[static_cast<std::size_t>(tournament())];
            if (unit(rng) < gp.crossover_prob && K > 1) {
                int cut = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(K - 1));
                for (int i = cut; i < K; ++i) std::swap(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
            }
            for (auto* c : {&a, &b})
                for (auto& g : *c)
                    if (unit(rng) < gp.mutation_prob) g = random_ssv();
            next.push_back(std::move(a));
            if (static_cast<int>(next.size()) < gp.population) next.push_back(std::move(b));
        }
        pop = std::move(next);
        eval_all();
        for (int i = 0; i < static_cast<int>(pop.size()); ++i)
            if (better(evals[static_cast<std::size_t>(i)], best_eval)) {
                best_eval = evals[static_cast<std::size_t>(i)];
                best = pop[static_cast<std::size_t>(i)];
            }
        result.history.push_back(best_eval.fitness);
    }

    result.best_ssvs = best;
    result.best_eval = best_eval;
    return result;
}

} // namespace rbs
