#pragma once

// Discrete suspensions over a finite Markov base with symbol-constant integer
// roofs: flattened chain construction, hole lifting, the inducing-invariance
// check for localized rates, and a large-deviation probe for roof sums.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "erl/cylinder.hpp"
#include "erl/escape.hpp"
#include "erl/markov.hpp"
#include "erl/rng.hpp"

namespace erl {

struct Tower {
    MarkovMeasure base;
    std::vector<int> roof;
    MarkovMeasure flattened;
    std::vector<std::pair<int, int>> state_labels; // (base symbol a, floor k)
    double mean_roof = 0.0;                        // sum_a pi(a) R(a)
    double floor0_measure = 0.0;                   // stationary mass of floor 0
    double kac_dev = 0.0;                          // |floor0 - 1/mean_roof|
    double lift_formula_dev = 0.0; // max |pi~(a,k) - pi(a)/mean_roof|

    int state_index(int a, int k) const {
        for (std::size_t i = 0; i < state_labels.size(); ++i)
            if (state_labels[i].first == a && state_labels[i].second == k)
                return static_cast<int>(i);
        throw std::invalid_argument("Tower: no such state");
    }
};

inline Tower build_tower(const MarkovMeasure& base, const std::vector<int>& roof) {
    const int m = base.alphabet_size();
    if (static_cast<int>(roof.size()) != m)
        throw std::invalid_argument("build_tower: one roof value per base symbol");
    for (int r : roof)
        if (r < 1) throw std::invalid_argument("build_tower: roof values must be >= 1");

    std::vector<std::pair<int, int>> labels;
    for (int a = 0; a < m; ++a)
        for (int k = 0; k < roof[a]; ++k) labels.emplace_back(a, k);
    const int S = static_cast<int>(labels.size());
    std::vector<int> floor0_index(m, -1);
    for (int i = 0; i < S; ++i)
        if (labels[i].second == 0) floor0_index[labels[i].first] = i;

    // (a,k) -> (a,k+1) below the roof; the top floor fires the base move.
    std::vector<std::vector<double>> P(S, std::vector<double>(S, 0.0));
    for (int i = 0; i < S; ++i) {
        auto [a, k] = labels[i];
        if (k < roof[a] - 1) {
            P[i][i + 1] = 1.0;
        } else {
            for (int b = 0; b < m; ++b)
                if (base.allowed(a, b)) P[i][floor0_index[b]] = base.transition(a, b);
        }
    }

    Tower tower{base, roof, MarkovMeasure::from_transitions(P), std::move(labels)};
    for (int a = 0; a < m; ++a) tower.mean_roof += base.stationary(a) * roof[a];
    for (int i = 0; i < S; ++i) {
        auto [a, k] = tower.state_labels[i];
        double pi_flat = tower.flattened.stationary(i);
        if (k == 0) tower.floor0_measure += pi_flat;
        tower.lift_formula_dev = std::max(
            tower.lift_formula_dev, std::abs(pi_flat - base.stationary(a) / tower.mean_roof));
    }
    tower.kac_dev = std::abs(tower.floor0_measure - 1.0 / tower.mean_roof);
    if (tower.kac_dev > 1e-12)
        throw std::logic_error("build_tower: Kac cross-check failed");
    if (tower.lift_formula_dev > 1e-12)
        throw std::logic_error("build_tower: lift-formula cross-check failed");
    return tower;
}

struct LiftedHole {
    CylinderUnion hole;       // on the flattened chain
    double flattened_measure = 0.0;
    double base_measure = 0.0;
    double relation_dev = 0.0; // |mu~(U~) - mu(U) * mu(floor 0)|
};

// Base words lift through their floor signature: symbol a contributes floors
// (a,0)..(a,R(a)-1), the final symbol only its floor-0 state. Signatures of
// different lengths are refined to the common depth.
inline LiftedHole lift_hole(const Tower& tower, const CylinderUnion& base_hole) {
    std::vector<Word> signatures;
    std::size_t depth = 0;
    for (const Word& w : base_hole.words) {
        Word sig;
        for (std::size_t i = 0; i < w.size(); ++i) {
            int a = w[i];
            int top = (i + 1 < w.size()) ? tower.roof[a] : 1;
            for (int k = 0; k < top; ++k) sig.push_back(tower.state_index(a, k));
        }
        depth = std::max(depth, sig.size());
        signatures.push_back(std::move(sig));
    }
    std::vector<Word> flat_words;
    for (const Word& sig : signatures) {
        if (sig.size() == depth)
            flat_words.push_back(sig);
        else
            detail::extend_words(tower.flattened, sig, static_cast<int>(depth), flat_words);
    }
    LiftedHole out;
    out.hole = make_cylinder_union(tower.flattened, static_cast<int>(depth), flat_words);
    out.flattened_measure = measure_of(tower.flattened, out.hole);
    out.base_measure = measure_of(tower.base, base_hole);
    out.relation_dev =
        std::abs(out.flattened_measure - out.base_measure * tower.floor0_measure);
    if (out.relation_dev > 1e-12)
        throw std::logic_error("lift_hole: measure relation violated");
    return out;
}

struct InducingReport {
    LocalizedRateTable base_table;
    LocalizedRateTable tower_table;
    double base_limit = 0.0;
    double tower_limit = 0.0;
    double gap = 0.0;
    bool pass = false;
    std::string note;
};

inline InducingReport inducing_invariance_check(const Tower& tower,
                                                const NeighborhoodSystem& base_ns,
                                                const LocalizedOptions& opts = {}) {
    NeighborhoodSystem lifted;
    lifted.provenance = base_ns.provenance + " (lifted)";
    std::vector<std::pair<int, CylinderUnion>> lifted_holes;
    for (const auto& entry : base_ns.entries) {
        LiftedHole lh = lift_hole(tower, entry.hole);
        lifted_holes.emplace_back(lh.hole.depth, lh.hole);
    }
    std::vector<NeighborhoodSystem::Entry> entries;
    for (auto& [kappa, hole] : lifted_holes) entries.push_back({kappa, std::move(hole)});
    lifted.entries = std::move(entries);

    InducingReport rep;
    rep.base_table = localized_escape_rate(tower.base, base_ns, opts);
    rep.tower_table = localized_escape_rate(tower.flattened, lifted, opts);
    if (!rep.base_table.extrapolated_limit || !rep.tower_table.extrapolated_limit) {
        rep.note = "missing extrapolation on one side; comparison unavailable";
        return rep;
    }
    rep.base_limit = *rep.base_table.extrapolated_limit;
    rep.tower_limit = *rep.tower_table.extrapolated_limit;
    rep.gap = std::abs(rep.base_limit - rep.tower_limit);
    rep.pass = rep.gap <= 0.05;
    rep.note = "localized limits compared at tolerance 0.05";
    return rep;
}

struct LargeDeviationTable {
    struct Row {
        int k = 0;
        double estimate = 0.0;
        double stderr_value = 0.0;
    };
    double epsilon = 0.0;
    std::vector<Row> rows;
    double slope = 0.0; // log-linear fit over nonzero rows
    std::string note;
};

// Empirical P(|S_k R / k - mean| > eps) under the base measure, sampled in
// deterministic shards; slope of log-estimates should be negative for any
// finite roof with genuine fluctuation.
inline LargeDeviationTable large_deviation_probe(const Tower& tower, double epsilon,
                                                 const std::vector<int>& k_list, std::size_t N,
                                                 std::uint64_t seed) {
    if (N < 10000) throw std::invalid_argument("large_deviation_probe: N >= 10^4 required");
    if (k_list.empty()) throw std::invalid_argument("large_deviation_probe: empty k list");
    if (!(epsilon > 0.0)) throw std::invalid_argument("large_deviation_probe: epsilon > 0");
    for (int k : k_list)
        if (k < 1) throw std::invalid_argument("large_deviation_probe: k >= 1 required");
    if (!std::is_sorted(k_list.begin(), k_list.end()))
        throw std::invalid_argument("large_deviation_probe: k list must be increasing");

    const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(64, N));
    std::vector<std::vector<long long>> shard_hits(shards,
                                                   std::vector<long long>(k_list.size(), 0));
    detail::parallel_for_shards(shards, [&](std::size_t shard) {
        std::size_t count = N / shards + (shard < N % shards ? 1 : 0);
        PathSampler sampler(tower.base, seed, shard);
        for (std::size_t i = 0; i < count; ++i) {
            sampler.reset();
            long long sum = 0;
            int t = 0;
            for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
                while (t < k_list[ki]) {
                    sum += tower.roof[sampler.next_symbol()];
                    ++t;
                }
                double dev = std::abs(static_cast<double>(sum) / t - tower.mean_roof);
                if (dev > epsilon) ++shard_hits[shard][ki];
            }
        }
    });

    LargeDeviationTable table;
    table.epsilon = epsilon;
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
        long long hits = 0;
        for (const auto& sh : shard_hits) hits += sh[ki];
        LargeDeviationTable::Row row;
        row.k = k_list[ki];
        row.estimate = static_cast<double>(hits) / static_cast<double>(N);
        row.stderr_value =
            std::sqrt(std::max(0.0, row.estimate * (1.0 - row.estimate) / static_cast<double>(N)));
        table.rows.push_back(row);
    }

    std::vector<std::pair<double, double>> pts;
    for (const auto& row : table.rows)
        if (row.estimate > 0.0) pts.emplace_back(row.k, std::log(row.estimate));
    if (pts.size() < 2) {
        table.note = "fewer than two nonzero estimates; slope not fitted";
        return table;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    table.note = "log-linear fit over nonzero estimates";
    return table;
}

} // namespace erl
