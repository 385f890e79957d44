#pragma once

// Holes as canonical unions of equal-depth cylinders: refinement, outer
// approximations, shifted intersections, periods, nested neighborhood
// systems, and goodness diagnostics for shrinking families.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erl/markov.hpp"

namespace erl {

// Canonical: all words share length = depth, sorted lexicographically,
// duplicate-free, every word admissible. Equality is structural.
struct CylinderUnion {
    int depth = 0;
    std::vector<Word> words;

    bool operator==(const CylinderUnion& other) const {
        return depth == other.depth && words == other.words;
    }
    bool empty() const { return words.empty(); }
    std::size_t size() const { return words.size(); }
};

inline CylinderUnion make_cylinder_union(const MarkovMeasure& mu, int depth,
                                         std::vector<Word> words) {
    if (depth < 1) throw std::invalid_argument("cylinder union: depth must be >= 1");
    for (const Word& w : words) {
        if (static_cast<int>(w.size()) != depth)
            throw std::invalid_argument("cylinder union: word length != depth");
        if (!mu.is_admissible(w))
            throw std::invalid_argument("cylinder union: inadmissible word " + word_to_string(w));
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return CylinderUnion{depth, std::move(words)};
}

inline double measure_of(const MarkovMeasure& mu, const CylinderUnion& U) {
    double total = 0.0;
    for (const Word& w : U.words) total += mu.word_measure(w);
    return total;
}

namespace detail {

// Append all admissible continuations of w up to target length.
inline void extend_words(const MarkovMeasure& mu, const Word& w, int target,
                         std::vector<Word>& out) {
    if (static_cast<int>(w.size()) == target) {
        out.push_back(w);
        return;
    }
    Word cur = w;
    // Depth-first with explicit stack of successor positions.
    struct Level { const std::vector<int>* succ; std::size_t pos; };
    std::vector<Level> stack;
    stack.push_back({&mu.successors(cur.back()), 0});
    while (!stack.empty()) {
        Level& top = stack.back();
        if (top.pos < top.succ->size()) {
            int a = (*top.succ)[top.pos++];
            cur.push_back(a);
            if (static_cast<int>(cur.size()) == target) {
                out.push_back(cur);
                cur.pop_back();
            } else {
                stack.push_back({&mu.successors(a), 0});
            }
        } else {
            stack.pop_back();
            cur.pop_back();
        }
    }
}

} // namespace detail

// Express U at depth j >= U.depth; same underlying set.
inline CylinderUnion refine(const MarkovMeasure& mu, const CylinderUnion& U, int j) {
    if (j < U.depth)
        throw std::invalid_argument("refine: target depth below union depth");
    if (j == U.depth) return U;
    std::vector<Word> out;
    for (const Word& w : U.words) detail::extend_words(mu, w, j, out);
    return make_cylinder_union(mu, j, std::move(out));
}

// U^j: union of the depth-j cylinders meeting U, i.e. distinct length-j
// prefixes of U's words. Result contains U.
inline CylinderUnion outer_approximation(const MarkovMeasure& mu, const CylinderUnion& U, int j) {
    if (j < 1 || j > U.depth)
        throw std::invalid_argument("outer_approximation: need 1 <= j <= depth");
    std::vector<Word> out;
    out.reserve(U.words.size());
    for (const Word& w : U.words) out.emplace_back(w.begin(), w.begin() + j);
    return make_cylinder_union(mu, j, std::move(out));
}

// U cap T^{-k} U at depth n+k: words w with w[0..n) in U and w[k..k+n) in U,
// admissibility enforced. Possibly empty.
inline CylinderUnion shifted_intersection(const MarkovMeasure& mu, const CylinderUnion& U, int k) {
    if (k < 1) throw std::invalid_argument("shifted_intersection: k must be >= 1");
    const int n = U.depth;
    std::vector<Word> out;
    if (k >= n) {
        // Windows do not overlap; bridge each pair of U-words across the gap.
        for (const Word& w : U.words) {
            std::vector<Word> bridged;
            detail::extend_words(mu, w, k, bridged); // w plus (k-n) free symbols... (k >= n)
            for (const Word& head : bridged) {
                for (const Word& v : U.words) {
                    if (!mu.allowed(head.back(), v.front())) continue;
                    Word full = head;
                    full.insert(full.end(), v.begin(), v.end());
                    out.push_back(std::move(full));
                }
            }
        }
    } else {
        // Overlapping windows: suffix of w must equal prefix of v on n-k symbols.
        for (const Word& w : U.words) {
            for (const Word& v : U.words) {
                if (!std::equal(w.begin() + k, w.end(), v.begin())) continue;
                Word full = w;
                full.insert(full.end(), v.end() - k, v.end());
                out.push_back(std::move(full));
            }
        }
    }
    return make_cylinder_union(mu, n + k, std::move(out));
}

// Least k <= k_max with U cap T^{-k}U nonempty; nullopt marks "exceeds k_max".
inline std::optional<int> period(const MarkovMeasure& mu, const CylinderUnion& U, int k_max) {
    if (k_max < 1) throw std::invalid_argument("period: k_max must be >= 1");
    if (U.empty()) throw std::invalid_argument("period: empty union");
    for (int k = 1; k <= k_max; ++k)
        if (!shifted_intersection(mu, U, k).empty()) return k;
    return std::nullopt;
}

// Least k <= k_max with mu(U cap T^{-k}U) > 0. For full-support Markov
// measures this coincides with period (every admissible word has positive
// measure).
inline std::optional<int> essential_period(const MarkovMeasure& mu, const CylinderUnion& U,
                                           int k_max) {
    if (k_max < 1) throw std::invalid_argument("essential_period: k_max must be >= 1");
    if (U.empty()) throw std::invalid_argument("essential_period: empty union");
    for (int k = 1; k <= k_max; ++k)
        if (measure_of(mu, shifted_intersection(mu, U, k)) > 0.0) return k;
    return std::nullopt;
}

// Nested shrinking family U_1 superset U_2 superset ...; kappa_n = depths.
struct NeighborhoodSystem {
    struct Entry {
        int kappa = 0;
        CylinderUnion hole;
    };
    std::vector<Entry> entries;
    std::string provenance;
};

inline NeighborhoodSystem make_neighborhood_system(const MarkovMeasure& mu,
                                                   std::vector<CylinderUnion> holes,
                                                   std::string provenance) {
    if (holes.empty()) throw std::invalid_argument("neighborhood system: no entries");
    NeighborhoodSystem ns;
    ns.provenance = std::move(provenance);
    double prev_measure = 2.0;
    int prev_kappa = 0;
    for (std::size_t i = 0; i < holes.size(); ++i) {
        const CylinderUnion& U = holes[i];
        if (U.depth < prev_kappa)
            throw std::invalid_argument("neighborhood system: kappa_n must be nondecreasing");
        double m = measure_of(mu, U);
        if (m <= 0.0)
            throw std::invalid_argument("neighborhood system: measure not strictly positive");
        if (m >= prev_measure)
            throw std::invalid_argument("neighborhood system: measures must strictly decrease");
        if (i > 0) {
            // Nesting: prefixes of U_{n+1}'s words at depth kappa_n must be
            // words of U_n.
            const CylinderUnion& prev = holes[i - 1];
            CylinderUnion pref = outer_approximation(mu, U, prev.depth);
            for (const Word& w : pref.words)
                if (!std::binary_search(prev.words.begin(), prev.words.end(), w))
                    throw std::invalid_argument(
                        "neighborhood system: nesting violated at entry " + std::to_string(i));
        }
        prev_measure = m;
        prev_kappa = U.depth;
        ns.entries.push_back({U.depth, U});
    }
    return ns;
}

enum class CheckFlag { pass, fail, inconclusive };

inline const char* to_string(CheckFlag f) {
    switch (f) {
        case CheckFlag::pass: return "pass";
        case CheckFlag::fail: return "fail";
        default: return "inconclusive";
    }
}

// Diagnostics for the two shrinking-family conditions:
//   (1) kappa_n * mu(U_n)^epsilon -> 0,
//   (2) mu(U_n^j) <= mu(U_n) + C j^{-p'} for j < kappa_n.
// Both are asymptotic statements; the finite-data rules here (eventually
// decreasing + halving for (1); fitted C not visibly growing for (2)) are
// pragmatic proxies and are recorded openly in the report.
struct GoodnessReport {
    double epsilon_used = 0.0;
    double p_prime_used = 0.0;
    std::vector<double> trend; // kappa_n mu(U_n)^epsilon per entry
    struct Pair {
        int n = 0;
        int j = 0;
        double excess = 0.0;   // mu(U_n^j) - mu(U_n)
        double c_value = 0.0;  // excess * j^{p'}
    };
    std::vector<Pair> pairs;
    std::vector<double> per_n_c; // max_j c_value per entry
    double fitted_C = 0.0;
    double fitted_p_prime = 0.0;
    CheckFlag passes_condition_1 = CheckFlag::inconclusive;
    CheckFlag passes_condition_2 = CheckFlag::inconclusive;
};

inline GoodnessReport goodness_check(const NeighborhoodSystem& ns, const MarkovMeasure& mu,
                                     double epsilon, double p_prime) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("goodness_check: epsilon must lie in (0,1)");
    if (!(p_prime > 1.0)) throw std::invalid_argument("goodness_check: p_prime must exceed 1");

    GoodnessReport rep;
    rep.epsilon_used = epsilon;
    rep.fitted_p_prime = rep.p_prime_used = p_prime;

    const std::size_t L = ns.entries.size();
    for (const auto& e : ns.entries)
        rep.trend.push_back(e.kappa * std::pow(measure_of(mu, e.hole), epsilon));

    for (const auto& e : ns.entries) {
        double mu_n = measure_of(mu, e.hole);
        double worst = 0.0;
        for (int j = 1; j < e.kappa; ++j) {
            double excess = measure_of(mu, outer_approximation(mu, e.hole, j)) - mu_n;
            double c = excess * std::pow(static_cast<double>(j), p_prime);
            rep.pairs.push_back({e.kappa, j, excess, c});
            worst = std::max(worst, c);
        }
        rep.per_n_c.push_back(worst);
        rep.fitted_C = std::max(rep.fitted_C, worst);
    }

    if (L < 4) {
        rep.passes_condition_1 = CheckFlag::inconclusive;
        rep.passes_condition_2 = CheckFlag::inconclusive;
        return rep;
    }

    // Condition 1: trailing strictly-decreasing run of length >= 3 steps and
    // final < first / 2.
    std::size_t run = 0;
    for (std::size_t i = L - 1; i >= 1; --i) {
        if (rep.trend[i] < rep.trend[i - 1]) ++run;
        else break;
        if (i == 1) break;
    }
    bool eventually_decreasing = run >= std::min<std::size_t>(3, L - 1);
    bool halved = rep.trend.back() < rep.trend.front() / 2.0;
    rep.passes_condition_1 =
        (eventually_decreasing && halved) ? CheckFlag::pass : CheckFlag::fail;

    // Condition 2: the fit only fails if C visibly grows with n (last value
    // exceeding 1.5x the max over the first half).
    double first_half_max = 0.0;
    for (std::size_t i = 0; i < L / 2; ++i)
        first_half_max = std::max(first_half_max, rep.per_n_c[i]);
    bool diverging = first_half_max > 0.0 ? rep.per_n_c.back() > 1.5 * first_half_max
                                          : rep.per_n_c.back() > 0.0;
    rep.passes_condition_2 = diverging ? CheckFlag::fail : CheckFlag::pass;
    return rep;
}

inline nlohmann::json to_json(const CylinderUnion& U) {
    std::vector<std::string> words;
    words.reserve(U.words.size());
    for (const Word& w : U.words) words.push_back(word_to_string(w));
    return nlohmann::json{{"depth", U.depth}, {"words", words}};
}

inline CylinderUnion cylinder_union_from_json(const MarkovMeasure& mu, const nlohmann::json& doc) {
    if (!doc.contains("depth") || !doc.contains("words"))
        throw std::invalid_argument("cylinder union JSON needs depth and words");
    int depth = doc.at("depth").get<int>();
    std::vector<Word> words;
    for (const auto& s : doc.at("words")) words.push_back(word_from_string(s.get<std::string>()));
    return make_cylinder_union(mu, depth, std::move(words));
}

} // namespace erl
