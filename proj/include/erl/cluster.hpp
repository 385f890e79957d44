#pragma once

// Return-clustering statistics: visit-count distributions, the hat-alpha /
// alpha level hierarchy, cluster-size ratios lambda (direct and via the
// difference formula), and the extremal-index estimators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erl/automaton.hpp"
#include "erl/cylinder.hpp"
#include "erl/escape.hpp"
#include "erl/markov.hpp"

namespace erl {

// Distribution of N_K = #{1 <= j <= K : window at time j in U}. Counts above
// cap collapse into an absorbing class, so prob[c] is exact for c < cap and
// prob[cap] = P(N_K >= cap).
struct CountDistribution {
    int K = 0;
    int cap = 0;
    bool conditional = false;
    std::vector<double> prob;
};

inline CountDistribution count_distribution(const MarkovMeasure& mu, const CylinderUnion& U,
                                            int K, int cap, bool conditional,
                                            std::size_t budget = detail::kDefaultStateBudget) {
    if (K < 1) throw std::invalid_argument("count_distribution: K >= 1 required");
    if (cap < 0) throw std::invalid_argument("count_distribution: cap >= 0 required");
    detail::WindowAutomaton A = detail::build_window_automaton(mu, U, budget);
    const std::size_t S = A.state_count();
    const std::size_t classes = static_cast<std::size_t>(cap) + 1;
    std::vector<double> mass(S * classes, 0.0), next(S * classes);
    const std::vector<double>& start = conditional ? A.start_conditional : A.start_unconditional;
    for (std::size_t s = 0; s < S; ++s) mass[s * classes] = start[s];

    for (int t = 0; t < K; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = A.arc_begin[s]; a < A.arc_begin[s + 1]; ++a) {
                const auto& arc = A.arcs[a];
                const double* src = &mass[s * classes];
                double* dst = &next[static_cast<std::size_t>(arc.to) * classes];
                if (arc.enters) {
                    for (std::size_t c = 0; c < classes; ++c) {
                        std::size_t c2 = std::min(c + 1, classes - 1);
                        dst[c2] += arc.p * src[c];
                    }
                } else {
                    for (std::size_t c = 0; c < classes; ++c) dst[c] += arc.p * src[c];
                }
            }
        }
        mass.swap(next);
    }

    CountDistribution out;
    out.K = K;
    out.cap = cap;
    out.conditional = conditional;
    out.prob.assign(classes, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t c = 0; c < classes; ++c) out.prob[c] += mass[s * classes + c];
    return out;
}

// ---- Scalar cluster statistics ----

// hat_alpha_ell = mu_U(tau^(ell-1) <= K) = P_U(N_K >= ell-1); identically 1
// at ell = 1 by the tau^0 = 0 convention.
inline double hat_alpha(const MarkovMeasure& mu, const CylinderUnion& U, int ell, int K,
                        std::size_t budget = detail::kDefaultStateBudget) {
    if (ell < 1) throw std::invalid_argument("hat_alpha: ell >= 1 required");
    if (K < 1) throw std::invalid_argument("hat_alpha: K >= 1 required");
    if (ell == 1) return 1.0;
    CountDistribution d = count_distribution(mu, U, K, ell - 1, true, budget);
    return d.prob.back();
}

struct HatAlphaEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::string method = "exact";
    bool flagged = false;
};

// Monte Carlo route for hat_alpha: conditional rejection start, count entries.
inline HatAlphaEstimate hat_alpha_mc(const MarkovMeasure& mu, const CylinderUnion& U, int ell,
                                     int K, const McOptions& base) {
    if (ell < 1 || K < 1) throw std::invalid_argument("hat_alpha_mc: ell, K >= 1 required");
    HatAlphaEstimate est;
    est.method = "monte_carlo";
    est.flagged = true;
    if (ell == 1) {
        est.value = 1.0;
        est.flagged = false;
        est.method = "exact";
        return est;
    }
    SymbolicOpenSystem sys(mu, U);
    McOptions run = base;
    run.t_max = K;
    if (run.samples < 1) run.samples = 100000;
    std::size_t accepted = 0;
    std::size_t hits = 0;
    const std::size_t shards = std::max<std::size_t>(1, std::min(run.shards, run.samples));
    std::vector<std::size_t> shard_hits(shards, 0), shard_acc(shards, 0);
    std::vector<char> fail(shards, 0);
    detail::parallel_for_shards(shards, [&](std::size_t shard) {
        std::size_t count = run.samples / shards + (shard < run.samples % shards ? 1 : 0);
        SplitMix64 rng = SplitMix64::for_stream(run.seed, run.stream_base + shard);
        std::uint64_t attempts_left = static_cast<std::uint64_t>(count) * 2'000'000ull;
        for (std::size_t i = 0; i < count; ++i) {
            SymbolicOpenSystem::State x{};
            for (;;) {
                if (attempts_left == 0) {
                    fail[shard] = 1;
                    return;
                }
                --attempts_left;
                x = sys.initial(rng);
                if (sys.in_hole(x)) break;
            }
            ++shard_acc[shard];
            int entries = 0;
            for (int t = 1; t <= K && entries < ell - 1; ++t) {
                x = sys.step(x, rng);
                if (sys.in_hole(x)) ++entries;
            }
            if (entries >= ell - 1) ++shard_hits[shard];
        }
    });
    for (char f : fail)
        if (f)
            throw std::runtime_error(
                "hat_alpha_mc: conditional rejection acceptance below 1e-6; hole too small");
    for (std::size_t s = 0; s < shards; ++s) {
        hits += shard_hits[s];
        accepted += shard_acc[s];
    }
    const double N = static_cast<double>(accepted);
    est.value = static_cast<double>(hits) / N;
    est.stderr_value = std::sqrt(std::max(0.0, est.value * (1.0 - est.value) / N));
    return est;
}

// Exact DP with Monte Carlo fallback when the state budget is exceeded.
inline HatAlphaEstimate hat_alpha_estimate(const MarkovMeasure& mu, const CylinderUnion& U,
                                           int ell, int K,
                                           std::size_t budget = detail::kDefaultStateBudget,
                                           const McOptions& mc_fallback = {}) {
    try {
        HatAlphaEstimate est;
        est.value = hat_alpha(mu, U, ell, K, budget);
        return est;
    } catch (const std::runtime_error&) {
        return hat_alpha_mc(mu, U, ell, K, mc_fallback);
    }
}

// alpha_ell = mu_U(tau^(ell-1) <= K < tau^ell) = P_U(N_K = ell-1), computed
// as its own level-set DP (not as a hat_alpha difference).
inline double alpha_levels(const MarkovMeasure& mu, const CylinderUnion& U, int ell, int K,
                           std::size_t budget = detail::kDefaultStateBudget) {
    if (ell < 1) throw std::invalid_argument("alpha_levels: ell >= 1 required");
    CountDistribution d = count_distribution(mu, U, K, ell, true, budget);
    return d.prob[ell - 1];
}

// lambda_ell = P(N_K = ell) / P(N_K >= 1) under the stationary (not hole-
// conditioned) measure.
inline double lambda_direct(const MarkovMeasure& mu, const CylinderUnion& U, int ell, int K,
                            std::size_t budget = detail::kDefaultStateBudget) {
    if (ell < 1) throw std::invalid_argument("lambda_direct: ell >= 1 required");
    CountDistribution d = count_distribution(mu, U, K, ell + 1, false, budget);
    double denom = 1.0 - d.prob[0];
    if (denom <= 0.0) throw std::runtime_error("lambda_direct: P(N_K >= 1) vanishes");
    return d.prob[ell] / denom;
}

// ---- Profiles and the theorem route ----

struct EIProfile {
    int K = 0;
    int ell_max = 0;
    std::vector<double> hat_alpha_values; // index ell-1, ell = 1..L+2
    std::vector<double> alpha_values;     // index ell-1, ell = 1..L+1
    std::vector<double> lambda_values;    // index ell-1, ell = 1..L (direct route)
    double alpha_1 = 0.0;
    std::optional<double> theta;
    std::string theta_rule;
};

inline EIProfile compute_ei_profile(const MarkovMeasure& mu, const CylinderUnion& U, int K,
                                    int L = 8, std::size_t budget = detail::kDefaultStateBudget) {
    if (L < 1) throw std::invalid_argument("compute_ei_profile: L >= 1 required");
    EIProfile prof;
    prof.K = K;
    prof.ell_max = L;
    // One conditional pass with cap L+2 yields every exact class c <= L+1.
    CountDistribution cd = count_distribution(mu, U, K, L + 2, true, budget);
    prof.hat_alpha_values.resize(L + 2);
    for (int ell = 1; ell <= L + 2; ++ell) {
        double tail = 0.0;
        for (std::size_t c = static_cast<std::size_t>(ell - 1); c < cd.prob.size(); ++c)
            tail += cd.prob[c];
        prof.hat_alpha_values[ell - 1] = (ell == 1) ? 1.0 : tail;
    }
    prof.alpha_values.resize(L + 1);
    for (int ell = 1; ell <= L + 1; ++ell)
        prof.alpha_values[ell - 1] =
            prof.hat_alpha_values[ell - 1] - prof.hat_alpha_values[ell];
    prof.alpha_1 = prof.alpha_values[0];

    CountDistribution ud = count_distribution(mu, U, K, L + 1, false, budget);
    double denom = 1.0 - ud.prob[0];
    prof.lambda_values.resize(L);
    for (int ell = 1; ell <= L; ++ell)
        prof.lambda_values[ell - 1] = denom > 0.0 ? ud.prob[ell] / denom : 0.0;
    return prof;
}

struct LambdaTheoremResult {
    std::vector<double> lambda; // theorem route, ell = 1..L
    double residual = 0.0;      // max |theorem - direct| over the overlap
    double mean_cluster = 0.0;  // sum ell * lambda (truncated)
    double mean_identity_dev = 0.0; // |mean_cluster * alpha_1 - 1| before truncation tail
    double truncation_tail = 0.0;   // (L+1) * hat_alpha_{L+1}, tail-mass bound
    bool tail_small = false;        // truncation_tail < 1e-6
};

inline LambdaTheoremResult lambda_via_theorem(const EIProfile& prof) {
    if (!(prof.alpha_1 > 1e-9)) throw std::runtime_error("degenerate extremal index");
    LambdaTheoremResult res;
    const int L = prof.ell_max;
    res.lambda.resize(L);
    for (int ell = 1; ell <= L; ++ell) {
        double a = prof.alpha_values[ell - 1];
        double a_next = prof.alpha_values[ell];
        res.lambda[ell - 1] = (a - a_next) / prof.alpha_1;
    }
    for (int ell = 1; ell <= L; ++ell) {
        res.residual = std::max(res.residual,
                                std::abs(res.lambda[ell - 1] - prof.lambda_values[ell - 1]));
        res.mean_cluster += ell * res.lambda[ell - 1];
    }
    res.mean_identity_dev = std::abs(res.mean_cluster * prof.alpha_1 - 1.0);
    res.truncation_tail = (L + 1) * prof.hat_alpha_values[L];
    res.tail_small = res.truncation_tail < 1e-6;
    return res;
}

// ---- Extremal index estimators ----

struct Alpha1Result {
    struct PerK {
        int K = 0;
        std::vector<double> alpha1_by_n;
        double n_limit = 0.0;
    };
    std::vector<PerK> per_K;
    double value = 0.0;
    bool monotone_in_K_ok = true; // hat_alpha_2 nondecreasing in K per n
};

inline Alpha1Result extremal_index_alpha1(const MarkovMeasure& mu, const NeighborhoodSystem& ns,
                                          const std::vector<int>& K_schedule,
                                          std::size_t budget = detail::kDefaultStateBudget) {
    if (ns.entries.size() < 4)
        throw std::invalid_argument("extremal_index_alpha1: need at least 4 neighborhood levels");
    if (K_schedule.empty())
        throw std::invalid_argument("extremal_index_alpha1: empty K schedule");
    Alpha1Result res;
    std::vector<std::vector<double>> hat2(K_schedule.size()); // [K index][n index]
    for (std::size_t ki = 0; ki < K_schedule.size(); ++ki) {
        Alpha1Result::PerK row;
        row.K = K_schedule[ki];
        for (const auto& entry : ns.entries) {
            double h2 = hat_alpha(mu, entry.hole, 2, row.K, budget);
            hat2[ki].push_back(h2);
            row.alpha1_by_n.push_back(1.0 - h2);
        }
        row.n_limit = detail::aitken_limit(row.alpha1_by_n);
        res.per_K.push_back(std::move(row));
    }
    // Diagnostic: hat_alpha_2(n, K) must be nondecreasing in K for each n.
    for (std::size_t ni = 0; ni < ns.entries.size(); ++ni)
        for (std::size_t ki = 1; ki < K_schedule.size(); ++ki)
            if (hat2[ki][ni] < hat2[ki - 1][ni] - 1e-9) res.monotone_in_K_ok = false;
    std::vector<double> k_seq;
    for (const auto& row : res.per_K) k_seq.push_back(row.n_limit);
    res.value = detail::aitken_limit(k_seq);
    return res;
}

struct ThetaResult {
    std::vector<int> K_ns;
    std::vector<double> theta_by_n; // mu_{U_n}(tau > K_n)
    double value = 0.0;
};

inline ThetaResult extremal_index_theta(const MarkovMeasure& mu, const NeighborhoodSystem& ns,
                                        const std::vector<int>& K_ns,
                                        std::size_t budget = detail::kDefaultStateBudget) {
    if (K_ns.size() != ns.entries.size())
        throw std::invalid_argument("extremal_index_theta: one K_n per neighborhood level");
    ThetaResult res;
    res.K_ns = K_ns;
    for (std::size_t i = 0; i < ns.entries.size(); ++i) {
        const int kappa = ns.entries[i].kappa;
        if (!(static_cast<long long>(K_ns[i]) > static_cast<long long>(kappa) * kappa))
            throw std::invalid_argument("extremal_index_theta: K_n must exceed kappa_n^2");
        res.theta_by_n.push_back(1.0 - hat_alpha(mu, ns.entries[i].hole, 2, K_ns[i], budget));
    }
    res.value = detail::aitken_limit(res.theta_by_n);
    return res;
}

struct PeriodicThetaResult {
    int period = 0;
    std::vector<int> n_list;
    std::vector<double> ratio_by_n; // mu(U_n intersect T^-m U_n) / mu(U_n)
    double value = 0.0;
};

inline PeriodicThetaResult periodic_theta(const MarkovMeasure& mu, const Word& w,
                                          const std::vector<int>& n_list) {
    if (w.empty()) throw std::invalid_argument("periodic_theta: empty word");
    if (!mu.is_admissible(w))
        throw std::invalid_argument("periodic_theta: word not admissible");
    if (!mu.allowed(w.back(), w.front()))
        throw std::invalid_argument("periodic_theta: word does not wrap to a periodic orbit");
    const int m = static_cast<int>(w.size());
    // Primitivity: w must not be a repetition of a shorter word.
    for (int d = 1; d < m; ++d) {
        if (m % d != 0) continue;
        bool rep = true;
        for (int i = 0; i < m && rep; ++i) rep = (w[i] == w[i % d]);
        if (rep) throw std::invalid_argument("periodic_theta: word is not primitive");
    }
    if (n_list.empty()) throw std::invalid_argument("periodic_theta: empty n list");

    PeriodicThetaResult res;
    res.period = m;
    res.n_list = n_list;
    for (int n : n_list) {
        if (n < 1) throw std::invalid_argument("periodic_theta: n >= 1 required");
        Word prefix(n);
        for (int i = 0; i < n; ++i) prefix[i] = w[i % m];
        CylinderUnion U = make_cylinder_union(mu, n, {prefix});
        CylinderUnion inter = shifted_intersection(mu, U, m);
        res.ratio_by_n.push_back(measure_of(mu, inter) / measure_of(mu, U));
    }
    res.value = res.ratio_by_n.back();
    return res;
}

struct BetaHatResult {
    int ell = 0;
    std::vector<long long> s_schedule;
    std::vector<double> beta_by_n; // mu_{U_n}(tau^(ell-1) <= s_n)
    double value = 0.0;
    double hat_alpha_reference = 0.0; // fixed-K route at the deepest level
    double route_gap = 0.0;
};

inline BetaHatResult beta_hat(const MarkovMeasure& mu, const NeighborhoodSystem& ns,
                              const std::vector<long long>& s_schedule, int ell,
                              std::size_t budget = detail::kDefaultStateBudget) {
    if (s_schedule.size() != ns.entries.size())
        throw std::invalid_argument("beta_hat: one s_n per neighborhood level");
    if (ell < 1) throw std::invalid_argument("beta_hat: ell >= 1 required");
    double prev_prod = std::numeric_limits<double>::infinity();
    long long prev_s = 0;
    for (std::size_t i = 0; i < s_schedule.size(); ++i) {
        if (s_schedule[i] <= prev_s)
            throw std::invalid_argument("beta_hat: s_n must be strictly increasing");
        prev_s = s_schedule[i];
        double prod = static_cast<double>(s_schedule[i]) * measure_of(mu, ns.entries[i].hole);
        if (!(prod < prev_prod))
            throw std::invalid_argument("beta_hat: s_n * mu(U_n) must decrease");
        prev_prod = prod;
    }
    BetaHatResult res;
    res.ell = ell;
    res.s_schedule = s_schedule;
    for (std::size_t i = 0; i < ns.entries.size(); ++i)
        res.beta_by_n.push_back(
            hat_alpha(mu, ns.entries[i].hole, ell, static_cast<int>(s_schedule[i]), budget));
    res.value = detail::aitken_limit(res.beta_by_n);
    res.hat_alpha_reference =
        hat_alpha(mu, ns.entries.back().hole, ell, static_cast<int>(s_schedule.back()), budget);
    res.route_gap = std::abs(res.value - res.hat_alpha_reference);
    return res;
}

} // namespace erl
