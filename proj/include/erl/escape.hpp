#pragma once

// Survival curves, escape rates (exact spectral + Monte Carlo), conditional
// and localized rates, and numerical audits of the entry/return identity, the
// block inequality, and the difference-sequence rate equivalence.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "erl/automaton.hpp"
#include "erl/cylinder.hpp"
#include "erl/markov.hpp"
#include "erl/rng.hpp"

namespace erl {

struct SurvivalCurve {
    int horizon = 0;
    std::vector<double> values;       // P(tau > t), t = 0..horizon
    std::vector<double> stderrs;      // per-t binomial errors (monte_carlo only)
    std::vector<long long> survivors; // raw survivor counts (monte_carlo only)
    std::string method = "exact";     // exact | monte_carlo
    std::size_t sample_count = 0;
    bool conditional = false;
};

struct RateEstimate {
    double rate = 0.0;
    int fit_lo = 0;
    int fit_hi = 0;
    double max_residual = 0.0; // |spectral - slope| for exact; stderr for MC
    std::string method = "exact_spectral";
    bool flagged = false;

    bool is_infinite() const { return std::isinf(rate); }
};

struct LocalizedRateTable {
    struct Row {
        int n = 0;
        int kappa = 0;
        double mu = 0.0;
        double rho = 0.0;
        double ratio = 0.0;
        std::string method = "exact";
        bool flagged = false;
    };
    std::vector<Row> rows;
    std::optional<double> extrapolated_limit;
    double fit_residual = 0.0;
    std::string fit_note;
    bool coarse_bound_ok = true; // every ratio in [0, 1.05]
};

namespace detail {

// Least-squares affine fit ratio ~ a + b*mu over the rows with smallest mu
// (the ceil-half of them, at least 5 when available); returns the intercept.
struct AffineFit {
    double intercept = 0.0;
    double max_residual = 0.0;
    std::size_t rows_used = 0;
};

inline std::optional<AffineFit> affine_intercept(std::vector<std::pair<double, double>> pts) {
    if (pts.size() < 3) return std::nullopt;
    std::sort(pts.begin(), pts.end()); // ascending mu
    std::size_t keep = std::max<std::size_t>((pts.size() + 1) / 2, std::min<std::size_t>(5, pts.size()));
    pts.resize(keep);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double det = n * sxx - sx * sx;
    if (det <= 0.0) return std::nullopt;
    const double b = (n * sxy - sx * sy) / det;
    const double a = (sy - b * sx) / n;
    AffineFit fit;
    fit.intercept = a;
    fit.rows_used = pts.size();
    for (auto [x, y] : pts) fit.max_residual = std::max(fit.max_residual, std::abs(a + b * x - y));
    return fit;
}

// One Aitken delta-squared step on the tail of a geometrically converging
// sequence; falls back to the last value when the step is ill-conditioned.
inline double aitken_limit(const std::vector<double>& seq) {
    const std::size_t k = seq.size();
    if (k < 3) return seq.empty() ? 0.0 : seq.back();
    double x0 = seq[k - 3], x1 = seq[k - 2], x2 = seq[k - 1];
    double denom = (x2 - x1) - (x1 - x0);
    if (std::abs(denom) < 1e-14 * std::max({std::abs(x0), std::abs(x1), std::abs(x2), 1e-30}))
        return x2;
    return x2 - (x2 - x1) * (x2 - x1) / denom;
}

inline unsigned worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("ERL_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return static_cast<unsigned>(std::min<std::size_t>(hw, jobs));
}

// Run fn(shard) for shard = 0..shards-1 on a small pool. Shard outputs must
// be written to per-shard slots so the merge order never depends on timing.
inline void parallel_for_shards(std::size_t shards, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = worker_count(shards);
    if (workers <= 1) {
        for (std::size_t s = 0; s < shards; ++s) fn(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    std::size_t s = next.fetch_add(1);
                    if (s >= shards) break;
                    fn(s);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

// ---- Exact survival and rates ----

inline SurvivalCurve survival_exact(const MarkovMeasure& mu, const CylinderUnion& U, int T,
                                    bool conditional = false,
                                    std::size_t budget = detail::kDefaultStateBudget) {
    if (T < 0) throw std::invalid_argument("survival_exact: negative horizon");
    detail::WindowAutomaton A = detail::build_window_automaton(mu, U, budget);
    SurvivalCurve curve;
    curve.horizon = T;
    curve.method = "exact";
    curve.conditional = conditional;
    curve.values.resize(T + 1);
    std::vector<double> p = conditional ? A.start_conditional : A.start_unconditional;
    curve.values[0] = 1.0;
    std::vector<double> next;
    for (int t = 1; t <= T; ++t) {
        detail::survival_step(A, p, next);
        p.swap(next);
        double s = 0.0;
        for (double v : p) s += v;
        curve.values[t] = s;
    }
    return curve;
}

namespace detail {

inline RateEstimate rate_from_automaton(const WindowAutomaton& A, bool conditional) {
    const std::vector<double>& start = conditional ? A.start_conditional : A.start_unconditional;
    // Unconditional starts are positive on every admissible state, so the
    // reachable restriction below is the identity there; for conditional
    // starts it genuinely restricts, making the two rate routes independent.
    SpectralInfo info = spectral_info(A, start);
    RateEstimate est;
    est.method = conditional ? "exact_spectral_conditional" : "exact_spectral";
    if (info.radius <= 0.0) {
        est.rate = std::numeric_limits<double>::infinity();
        return est;
    }
    est.rate = -std::log(info.radius);
    double slope = tail_slope_rate(A, start, info.jordan_degree);
    est.fit_lo = 64;
    est.fit_hi = 4096;
    est.max_residual = std::isinf(slope) ? std::numeric_limits<double>::infinity()
                                         : std::abs(slope - est.rate);
    est.flagged = !(est.max_residual < 1e-8);
    return est;
}

} // namespace detail

inline RateEstimate escape_rate_exact(const MarkovMeasure& mu, const CylinderUnion& U,
                                      std::size_t budget = detail::kDefaultStateBudget) {
    detail::WindowAutomaton A = detail::build_window_automaton(mu, U, budget);
    return detail::rate_from_automaton(A, false);
}

inline RateEstimate conditional_escape_rate(const MarkovMeasure& mu, const CylinderUnion& U,
                                            std::size_t budget = detail::kDefaultStateBudget) {
    detail::WindowAutomaton A = detail::build_window_automaton(mu, U, budget);
    return detail::rate_from_automaton(A, true);
}

// ---- Monte Carlo survival ----

struct McOptions {
    int t_max = 0;
    std::size_t samples = 0;
    bool conditional = false;
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;
    std::size_t shards = 64;
};

// System concept:
//   using State = ...;
//   State initial(SplitMix64&) const;            // stationary draw
//   State step(const State&, SplitMix64&) const; // one time step
//   bool in_hole(const State&) const;
template <class System>
SurvivalCurve survival_mc(const System& sys, const McOptions& opt) {
    if (opt.samples < 1) throw std::invalid_argument("survival_mc: need at least one sample");
    if (opt.t_max < 1) throw std::invalid_argument("survival_mc: t_max must be >= 1");
    const std::size_t shards = std::max<std::size_t>(1, std::min(opt.shards, opt.samples));

    std::vector<std::vector<long long>> escaped_at(shards);
    std::vector<char> accept_failed(shards, 0);

    detail::parallel_for_shards(shards, [&](std::size_t shard) {
        std::size_t count = opt.samples / shards + (shard < opt.samples % shards ? 1 : 0);
        SplitMix64 rng = SplitMix64::for_stream(opt.seed, opt.stream_base + shard);
        std::vector<long long> local(opt.t_max + 2, 0);
        // Rejection-sampling quota for conditional starts; exhausting it
        // signals acceptance below ~1e-6.
        std::uint64_t attempts_left =
            opt.conditional ? static_cast<std::uint64_t>(count) * 2'000'000ull : 0;
        for (std::size_t i = 0; i < count; ++i) {
            typename System::State x{};
            if (opt.conditional) {
                for (;;) {
                    if (attempts_left == 0) {
                        accept_failed[shard] = 1;
                        return;
                    }
                    --attempts_left;
                    x = sys.initial(rng);
                    if (sys.in_hole(x)) break;
                }
            } else {
                x = sys.initial(rng);
            }
            int tau = opt.t_max + 1; // censored marker
            for (int t = 1; t <= opt.t_max; ++t) {
                x = sys.step(x, rng);
                if (sys.in_hole(x)) {
                    tau = t;
                    break;
                }
            }
            ++local[tau];
        }
        escaped_at[shard] = std::move(local);
    });

    for (char f : accept_failed)
        if (f)
            throw std::runtime_error(
                "survival_mc: conditional rejection acceptance below 1e-6; hole too small");

    // Deterministic merge: escape-time histogram summed over shard order.
    std::vector<long long> hist(opt.t_max + 2, 0);
    for (const auto& local : escaped_at)
        for (std::size_t t = 0; t < local.size(); ++t) hist[t] += local[t];

    SurvivalCurve curve;
    curve.horizon = opt.t_max;
    curve.method = "monte_carlo";
    curve.sample_count = opt.samples;
    curve.conditional = opt.conditional;
    curve.values.resize(opt.t_max + 1);
    curve.stderrs.resize(opt.t_max + 1);
    curve.survivors.resize(opt.t_max + 1);
    long long alive = static_cast<long long>(opt.samples);
    const double N = static_cast<double>(opt.samples);
    for (int t = 0; t <= opt.t_max; ++t) {
        if (t > 0) alive -= hist[t];
        curve.survivors[t] = alive;
        double v = static_cast<double>(alive) / N;
        curve.values[t] = v;
        curve.stderrs[t] = std::sqrt(std::max(0.0, v * (1.0 - v) / N));
    }
    return curve;
}

// Symbolic open system adapter: state is the packed current n-window.
class SymbolicOpenSystem {
public:
    struct State {
        std::uint64_t window = 0;
        int last = 0;
    };

    SymbolicOpenSystem(const MarkovMeasure& mu, const CylinderUnion& U) : mu_(&mu), depth_(U.depth) {
        const int m = mu.alphabet_size();
        suffix_mod_ = 1;
        for (int i = 0; i < depth_ - 1; ++i) suffix_mod_ *= static_cast<std::uint64_t>(m);
        hole_ids_.reserve(U.words.size());
        for (const Word& w : U.words) hole_ids_.push_back(detail::pack_word(w, m));
    }

    State initial(SplitMix64& rng) const {
        // Stationary draw of the first n-window.
        State s;
        int a = draw(mu_->stationary_vector(), rng);
        s.window = static_cast<std::uint64_t>(a);
        s.last = a;
        for (int i = 1; i < depth_; ++i) s = append(s, rng);
        return s;
    }

    State step(const State& s, SplitMix64& rng) const { return append(s, rng); }

    bool in_hole(const State& s) const {
        return std::binary_search(hole_ids_.begin(), hole_ids_.end(), s.window);
    }

private:
    State append(const State& s, SplitMix64& rng) const {
        const int m = mu_->alphabet_size();
        row_.resize(m);
        for (int b = 0; b < m; ++b) row_[b] = mu_->transition(s.last, b);
        int a = draw(row_, rng);
        State out;
        out.window = (s.window % suffix_mod_) * static_cast<std::uint64_t>(m) +
                     static_cast<std::uint64_t>(a);
        out.last = a;
        return out;
    }

    static int draw(const std::vector<double>& weights, SplitMix64& rng) {
        double u = rng.uniform();
        double acc = 0.0;
        const int m = static_cast<int>(weights.size());
        for (int b = 0; b < m; ++b) {
            acc += weights[b];
            if (u < acc) return b;
        }
        for (int b = m - 1; b >= 0; --b)
            if (weights[b] > 0.0) return b;
        return m - 1;
    }

    const MarkovMeasure* mu_;
    int depth_;
    std::uint64_t suffix_mod_ = 1;
    std::vector<std::uint64_t> hole_ids_;
    mutable std::vector<double> row_;
};

// Censored-geometric hazard fit on [t_lo, t_hi]: escapes over exposure, with
// the delta-method error on -log(1-p).
inline RateEstimate estimate_rate_mc(const SurvivalCurve& curve, int t_lo, int t_hi) {
    if (curve.method != "monte_carlo" || curve.survivors.empty())
        throw std::invalid_argument("estimate_rate_mc: needs a Monte Carlo curve");
    t_lo = std::max(0, t_lo);
    t_hi = std::min(t_hi, curve.horizon);
    if (t_hi <= t_lo) throw std::invalid_argument("estimate_rate_mc: empty fit window");
    long long escapes = curve.survivors[t_lo] - curve.survivors[t_hi];
    long long trials = 0;
    for (int t = t_lo; t < t_hi; ++t) trials += curve.survivors[t];
    RateEstimate est;
    est.method = "mc_hazard_mle";
    est.fit_lo = t_lo;
    est.fit_hi = t_hi;
    if (trials <= 0 || escapes <= 0) {
        est.rate = 0.0;
        est.flagged = true;
        return est;
    }
    double p = static_cast<double>(escapes) / static_cast<double>(trials);
    est.rate = -std::log1p(-p);
    double se_p = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    est.max_residual = se_p / (1.0 - p);
    return est;
}

// ---- Audits and derived quantities ----

struct EntryReturnAudit {
    int k_max = 0;
    double max_dev_scaling = 0.0;    // |mu_U(A_k) mu(U) - mu(B_k)|
    double max_dev_difference = 0.0; // |mu(B_k) - (mu(A_k) - mu(A_{k+1}))|
    bool pass = false;               // both below 1e-10
};

inline EntryReturnAudit entry_return_identity_audit(const MarkovMeasure& mu,
                                                    const CylinderUnion& U, int k_max,
                                                    std::size_t budget = detail::kDefaultStateBudget) {
    if (k_max < 1) throw std::invalid_argument("entry_return_identity_audit: k_max >= 1");
    detail::WindowAutomaton A = detail::build_window_automaton(mu, U, budget);
    const double muU = A.hole_measure;

    // Unconditional survival S(t), t <= k_max.
    std::vector<double> S(k_max + 1);
    std::vector<double> p = A.start_unconditional, next;
    S[0] = 1.0;
    for (int t = 1; t <= k_max; ++t) {
        detail::survival_step(A, p, next);
        p.swap(next);
        double s = 0.0;
        for (double v : p) s += v;
        S[t] = s;
    }

    // Conditional survival S_U(t) and the unnormalized B-mass run in one pass
    // (they differ by the exact factor mu(U) in the start vector).
    std::vector<double> SU(k_max, 0.0), B(k_max, 0.0);
    std::vector<double> q = A.start_conditional, qb(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) qb[i] = q[i] * muU;
    SU[0] = 1.0;
    B[0] = muU;
    std::vector<double> nb;
    for (int t = 1; t < k_max; ++t) {
        detail::survival_step(A, q, next);
        q.swap(next);
        detail::survival_step(A, qb, nb);
        qb.swap(nb);
        double s = 0.0, sb = 0.0;
        for (double v : q) s += v;
        for (double v : qb) sb += v;
        SU[t] = s;
        B[t] = sb;
    }

    EntryReturnAudit audit;
    audit.k_max = k_max;
    for (int k = 1; k <= k_max; ++k) {
        // A_k = {tau >= k} = {tau > k-1}; B_k = A_k intersect U at time 0.
        // B-mass runs the conditional automaton unnormalized, so the scaling
        // check is exact linearity and the difference check carries the
        // substance: conditional mass balances the unconditional decrement.
        double b_mass = B[k - 1];
        audit.max_dev_scaling =
            std::max(audit.max_dev_scaling, std::abs(SU[k - 1] * muU - b_mass));
        audit.max_dev_difference =
            std::max(audit.max_dev_difference, std::abs(b_mass - (S[k - 1] - S[k])));
    }
    audit.pass = audit.max_dev_scaling < 1e-10 && audit.max_dev_difference < 1e-10;
    return audit;
}

struct LocalizedOptions {
    std::size_t budget = detail::kDefaultStateBudget;
    bool allow_mc_fallback = false;
    McOptions mc; // used only on fallback
};

inline LocalizedRateTable localized_escape_rate(const MarkovMeasure& mu,
                                                const NeighborhoodSystem& ns,
                                                const LocalizedOptions& opts = {}) {
    LocalizedRateTable table;
    int n_index = 0;
    for (const auto& entry : ns.entries) {
        ++n_index;
        LocalizedRateTable::Row row;
        row.n = n_index;
        row.kappa = entry.kappa;
        row.mu = measure_of(mu, entry.hole);
        try {
            RateEstimate est = escape_rate_exact(mu, entry.hole, opts.budget);
            row.rho = est.rate;
            row.method = "exact";
            row.flagged = est.flagged;
        } catch (const std::runtime_error&) {
            if (!opts.allow_mc_fallback) throw;
            SymbolicOpenSystem sys(mu, entry.hole);
            McOptions mc = opts.mc;
            if (mc.t_max < 1) mc.t_max = static_cast<int>(std::min(20.0 / row.mu, 1e6));
            if (mc.samples < 1) mc.samples = 20000;
            SurvivalCurve curve = survival_mc(sys, mc);
            int t_lo = std::min(curve.horizon / 2, static_cast<int>(1.5 / row.mu));
            RateEstimate est = estimate_rate_mc(curve, t_lo, curve.horizon);
            row.rho = est.rate;
            row.method = "mc";
            row.flagged = true;
        }
        row.ratio = std::isinf(row.rho) ? std::numeric_limits<double>::infinity()
                                        : row.rho / row.mu;
        if (!(row.ratio >= 0.0 && row.ratio <= 1.05)) table.coarse_bound_ok = false;
        table.rows.push_back(row);
    }

    std::vector<std::pair<double, double>> pts;
    for (const auto& r : table.rows)
        if (!std::isinf(r.ratio)) pts.emplace_back(r.mu, r.ratio);
    if (auto fit = detail::affine_intercept(std::move(pts))) {
        table.extrapolated_limit = fit->intercept;
        table.fit_residual = fit->max_residual;
        table.fit_note = "affine in mu over the " + std::to_string(fit->rows_used) +
                         " smallest-mu rows";
    } else {
        table.fit_note = "fewer than 3 usable rows; no extrapolation";
    }
    return table;
}

struct ShortEntryRow {
    int n = 0;
    long long s_n = 0;
    double p_short = 0.0; // P(tau <= s_n)
    double ratio = 0.0;   // p_short / (s_n mu(U_n))
    bool truncated = false;
};

struct ShortEntryReport {
    std::vector<ShortEntryRow> rows;
    std::optional<double> limit_candidate;
    double a_used = 0.0;
};

inline ShortEntryReport short_entry_ratio(const MarkovMeasure& mu, const NeighborhoodSystem& ns,
                                          double a, long long horizon_budget = 20000,
                                          std::size_t budget = detail::kDefaultStateBudget) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("short_entry_ratio: a in (0,1)");
    ShortEntryReport rep;
    rep.a_used = a;
    int n_index = 0;
    for (const auto& entry : ns.entries) {
        ++n_index;
        ShortEntryRow row;
        row.n = n_index;
        double mu_n = measure_of(mu, entry.hole);
        row.s_n = static_cast<long long>(std::floor(std::pow(mu_n, -(1.0 - a))));
        if (row.s_n < 1)
            throw std::invalid_argument("short_entry_ratio: s_n < 1; choose smaller a");
        long long s_used = row.s_n;
        if (s_used > horizon_budget) {
            s_used = horizon_budget;
            row.truncated = true;
        }
        SurvivalCurve curve = survival_exact(mu, entry.hole, static_cast<int>(s_used), false, budget);
        row.p_short = 1.0 - curve.values.back();
        row.ratio = row.p_short / (static_cast<double>(s_used) * mu_n);
        rep.rows.push_back(row);
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        pts.emplace_back(measure_of(mu, ns.entries[i].hole), rep.rows[i].ratio);
    if (auto fit = detail::affine_intercept(std::move(pts))) rep.limit_candidate = fit->intercept;
    return rep;
}

struct BlockBoundRow {
    double k = 0.0;
    double lhs = 0.0; // P(tau > k s), exact
    double rhs = 0.0; // (P(tau > s) + delta^eta)^(k-2)
    bool holds = false;
};

struct BlockBoundReport {
    double s = 0.0;
    double delta_window = 0.0; // Delta
    double delta_value = 0.0;  // 2(Delta mu(U) + phi(Delta - kappa))
    double q = 0.0;
    double eta = 0.0;
    std::vector<BlockBoundRow> rows;
    int violations = 0;
};

inline BlockBoundReport block_bound_audit(const MarkovMeasure& mu, const CylinderUnion& U,
                                          int s, int Delta, const std::vector<double>& k_list,
                                          const std::function<double(int)>& phi_bound,
                                          std::size_t budget = detail::kDefaultStateBudget) {
    if (!(Delta >= 1 && Delta < s / 2.0))
        throw std::invalid_argument("block_bound_audit: need 1 <= Delta < s/2");
    BlockBoundReport rep;
    rep.s = s;
    rep.delta_window = Delta;
    const double q = std::floor(static_cast<double>(s) / Delta);
    rep.q = q;
    rep.eta = q / (q + 1.0);
    const double muU = measure_of(mu, U);
    rep.delta_value = 2.0 * (Delta * muU + phi_bound(Delta - U.depth));

    double k_max_val = 0.0;
    for (double k : k_list) {
        if (k < 3.0)
            throw std::invalid_argument("block_bound_audit: k must be >= 3");
        double kq = k * q;
        if (std::abs(kq - std::round(kq)) > 1e-9)
            throw std::invalid_argument("block_bound_audit: k must be an integer multiple of 1/q");
        double ks = k * s;
        if (std::abs(ks - std::round(ks)) > 1e-9)
            throw std::invalid_argument("block_bound_audit: k*s must be an integer horizon");
        k_max_val = std::max(k_max_val, k);
    }
    const int T = static_cast<int>(std::llround(k_max_val * s));
    SurvivalCurve curve = survival_exact(mu, U, T, false, budget);

    for (double k : k_list) {
        BlockBoundRow row;
        row.k = k;
        row.lhs = curve.values[static_cast<std::size_t>(std::llround(k * s))];
        row.rhs = std::pow(curve.values[s] + std::pow(rep.delta_value, rep.eta), k - 2.0);
        row.holds = row.lhs <= row.rhs * (1.0 + 1e-12);
        if (!row.holds) ++rep.violations;
        rep.rows.push_back(row);
    }
    return rep;
}

// Reference oracle: survival by exhaustive path enumeration, with no shared
// machinery with the automaton DP. Feasible only for small alphabets and
// short horizons; S(t) sums the measures of all surviving length-(n+t) words.
inline SurvivalCurve survival_by_enumeration(const MarkovMeasure& mu, const CylinderUnion& U,
                                             int T, bool conditional = false) {
    if (T < 0) throw std::invalid_argument("survival_by_enumeration: negative horizon");
    const int n = U.depth;
    const double muU = measure_of(mu, U);
    // Compensated accumulation: the leaf count grows like alphabet^T and a
    // naive sum loses ~1e-11 by T = 12, which this oracle cannot afford.
    std::vector<double> S(T + 1, 0.0);
    std::vector<double> comp(T + 1, 0.0);
    auto add = [&](int t, double x) {
        double& s = S[t];
        const double y = s + x;
        if (std::abs(s) >= std::abs(x))
            comp[t] += (s - y) + x;
        else
            comp[t] += (x - y) + s;
        s = y;
    };

    auto in_hole = [&](const Word& path, std::size_t offset) {
        Word window(path.begin() + offset, path.begin() + offset + n);
        return std::binary_search(U.words.begin(), U.words.end(), window);
    };

    // Iterative DFS over extensions of each admissible (or hole) start word.
    struct Frame {
        Word path;
        double p = 0.0;
        int t = 0;
    };
    std::vector<Frame> stack;
    if (conditional) {
        for (const Word& w : U.words) stack.push_back({w, word_measure(mu, w) / muU, 0});
    } else {
        std::vector<Word> starts;
        for (int a = 0; a < mu.alphabet_size(); ++a)
            detail::extend_words(mu, Word{a}, n, starts);
        for (const Word& w : starts) stack.push_back({w, word_measure(mu, w), 0});
    }
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        add(f.t, f.p);
        if (f.t == T) continue;
        for (int b : mu.successors(f.path.back())) {
            Frame g;
            g.path = f.path;
            g.path.push_back(b);
            g.p = f.p * mu.transition(f.path.back(), b);
            g.t = f.t + 1;
            if (!in_hole(g.path, g.path.size() - n)) stack.push_back(std::move(g));
        }
    }
    for (int t = 0; t <= T; ++t) S[static_cast<std::size_t>(t)] += comp[static_cast<std::size_t>(t)];
    SurvivalCurve curve;
    curve.horizon = T;
    curve.method = "enumeration";
    curve.conditional = conditional;
    curve.values = std::move(S);
    return curve;
}

struct DifferenceRateReport {
    double rate_a = 0.0;
    double rate_b = 0.0;
    bool b_monotone = false;
    bool agree = false;       // only meaningful when b_monotone
    bool agree_valid = false; // suppressed when hypothesis violated
    std::string note;
};

inline DifferenceRateReport rate_of_difference_sequence(const std::vector<double>& a_seq) {
    if (a_seq.size() < 20)
        throw std::invalid_argument("rate_of_difference_sequence: need at least 20 terms");
    for (std::size_t i = 0; i < a_seq.size(); ++i) {
        if (!(a_seq[i] > 0.0))
            throw std::invalid_argument("rate_of_difference_sequence: terms must be positive");
        if (i > 0 && !(a_seq[i] < a_seq[i - 1]))
            throw std::invalid_argument("rate_of_difference_sequence: sequence must strictly decrease");
    }
    std::vector<double> b(a_seq.size() - 1);
    for (std::size_t i = 0; i + 1 < a_seq.size(); ++i) b[i] = a_seq[i] - a_seq[i + 1];

    auto tail_slope = [](const std::vector<double>& seq) {
        const std::size_t lo = seq.size() / 2;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t cnt = 0;
        for (std::size_t i = lo; i < seq.size(); ++i) {
            double x = static_cast<double>(i + 1);
            double y = std::log(seq[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        double n = static_cast<double>(cnt);
        return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    DifferenceRateReport rep;
    rep.rate_a = tail_slope(a_seq);
    rep.rate_b = tail_slope(b);
    rep.b_monotone = true;
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] > b[i - 1] * (1.0 + 1e-12)) {
            rep.b_monotone = false;
            break;
        }
    if (rep.b_monotone) {
        rep.agree_valid = true;
        rep.agree = std::abs(rep.rate_a - rep.rate_b) < 0.01 * std::max(rep.rate_a, 1e-9);
        rep.note = "b monotone; rates comparable";
    } else {
        rep.note = "hypothesis violated: difference sequence not monotone";
    }
    return rep;
}

} // namespace erl
