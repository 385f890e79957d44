#pragma once

// Named experiment bundles behind the CLI: each scenario runs a fixed study
// on library primitives, emits a results table (CSV), a summary with named
// pass/fail checks (JSON), and a manifest echoing the fully resolved config.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "erl/cluster.hpp"
#include "erl/cylinder.hpp"
#include "erl/escape.hpp"
#include "erl/geometry.hpp"
#include "erl/io.hpp"
#include "erl/markov.hpp"
#include "erl/tower.hpp"

namespace erl {

constexpr std::uint64_t kDefaultScenarioSeed = 20260814ull;

struct ScenarioCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ScenarioResult {
    std::string scenario;
    std::string csv;
    nlohmann::ordered_json summary;
    nlohmann::ordered_json manifest;
    std::vector<ScenarioCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct ScenarioInfo {
    std::string name;
    std::string description;
};

inline const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> catalog = {
        {"cantor",
         "Middle-thirds covers on the tripling shift: localized escape rates, exact "
         "second-level cluster coefficients, short-entry ratios, goodness diagnostics."},
        {"dichotomy",
         "Doubling shift, periodic vs non-periodic targets: extremal indices, cutoff "
         "index, and localized rates for the zero block and an irrational expansion."},
        {"cluster",
         "Cluster-size statistics at fixed holes: direct spectrum vs identity-route "
         "lambda values and the mean cluster identity."},
        {"tower",
         "Suspension towers over doubling and golden-mean bases: Kac checks, lifted "
         "holes, inducing invariance of localized rates, large-deviation probe."},
        {"catmap",
         "Hyperbolic torus automorphism with tube targets: pathwise exceedance "
         "identity and Monte Carlo normalized escape rates for segments."},
        {"audit",
         "Exactness audits: two-route escape rates, entry-return identities, block "
         "inequalities on a parameter grid, enumeration-oracle equivalence."},
        {"custom",
         "User-supplied finite-state system and hole from a JSON config: survival "
         "curves, escape rates, and the cluster profile."},
    };
    return catalog;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& cfg,
                                std::initializer_list<const char*> allowed,
                                const std::string& scenario) {
    if (cfg.is_null()) return;
    if (!cfg.is_object()) throw std::invalid_argument(scenario + ": config must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument(scenario + ": unknown config field '" + it.key() + "'");
    }
}

template <class T>
T cfg_get(const nlohmann::json& cfg, const char* key, T fallback) {
    if (cfg.is_null() || !cfg.contains(key)) return fallback;
    return cfg.at(key).get<T>();
}

inline std::uint64_t cfg_seed(const nlohmann::json& cfg) {
    return cfg_get<std::uint64_t>(cfg, "seed", kDefaultScenarioSeed);
}

inline nlohmann::ordered_json checks_to_json(const std::vector<ScenarioCheck>& checks) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json one;
        one["name"] = c.name;
        one["pass"] = c.pass;
        one["value"] = c.value;
        one["target"] = c.target;
        one["tolerance"] = c.tolerance;
        one["detail"] = c.detail;
        arr.push_back(std::move(one));
    }
    return arr;
}

inline nlohmann::ordered_json make_manifest(const std::string& scenario,
                                            nlohmann::ordered_json resolved) {
    nlohmann::ordered_json m;
    m["artifact_version"] = "1.0";
    m["scenario"] = scenario;
    m["config"] = std::move(resolved);
    return m;
}

inline void finish_summary(ScenarioResult& result) {
    result.summary["checks"] = checks_to_json(result.checks);
    result.summary["all_checks_pass"] = result.all_pass();
}

inline std::string fmt(double v) { return io::format_double(v); }

} // namespace detail

// ---- Family builders ----

// Singleton-cylinder family: U_n = [symbols_1 .. symbols_n] for n_lo <= n <= n_hi.
inline NeighborhoodSystem prefix_family(const MarkovMeasure& mu, const std::vector<int>& symbols,
                                        int n_lo, int n_hi, std::string provenance) {
    if (n_lo < 1 || n_hi < n_lo) throw std::invalid_argument("prefix_family: bad depth range");
    if (static_cast<int>(symbols.size()) < n_hi)
        throw std::invalid_argument("prefix_family: symbol sequence shorter than n_hi");
    std::vector<CylinderUnion> levels;
    for (int n = n_lo; n <= n_hi; ++n) {
        Word w(symbols.begin(), symbols.begin() + n);
        levels.push_back(make_cylinder_union(mu, n, {w}));
    }
    return make_neighborhood_system(mu, std::move(levels), std::move(provenance));
}

inline NeighborhoodSystem periodic_prefix_family(const MarkovMeasure& mu, const Word& w, int n_lo,
                                                 int n_hi, std::string provenance) {
    if (w.empty()) throw std::invalid_argument("periodic_prefix_family: empty word");
    std::vector<int> symbols;
    symbols.reserve(static_cast<std::size_t>(n_hi));
    for (int i = 0; i < n_hi; ++i) symbols.push_back(w[static_cast<std::size_t>(i) % w.size()]);
    return prefix_family(mu, symbols, n_lo, n_hi, std::move(provenance));
}

// Binary digits of sqrt(2)-1, the canonical non-periodic target address.
inline std::vector<int> irrational_binary_digits(int count) {
    if (count < 1 || count > 48)
        throw std::invalid_argument("irrational_binary_digits: count in 1..48");
    std::vector<int> digits;
    digits.reserve(static_cast<std::size_t>(count));
    double x = std::sqrt(2.0) - 1.0;
    for (int i = 0; i < count; ++i) {
        x *= 2.0;
        const int d = x >= 1.0 ? 1 : 0;
        x -= d;
        digits.push_back(d);
    }
    return digits;
}

// ---- cantor ----

inline ScenarioResult run_cantor(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(cfg, {"n_max", "K_list", "a_short", "epsilon", "p_prime", "seed"},
                                "cantor");
    const int n_max = detail::cfg_get<int>(cfg, "n_max", 10);
    const std::vector<int> K_list =
        detail::cfg_get<std::vector<int>>(cfg, "K_list", {1, 5, 20});
    const double a_short = detail::cfg_get<double>(cfg, "a_short", 0.2);
    const double epsilon = detail::cfg_get<double>(cfg, "epsilon", 0.5);
    const double p_prime = detail::cfg_get<double>(cfg, "p_prime", 2.0);
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (n_max < 4 || n_max > 13) throw std::invalid_argument("cantor: n_max in 4..13");
    if (K_list.empty()) throw std::invalid_argument("cantor: K_list must be nonempty");
    for (int K : K_list)
        if (K < 1) throw std::invalid_argument("cantor: K values must be >= 1");

    const MarkovMeasure mu = MarkovMeasure::uniform(3);
    const NeighborhoodSystem full = cantor_neighborhoods(n_max);
    NeighborhoodSystem ns;
    ns.provenance = full.provenance;
    ns.entries.assign(full.entries.begin() + 1, full.entries.end()); // depths 2..n_max

    const LocalizedRateTable table = localized_escape_rate(mu, ns);
    const ShortEntryReport short_rep = short_entry_ratio(mu, ns, a_short);
    const GoodnessReport goodness = goodness_check(full, mu, epsilon, p_prime);

    // Second-level coefficients over the (n, K) grid; the value is exactly 2/3
    // whenever the window does not outrun the depth (K <= n).
    std::vector<std::vector<double>> hat2(ns.entries.size());
    double max_err_within = 0.0;
    double max_excess_beyond = 0.0;
    for (std::size_t i = 0; i < ns.entries.size(); ++i) {
        for (int K : K_list) {
            const double v = hat_alpha(mu, ns.entries[i].hole, 2, K);
            hat2[i].push_back(v);
            if (K <= ns.entries[i].kappa)
                max_err_within = std::max(max_err_within, std::abs(v - 2.0 / 3.0));
            else
                max_excess_beyond = std::max(max_excess_beyond, v - 2.0 / 3.0);
        }
    }

    // Cluster-count route to the same limit, on its own validity range.
    std::optional<BetaHatResult> beta;
    if (n_max >= 8) {
        NeighborhoodSystem beta_ns;
        beta_ns.provenance = ns.provenance;
        std::vector<long long> s_schedule;
        for (const auto& entry : full.entries)
            if (entry.kappa >= 5) {
                beta_ns.entries.push_back(entry);
                s_schedule.push_back(static_cast<long long>(entry.kappa) * entry.kappa);
            }
        beta = beta_hat(mu, beta_ns, s_schedule, 2);
    }

    ScenarioResult result;
    result.scenario = "cantor";

    std::vector<std::string> columns = {"n",       "mu",         "rho",    "ratio",
                                        "method",  "flagged",    "s_short", "short_ratio"};
    for (int K : K_list) columns.push_back("hat_alpha2_K" + std::to_string(K));
    io::CsvWriter csv(columns);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        std::vector<std::string> cells = {
            std::to_string(row.kappa),          detail::fmt(row.mu),
            detail::fmt(row.rho),               detail::fmt(row.ratio),
            row.method,                         row.flagged ? "1" : "0",
            std::to_string(short_rep.rows[i].s_n), detail::fmt(short_rep.rows[i].ratio)};
        for (double v : hat2[i]) cells.push_back(detail::fmt(v));
        csv.add_row(cells);
    }
    result.csv = csv.to_string();

    const double loc_limit = table.extrapolated_limit.value_or(
        std::numeric_limits<double>::quiet_NaN());

    ScenarioCheck c1{"localized_limit", false, loc_limit, 1.0 / 3.0, 0.02,
                     "extrapolated localized rate vs 1/3"};
    c1.pass = table.extrapolated_limit && std::abs(loc_limit - 1.0 / 3.0) <= 0.02;
    result.checks.push_back(c1);

    int inexact_rows = 0;
    for (const auto& row : table.rows)
        if (row.method != "exact" || row.flagged) ++inexact_rows;
    result.checks.push_back({"localized_table_exact", inexact_rows == 0,
                             static_cast<double>(inexact_rows), 0.0, 0.0,
                             "rows not produced by the exact spectral route"});

    result.checks.push_back({"hat_alpha2_exact_within_depth", max_err_within < 1e-10,
                             max_err_within, 0.0, 1e-10,
                             "max |hat_alpha_2 - 2/3| over pairs with K <= n"});

    double short_limit = short_rep.limit_candidate.value_or(
        std::numeric_limits<double>::quiet_NaN());
    ScenarioCheck c4{"short_entry_gap", false, std::abs(short_limit - loc_limit), 0.0, 0.05,
                     "short-entry limit candidate vs localized limit"};
    c4.pass = short_rep.limit_candidate && table.extrapolated_limit &&
              std::abs(short_limit - loc_limit) <= 0.05;
    result.checks.push_back(c4);

    result.checks.push_back({"coarse_bound", table.coarse_bound_ok,
                             table.coarse_bound_ok ? 1.0 : 0.0, 1.0, 0.0,
                             "every localized ratio lies in [0, 1.05]"});

    nlohmann::ordered_json s;
    s["scenario"] = "cantor";
    s["seed"] = seed;
    s["localized_limit"] = loc_limit;
    s["localized_fit_residual"] = table.fit_residual;
    s["localized_fit_note"] = table.fit_note;
    s["short_entry_limit_candidate"] = short_limit;
    s["hat_alpha2"] = {{"max_err_window_within_depth", max_err_within},
                       {"max_excess_window_beyond_depth", max_excess_beyond}};
    s["goodness"] = {{"condition_1", to_string(goodness.passes_condition_1)},
                     {"condition_2", to_string(goodness.passes_condition_2)},
                     {"fitted_C", goodness.fitted_C},
                     {"fitted_p_prime", goodness.fitted_p_prime}};
    if (beta) {
        s["beta_hat"] = {{"value", beta->value},
                         {"fixed_window_reference", beta->hat_alpha_reference},
                         {"route_gap", beta->route_gap}};
    }
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["n_max"] = n_max;
    resolved["K_list"] = K_list;
    resolved["a_short"] = a_short;
    resolved["epsilon"] = epsilon;
    resolved["p_prime"] = p_prime;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("cantor", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- dichotomy ----

inline ScenarioResult run_dichotomy(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(
        cfg, {"n_max", "np_lo", "np_hi", "K_schedule", "a_short", "seed"}, "dichotomy");
    const int n_max = detail::cfg_get<int>(cfg, "n_max", 12);
    const int np_lo = detail::cfg_get<int>(cfg, "np_lo", 8);
    const int np_hi = detail::cfg_get<int>(cfg, "np_hi", 16);
    const std::vector<int> K_schedule =
        detail::cfg_get<std::vector<int>>(cfg, "K_schedule", {5, 10, 20, 40});
    const double a_short = detail::cfg_get<double>(cfg, "a_short", 0.2);
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (n_max < 6 || n_max > 18) throw std::invalid_argument("dichotomy: n_max in 6..18");
    if (np_lo < 4 || np_hi > 20 || np_hi < np_lo + 3)
        throw std::invalid_argument("dichotomy: need 4 <= np_lo, np_hi <= 20, span >= 4");
    if (K_schedule.size() < 2) throw std::invalid_argument("dichotomy: K_schedule needs >= 2 windows");

    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.5, 0.5});
    const NeighborhoodSystem ns_p =
        periodic_prefix_family(mu, {0}, 2, n_max, "zero block family");
    const NeighborhoodSystem ns_np =
        prefix_family(mu, irrational_binary_digits(np_hi), np_lo, np_hi,
                      "irrational expansion family");

    std::vector<int> periodic_ns_list;
    for (int n = 2; n <= n_max; ++n) periodic_ns_list.push_back(n);
    const PeriodicThetaResult pt = periodic_theta(mu, {0}, periodic_ns_list);
    const double alpha_target = 1.0 - pt.value;

    const Alpha1Result a1 = extremal_index_alpha1(mu, ns_p, K_schedule);
    auto cutoffs = [](const NeighborhoodSystem& ns) {
        std::vector<int> K_ns;
        for (const auto& e : ns.entries) K_ns.push_back(e.kappa * e.kappa + 1);
        return K_ns;
    };
    const ThetaResult th_p = extremal_index_theta(mu, ns_p, cutoffs(ns_p));
    const ThetaResult th_np = extremal_index_theta(mu, ns_np, cutoffs(ns_np));

    const LocalizedRateTable loc_p = localized_escape_rate(mu, ns_p);
    const LocalizedRateTable loc_np = localized_escape_rate(mu, ns_np);
    const ShortEntryReport short_p = short_entry_ratio(mu, ns_p, a_short);
    const ShortEntryReport short_np = short_entry_ratio(mu, ns_np, a_short);

    ScenarioResult result;
    result.scenario = "dichotomy";

    io::CsvWriter csv({"family", "n", "mu", "rho", "ratio", "method", "flagged", "theta_n",
                       "s_short", "short_ratio"});
    auto emit_family = [&](const std::string& family, const LocalizedRateTable& table,
                           const ThetaResult& th, const ShortEntryReport& sh) {
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const auto& row = table.rows[i];
            csv.add_row({family, std::to_string(row.kappa), detail::fmt(row.mu),
                         detail::fmt(row.rho), detail::fmt(row.ratio), row.method,
                         row.flagged ? "1" : "0", detail::fmt(th.theta_by_n[i]),
                         std::to_string(sh.rows[i].s_n), detail::fmt(sh.rows[i].ratio)});
        }
    };
    emit_family("periodic", loc_p, th_p, short_p);
    emit_family("nonperiodic", loc_np, th_np, short_np);
    result.csv = csv.to_string();

    const double loc_p_limit = loc_p.extrapolated_limit.value_or(
        std::numeric_limits<double>::quiet_NaN());
    const double loc_np_limit = loc_np.extrapolated_limit.value_or(
        std::numeric_limits<double>::quiet_NaN());
    const double short_p_limit = short_p.limit_candidate.value_or(
        std::numeric_limits<double>::quiet_NaN());

    result.checks.push_back({"periodic_ratio_exact", std::abs(pt.value - 0.5) < 1e-10,
                             pt.value, 0.5, 1e-10,
                             "shifted self-intersection ratio of the zero block"});
    result.checks.push_back({"alpha1_periodic", std::abs(a1.value - alpha_target) <= 0.02,
                             a1.value, alpha_target, 0.02,
                             "extremal index vs 1 - periodic ratio"});
    result.checks.push_back({"theta_periodic", std::abs(th_p.value - alpha_target) <= 0.02,
                             th_p.value, alpha_target, 0.02,
                             "cutoff index with K_n = n^2 + 1"});
    ScenarioCheck c_loc_p{"localized_periodic", false, loc_p_limit, 0.5, 0.03,
                          "localized limit for the zero block family"};
    c_loc_p.pass = loc_p.extrapolated_limit && std::abs(loc_p_limit - 0.5) <= 0.03;
    result.checks.push_back(c_loc_p);
    ScenarioCheck c_loc_np{"localized_nonperiodic", false, loc_np_limit, 1.0, 0.05,
                           "localized limit for the irrational family"};
    c_loc_np.pass = loc_np.extrapolated_limit && std::abs(loc_np_limit - 1.0) <= 0.05;
    result.checks.push_back(c_loc_np);
    ScenarioCheck c_short{"short_entry_gap_periodic", false,
                          std::abs(short_p_limit - loc_p_limit), 0.0, 0.05,
                          "short-entry limit candidate vs localized limit"};
    c_short.pass = short_p.limit_candidate && loc_p.extrapolated_limit &&
                   std::abs(short_p_limit - loc_p_limit) <= 0.05;
    result.checks.push_back(c_short);
    result.checks.push_back({"window_monotonicity", a1.monotone_in_K_ok,
                             a1.monotone_in_K_ok ? 1.0 : 0.0, 1.0, 0.0,
                             "hat_alpha_2 nondecreasing in K at every depth"});
    const bool coarse = loc_p.coarse_bound_ok && loc_np.coarse_bound_ok;
    result.checks.push_back({"coarse_bound", coarse, coarse ? 1.0 : 0.0, 1.0, 0.0,
                             "every localized ratio lies in [0, 1.05]"});

    nlohmann::ordered_json s;
    s["scenario"] = "dichotomy";
    s["seed"] = seed;
    s["periodic_ratio"] = pt.value;
    s["alpha_target"] = alpha_target;
    nlohmann::ordered_json per_K = nlohmann::ordered_json::array();
    for (const auto& pk : a1.per_K)
        per_K.push_back({{"K", pk.K}, {"n_limit", pk.n_limit}});
    s["alpha1"] = {{"value", a1.value}, {"per_K", per_K}};
    s["theta_periodic"] = th_p.value;
    s["theta_nonperiodic"] = th_np.value;
    s["localized_periodic"] = {{"limit", loc_p_limit},
                               {"fit_residual", loc_p.fit_residual},
                               {"fit_note", loc_p.fit_note}};
    s["localized_nonperiodic"] = {{"limit", loc_np_limit},
                                  {"fit_residual", loc_np.fit_residual},
                                  {"fit_note", loc_np.fit_note}};
    s["short_entry"] = {{"periodic_limit_candidate", short_p_limit},
                        {"nonperiodic_limit_candidate",
                         short_np.limit_candidate.value_or(
                             std::numeric_limits<double>::quiet_NaN())}};
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["n_max"] = n_max;
    resolved["np_lo"] = np_lo;
    resolved["np_hi"] = np_hi;
    resolved["K_schedule"] = K_schedule;
    resolved["a_short"] = a_short;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("dichotomy", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- cluster ----

inline ScenarioResult run_cluster(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(cfg, {"n", "K", "L", "K_stability", "seed"}, "cluster");
    const int n = detail::cfg_get<int>(cfg, "n", 8);
    const int K = detail::cfg_get<int>(cfg, "K", 12);
    const int L = detail::cfg_get<int>(cfg, "L", 24);
    const std::vector<int> K_stability =
        detail::cfg_get<std::vector<int>>(cfg, "K_stability", {8, 12, 16, 20});
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (n < 4 || n > 12) throw std::invalid_argument("cluster: n in 4..12");
    if (K < 2 || K > 64) throw std::invalid_argument("cluster: K in 2..64");
    if (L < 6 || L > 40) throw std::invalid_argument("cluster: L in 6..40");

    struct Family {
        std::string name;
        MarkovMeasure mu;
        CylinderUnion hole;
        double theta_reference;
    };
    const MarkovMeasure mu3 = MarkovMeasure::uniform(3);
    const MarkovMeasure mu2 = MarkovMeasure::bernoulli({0.5, 0.5});
    const NeighborhoodSystem cantor_ns = cantor_neighborhoods(n);
    Word zeros(static_cast<std::size_t>(n), 0);
    std::vector<Family> families;
    families.push_back({"cantor", mu3, cantor_ns.entries.back().hole, 2.0 / 3.0});
    families.push_back({"doubling", mu2, make_cylinder_union(mu2, n, {zeros}), 0.5});

    ScenarioResult result;
    result.scenario = "cluster";
    io::CsvWriter csv({"family", "ell", "hat_alpha", "alpha", "lambda_direct",
                       "lambda_theorem", "route_gap"});

    nlohmann::ordered_json per_family = nlohmann::ordered_json::array();
    for (const auto& fam : families) {
        const EIProfile prof = compute_ei_profile(fam.mu, fam.hole, K, L);
        const LambdaTheoremResult thm = lambda_via_theorem(prof);

        double resid5 = 0.0;
        const int overlap = std::min(5, L);
        for (int ell = 1; ell <= overlap; ++ell)
            resid5 = std::max(resid5, std::abs(thm.lambda[ell - 1] -
                                               prof.lambda_values[ell - 1]));
        double geometric_gap = 0.0;
        for (int ell = 1; ell <= overlap; ++ell) {
            const double law = std::pow(fam.theta_reference, ell - 1) *
                               (1.0 - fam.theta_reference);
            geometric_gap = std::max(
                geometric_gap, std::abs(prof.lambda_values[ell - 1] - law));
        }

        for (int ell = 1; ell <= L; ++ell) {
            csv.add_row({fam.name, std::to_string(ell),
                         detail::fmt(prof.hat_alpha_values[ell - 1]),
                         detail::fmt(prof.alpha_values[ell - 1]),
                         detail::fmt(prof.lambda_values[ell - 1]),
                         detail::fmt(thm.lambda[ell - 1]),
                         detail::fmt(std::abs(thm.lambda[ell - 1] -
                                              prof.lambda_values[ell - 1]))});
        }

        result.checks.push_back({fam.name + "_lambda_residual", resid5 <= 0.02, resid5,
                                 0.0, 0.02,
                                 "max |theorem - direct| over the first five levels"});
        result.checks.push_back({fam.name + "_mean_identity",
                                 thm.mean_identity_dev <= 0.02, thm.mean_identity_dev,
                                 0.0, 0.02, "|alpha_1 * mean cluster length - 1|"});

        nlohmann::ordered_json stability = nlohmann::ordered_json::array();
        for (int Ks : K_stability)
            stability.push_back(
                {{"K", Ks}, {"hat_alpha2", hat_alpha(fam.mu, fam.hole, 2, Ks)}});

        nlohmann::ordered_json f;
        f["family"] = fam.name;
        f["alpha_1"] = prof.alpha_1;
        f["mean_cluster"] = thm.mean_cluster;
        f["mean_identity_dev"] = thm.mean_identity_dev;
        f["truncation_tail"] = thm.truncation_tail;
        f["tail_small"] = thm.tail_small;
        f["lambda_residual_first5"] = resid5;
        f["geometric_law_gap_first5"] = geometric_gap;
        f["theta_reference"] = fam.theta_reference;
        f["hat_alpha2_by_K"] = std::move(stability);
        per_family.push_back(std::move(f));
    }
    result.csv = csv.to_string();

    nlohmann::ordered_json s;
    s["scenario"] = "cluster";
    s["seed"] = seed;
    s["n"] = n;
    s["K"] = K;
    s["L"] = L;
    s["families"] = std::move(per_family);
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["n"] = n;
    resolved["K"] = K;
    resolved["L"] = L;
    resolved["K_stability"] = K_stability;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("cluster", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- tower ----

inline ScenarioResult run_tower(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(
        cfg, {"n_max_a", "n_lo_b", "n_max_b", "epsilon", "k_list", "samples", "seed"},
        "tower");
    const int n_max_a = detail::cfg_get<int>(cfg, "n_max_a", 8);
    // The one-zero family obeys the coarse ratio bound only from depth 8 on
    // (shallower levels sit in the pre-asymptotic regime above 1.05).
    const int n_lo_b = detail::cfg_get<int>(cfg, "n_lo_b", 8);
    const int n_max_b = detail::cfg_get<int>(cfg, "n_max_b", 13);
    const double epsilon = detail::cfg_get<double>(cfg, "epsilon", 0.2);
    const std::vector<int> k_list =
        detail::cfg_get<std::vector<int>>(cfg, "k_list", {5, 10, 20, 40, 80});
    const std::size_t samples = detail::cfg_get<std::size_t>(cfg, "samples", 200000);
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (n_max_a < 4 || n_max_a > 12) throw std::invalid_argument("tower: n_max_a in 4..12");
    if (n_lo_b < 4 || n_max_b > 14 || n_max_b < n_lo_b + 3)
        throw std::invalid_argument("tower: need 4 <= n_lo_b, n_max_b <= 14, span >= 4");
    if (samples < 10000) throw std::invalid_argument("tower: samples >= 10^4");

    const MarkovMeasure mu2 = MarkovMeasure::bernoulli({0.5, 0.5});
    const MarkovMeasure golden = MarkovMeasure::from_transitions({{0.5, 0.5}, {1.0, 0.0}});

    const Tower tower_a = build_tower(mu2, {1, 2});
    const Tower tower_b = build_tower(golden, {2, 1});

    const NeighborhoodSystem ns_a =
        periodic_prefix_family(mu2, {0}, 2, n_max_a, "zero block family");
    std::vector<int> word_b(static_cast<std::size_t>(n_max_b), 0);
    word_b[0] = 1;
    const NeighborhoodSystem ns_b =
        prefix_family(golden, word_b, n_lo_b, n_max_b, "one-zero block family");

    const InducingReport rep_a = inducing_invariance_check(tower_a, ns_a);
    const InducingReport rep_b = inducing_invariance_check(tower_b, ns_b);

    double max_relation_dev = 0.0;
    for (const auto& e : ns_a.entries)
        max_relation_dev = std::max(max_relation_dev, lift_hole(tower_a, e.hole).relation_dev);
    for (const auto& e : ns_b.entries)
        max_relation_dev = std::max(max_relation_dev, lift_hole(tower_b, e.hole).relation_dev);

    const LargeDeviationTable probe =
        large_deviation_probe(tower_a, epsilon, k_list, samples, seed);

    ScenarioResult result;
    result.scenario = "tower";
    io::CsvWriter csv({"tower", "side", "n", "mu", "rho", "ratio", "method", "flagged"});
    auto emit_table = [&](const std::string& tower_name, const std::string& side,
                          const LocalizedRateTable& table) {
        for (const auto& row : table.rows)
            csv.add_row({tower_name, side, std::to_string(row.kappa), detail::fmt(row.mu),
                         detail::fmt(row.rho), detail::fmt(row.ratio), row.method,
                         row.flagged ? "1" : "0"});
    };
    emit_table("A", "base", rep_a.base_table);
    emit_table("A", "tower", rep_a.tower_table);
    emit_table("B", "base", rep_b.base_table);
    emit_table("B", "tower", rep_b.tower_table);
    result.csv = csv.to_string();

    result.checks.push_back({"inducing_gap_a", rep_a.pass, rep_a.gap, 0.0, 0.05,
                             "base vs tower localized limit, doubling base"});
    result.checks.push_back({"inducing_gap_b", rep_b.pass, rep_b.gap, 0.0, 0.05,
                             "base vs tower localized limit, golden-mean base"});
    const double kac_worst = std::max(tower_a.kac_dev, tower_b.kac_dev);
    result.checks.push_back({"kac_identity", kac_worst <= 1e-12, kac_worst, 0.0, 1e-12,
                             "floor-zero mass vs reciprocal mean roof"});
    const double lift_worst = std::max({tower_a.lift_formula_dev, tower_b.lift_formula_dev,
                                        max_relation_dev});
    result.checks.push_back({"lift_identities", lift_worst <= 1e-12, lift_worst, 0.0, 1e-12,
                             "stationary lift and hole-measure relations"});
    int nonzero_rows = 0;
    for (const auto& row : probe.rows)
        if (row.estimate > 0.0) ++nonzero_rows;
    const bool slope_ok = probe.slope < 0.0 && nonzero_rows >= 2;
    result.checks.push_back({"large_deviation_slope", slope_ok, probe.slope, 0.0, 0.0,
                             "log-linear decay of the deviation probability"});
    const bool coarse = rep_a.base_table.coarse_bound_ok && rep_a.tower_table.coarse_bound_ok &&
                        rep_b.base_table.coarse_bound_ok && rep_b.tower_table.coarse_bound_ok;
    result.checks.push_back({"coarse_bound", coarse, coarse ? 1.0 : 0.0, 1.0, 0.0,
                             "every localized ratio lies in [0, 1.05]"});

    auto tower_json = [](const Tower& t, const InducingReport& rep) {
        nlohmann::ordered_json j;
        j["mean_roof"] = t.mean_roof;
        j["floor0_measure"] = t.floor0_measure;
        j["kac_dev"] = t.kac_dev;
        j["lift_formula_dev"] = t.lift_formula_dev;
        j["base_limit"] = rep.base_limit;
        j["tower_limit"] = rep.tower_limit;
        j["gap"] = rep.gap;
        return j;
    };
    nlohmann::ordered_json probe_rows = nlohmann::ordered_json::array();
    for (const auto& row : probe.rows)
        probe_rows.push_back({{"k", row.k},
                              {"estimate", row.estimate},
                              {"stderr", row.stderr_value}});

    nlohmann::ordered_json s;
    s["scenario"] = "tower";
    s["seed"] = seed;
    s["tower_a"] = tower_json(tower_a, rep_a);
    s["tower_b"] = tower_json(tower_b, rep_b);
    s["hole_lift_relation_max_dev"] = max_relation_dev;
    s["large_deviation"] = {{"epsilon", probe.epsilon},
                            {"rows", probe_rows},
                            {"slope", probe.slope},
                            {"note", probe.note}};
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["n_max_a"] = n_max_a;
    resolved["n_lo_b"] = n_lo_b;
    resolved["n_max_b"] = n_max_b;
    resolved["epsilon"] = epsilon;
    resolved["k_list"] = k_list;
    resolved["samples"] = samples;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("tower", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- catmap ----

inline ScenarioResult run_catmap(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(cfg,
                                {"samples", "t_max", "u_exceed", "t_exceed", "n_generic",
                                 "n_aligned", "seed"},
                                "catmap");
    const std::size_t samples = detail::cfg_get<std::size_t>(cfg, "samples", 100000);
    const int t_max = detail::cfg_get<int>(cfg, "t_max", 2000);
    const double u_exceed = detail::cfg_get<double>(cfg, "u_exceed", std::log(50.0));
    const int t_exceed = detail::cfg_get<int>(cfg, "t_exceed", 100);
    const std::vector<int> n_generic =
        detail::cfg_get<std::vector<int>>(cfg, "n_generic", {16, 23, 32, 45, 64, 91, 128});
    const std::vector<int> n_aligned =
        detail::cfg_get<std::vector<int>>(cfg, "n_aligned", {16, 32, 64, 128});
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (samples < 10000) throw std::invalid_argument("catmap: samples >= 10^4");
    if (t_max < 200) throw std::invalid_argument("catmap: t_max >= 200");
    if (t_exceed < 1) throw std::invalid_argument("catmap: t_exceed >= 1");
    if (!(u_exceed > 0.0)) throw std::invalid_argument("catmap: u_exceed > 0");
    if (n_generic.size() < 2 || n_aligned.size() < 2)
        throw std::invalid_argument("catmap: threshold lists need >= 2 levels");

    // Generic segment: slope-1/2 chord passing close to the fixed point of the
    // map without containing it, so clustering fades as the tube narrows.
    const SegmentTarget seg_generic = make_segment({0.85, 0.94}, 2.0, 1.0, 0.3);
    const SegmentTarget seg_aligned = make_aligned_segment({0.0, 0.0}, "unstable", 0.5);
    const ThresholdScheme scheme; // u_n = log n
    const double lambda = catmap_lambda();
    const double aligned_target = 1.0 - 1.0 / lambda;

    const ExceedanceReport exc =
        exceedance_check_catmap(seg_generic, u_exceed, t_exceed, samples, seed);
    const ExceedanceReport exc_control = exceedance_check_catmap(
        seg_generic, u_exceed, t_exceed, samples, seed + 1, 2.0 * std::exp(-u_exceed));

    const ZetaTable zeta_generic =
        catmap_zeta_estimate(seg_generic, scheme, n_generic, t_max, samples, seed + 101);
    const ZetaTable zeta_aligned =
        catmap_zeta_estimate(seg_aligned, scheme, n_aligned, t_max, samples, seed + 202);

    ScenarioResult result;
    result.scenario = "catmap";
    io::CsvWriter csv({"target", "n", "u", "delta", "mu_tube", "mu_mc", "mu_mc_err",
                       "zeta_rate", "zeta_err", "normalized", "normalized_err",
                       "entry_normalized", "fit_lo", "fit_hi", "flagged"});
    auto emit_rows = [&](const std::string& target, const ZetaTable& table) {
        for (const auto& r : table.rows)
            csv.add_row({target, std::to_string(r.n), detail::fmt(r.u), detail::fmt(r.delta),
                         detail::fmt(r.mu_tube), detail::fmt(r.mu_mc),
                         detail::fmt(r.mu_mc_err), detail::fmt(r.zeta_rate),
                         detail::fmt(r.zeta_err), detail::fmt(r.normalized),
                         detail::fmt(r.normalized_err), detail::fmt(r.entry_normalized),
                         std::to_string(r.fit_lo), std::to_string(r.fit_hi),
                         r.flagged ? "1" : "0"});
    };
    emit_rows("generic", zeta_generic);
    emit_rows("aligned", zeta_aligned);
    result.csv = csv.to_string();

    result.checks.push_back({"exceedance_identity", exc.mismatches == 0,
                             static_cast<double>(exc.mismatches), 0.0, 0.0,
                             "pathwise max-vs-entry mismatches at delta = exp(-u)"});
    result.checks.push_back({"exceedance_control", exc_control.mismatches > 0,
                             static_cast<double>(exc_control.mismatches), 1.0, 0.0,
                             "widened membership radius must break the identity"});

    const double generic_first = zeta_generic.rows.front().normalized;
    const double generic_final = zeta_generic.rows.back().normalized;
    const bool generic_range = generic_final >= 0.8 && generic_final <= 1.15;
    result.checks.push_back({"generic_final_range", generic_range, generic_final, 1.0, 0.15,
                             "final normalized rate in [0.8, 1.15]"});
    bool trend = generic_final >= generic_first + 0.05;
    for (std::size_t i = 0; i + 1 < zeta_generic.rows.size(); ++i)
        if (zeta_generic.rows[i + 1].normalized < zeta_generic.rows[i].normalized - 0.02)
            trend = false;
    result.checks.push_back({"generic_trend_upward", trend, generic_final - generic_first,
                             0.05, 0.0,
                             "normalized rate climbs with n (dips above -0.02 allowed)"});

    const double aligned_final = zeta_aligned.rows.back().normalized;
    result.checks.push_back({"aligned_value",
                             std::abs(aligned_final - aligned_target) <= 0.08, aligned_final,
                             aligned_target, 0.08,
                             "unstable segment through the fixed point vs 1 - 1/lambda"});

    nlohmann::ordered_json s;
    s["scenario"] = "catmap";
    s["seed"] = seed;
    s["lambda"] = lambda;
    s["exceedance"] = {{"samples", exc.samples},
                       {"mismatches", exc.mismatches},
                       {"control_mismatches", exc_control.mismatches}};
    auto profile = [](const ZetaTable& t) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : t.rows)
            arr.push_back({{"n", r.n},
                           {"normalized", r.normalized},
                           {"normalized_err", r.normalized_err},
                           {"flagged", r.flagged}});
        return arr;
    };
    s["generic"] = {{"first", generic_first},
                    {"final", generic_final},
                    {"rows", profile(zeta_generic)}};
    s["aligned"] = {{"final", aligned_final},
                    {"target", aligned_target},
                    {"rows", profile(zeta_aligned)}};
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["samples"] = samples;
    resolved["t_max"] = t_max;
    resolved["u_exceed"] = u_exceed;
    resolved["t_exceed"] = t_exceed;
    resolved["n_generic"] = n_generic;
    resolved["n_aligned"] = n_aligned;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("catmap", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- audit ----

inline ScenarioResult run_audit(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(cfg, {"k_max", "oracle_cases", "seed"}, "audit");
    const int k_max = detail::cfg_get<int>(cfg, "k_max", 30);
    const int oracle_cases = detail::cfg_get<int>(cfg, "oracle_cases", 52);
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (k_max < 5 || k_max > 60) throw std::invalid_argument("audit: k_max in 5..60");
    if (oracle_cases < 10 || oracle_cases > 200)
        throw std::invalid_argument("audit: oracle_cases in 10..200");

    const MarkovMeasure fair = MarkovMeasure::bernoulli({0.5, 0.5});
    const MarkovMeasure biased = MarkovMeasure::bernoulli({0.3, 0.7});
    const MarkovMeasure mu3 = MarkovMeasure::uniform(3);
    const MarkovMeasure golden = MarkovMeasure::from_transitions({{0.5, 0.5}, {1.0, 0.0}});

    struct CorpusHole {
        std::string system;
        const MarkovMeasure* mu;
        CylinderUnion hole;
    };
    auto U = [](const MarkovMeasure& m, int depth, std::vector<Word> words) {
        return make_cylinder_union(m, depth, std::move(words));
    };
    std::vector<CorpusHole> corpus;
    corpus.push_back({"doubling", &fair, U(fair, 1, {{0}})});
    corpus.push_back({"doubling", &fair, U(fair, 2, {{0, 1}})});
    corpus.push_back({"doubling", &fair, U(fair, 2, {{0, 0}, {1, 1}})});
    corpus.push_back({"doubling", &fair, U(fair, 3, {{0, 1, 0}})});
    corpus.push_back({"doubling", &fair, U(fair, 4, {{0, 0, 0, 0}})});
    corpus.push_back({"uniform3", &mu3, U(mu3, 1, {{0}})});
    corpus.push_back({"uniform3", &mu3, U(mu3, 1, {{0}, {2}})});
    corpus.push_back({"uniform3", &mu3, U(mu3, 2, {{0, 2}, {2, 0}})});
    corpus.push_back({"uniform3", &mu3, U(mu3, 3, {{0, 1, 2}})});
    corpus.push_back({"golden", &golden, U(golden, 1, {{1}})});
    corpus.push_back({"golden", &golden, U(golden, 2, {{1, 0}})});
    corpus.push_back({"golden", &golden, U(golden, 2, {{0, 0}})});
    corpus.push_back({"golden", &golden, U(golden, 3, {{1, 0, 0}})});

    ScenarioResult result;
    result.scenario = "audit";
    io::CsvWriter csv({"system", "hole", "depth", "mu", "rho", "rho_conditional",
                       "route_dev", "scaling_dev", "difference_dev", "identity_pass"});

    double route_worst = 0.0;
    double lemma_worst = 0.0;
    for (const auto& item : corpus) {
        const RateEstimate rho = escape_rate_exact(*item.mu, item.hole);
        const RateEstimate rho_u = conditional_escape_rate(*item.mu, item.hole);
        const double dev = std::abs(rho.rate - rho_u.rate);
        route_worst = std::max(route_worst, dev);
        const EntryReturnAudit audit = entry_return_identity_audit(*item.mu, item.hole, k_max);
        lemma_worst = std::max({lemma_worst, audit.max_dev_scaling, audit.max_dev_difference});

        std::vector<std::string> hole_words;
        for (const Word& w : item.hole.words) hole_words.push_back(word_to_string(w));
        std::string label;
        for (std::size_t i = 0; i < hole_words.size(); ++i)
            label += (i ? "|" : "") + hole_words[i];
        csv.add_row({item.system, label, std::to_string(item.hole.depth),
                     detail::fmt(measure_of(*item.mu, item.hole)), detail::fmt(rho.rate),
                     detail::fmt(rho_u.rate), detail::fmt(dev),
                     detail::fmt(audit.max_dev_scaling), detail::fmt(audit.max_dev_difference),
                     audit.pass ? "1" : "0"});
    }
    result.csv = csv.to_string();

    // Block inequality grid with vanishing mixing bound (iid rows).
    const auto phi_zero = [](int) { return 0.0; };
    struct BlockHole {
        const MarkovMeasure* mu;
        CylinderUnion hole;
    };
    std::vector<BlockHole> block_holes;
    block_holes.push_back({&fair, U(fair, 1, {{0}})});
    block_holes.push_back({&fair, U(fair, 2, {{0, 1}})});
    block_holes.push_back({&fair, U(fair, 2, {{0, 0}, {1, 1}})});
    block_holes.push_back({&biased, U(biased, 1, {{0}})});
    block_holes.push_back({&biased, U(biased, 2, {{1, 1}})});
    int block_combos = 0;
    int block_violations = 0;
    for (const auto& bh : block_holes)
        for (int s_len : {8, 12, 16, 20})
            for (int Delta : {1, 2, 3}) {
                const BlockBoundReport rep = block_bound_audit(
                    *bh.mu, bh.hole, s_len, Delta, {3.0, 4.0, 5.0, 6.0}, phi_zero);
                block_combos += static_cast<int>(rep.rows.size());
                block_violations += rep.violations;
            }

    // Enumeration oracle vs the automaton route on randomized small systems.
    SplitMix64 rng(seed);
    double oracle_worst = 0.0;
    int conditional_cases = 0;
    auto compare_case = [&](const MarkovMeasure& m, const CylinderUnion& hole, int T,
                            bool also_conditional) {
        const SurvivalCurve a = survival_exact(m, hole, T, false);
        const SurvivalCurve b = survival_by_enumeration(m, hole, T, false);
        for (int t = 0; t <= T; ++t)
            oracle_worst = std::max(oracle_worst,
                                    std::abs(a.values[static_cast<std::size_t>(t)] -
                                             b.values[static_cast<std::size_t>(t)]));
        if (also_conditional) {
            ++conditional_cases;
            const SurvivalCurve c = survival_exact(m, hole, T, true);
            const SurvivalCurve d = survival_by_enumeration(m, hole, T, true);
            for (int t = 0; t <= T; ++t)
                oracle_worst = std::max(oracle_worst,
                                        std::abs(c.values[static_cast<std::size_t>(t)] -
                                                 d.values[static_cast<std::size_t>(t)]));
        }
    };
    int oracle_total = 0;
    for (int i = 0; i < oracle_cases; ++i) {
        MarkovMeasure m = fair;
        switch (i % 4) {
            case 0: m = fair; break;
            case 1: {
                const double p = 0.2 + 0.6 * rng.uniform();
                m = MarkovMeasure::bernoulli({p, 1.0 - p});
                break;
            }
            case 2: m = mu3; break;
            default: m = golden; break;
        }
        const int depth = 1 + static_cast<int>(rng.uniform_below(4));
        const int T = 6 + static_cast<int>(rng.uniform_below(7));
        std::vector<Word> words;
        for (int a0 = 0; a0 < m.alphabet_size(); ++a0)
            erl::detail::extend_words(m, Word{a0}, depth, words);
        std::vector<Word> chosen;
        for (const Word& w : words)
            if (rng.uniform() < 0.3) chosen.push_back(w);
        if (chosen.empty()) chosen.push_back(words[rng.uniform_below(words.size())]);
        if (chosen.size() == words.size()) chosen.pop_back();
        compare_case(m, make_cylinder_union(m, depth, chosen), T, i % 3 == 0);
        ++oracle_total;
    }
    compare_case(mu3, cantor_neighborhoods(4).entries.back().hole, 12, true);
    compare_case(fair, U(fair, 4, {{0, 0, 0, 0}, {1, 1, 1, 1}, {0, 1, 0, 1}}), 12, true);
    oracle_total += 2;

    result.checks.push_back({"two_route_rates", route_worst < 1e-8, route_worst, 0.0, 1e-8,
                             "max |rho - rho_U| over the corpus"});
    result.checks.push_back({"entry_return_identities", lemma_worst < 1e-10, lemma_worst, 0.0,
                             1e-10, "scaling and difference identities up to k_max"});
    result.checks.push_back({"block_inequality", block_violations == 0,
                             static_cast<double>(block_violations), 0.0, 0.0,
                             std::to_string(block_combos) + " (hole,s,Delta,k) combinations"});
    result.checks.push_back({"enumeration_oracle", oracle_worst < 1e-12, oracle_worst, 0.0,
                             1e-12, std::to_string(oracle_total) + " randomized cases"});

    nlohmann::ordered_json s;
    s["scenario"] = "audit";
    s["seed"] = seed;
    s["corpus_size"] = corpus.size();
    s["route_max_dev"] = route_worst;
    s["identity_max_dev"] = lemma_worst;
    s["block"] = {{"combinations", block_combos}, {"violations", block_violations}};
    s["oracle"] = {{"cases", oracle_total},
                   {"conditional_cases", conditional_cases},
                   {"max_dev", oracle_worst}};
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["k_max"] = k_max;
    resolved["oracle_cases"] = oracle_cases;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("audit", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

// ---- custom ----

inline ScenarioResult run_custom(const nlohmann::json& cfg) {
    detail::reject_unknown_keys(cfg, {"system", "hole", "T", "K", "L", "seed"}, "custom");
    if (cfg.is_null() || !cfg.contains("system") || !cfg.contains("hole"))
        throw std::invalid_argument("custom: config requires 'system' and 'hole'");
    const int T = detail::cfg_get<int>(cfg, "T", 50);
    const int K = detail::cfg_get<int>(cfg, "K", 10);
    const int L = detail::cfg_get<int>(cfg, "L", 8);
    const std::uint64_t seed = detail::cfg_seed(cfg);
    if (T < 1 || T > 100000) throw std::invalid_argument("custom: T in 1..100000");
    if (K < 1 || K > 10000) throw std::invalid_argument("custom: K in 1..10000");
    if (L < 1 || L > 32) throw std::invalid_argument("custom: L in 1..32");

    MarkovMeasure mu = MarkovMeasure::bernoulli({0.5, 0.5});
    std::string system_label;
    const auto& sys = cfg.at("system");
    if (sys.is_string()) {
        system_label = sys.get<std::string>();
        if (system_label == "doubling")
            mu = MarkovMeasure::bernoulli({0.5, 0.5});
        else if (system_label == "uniform3")
            mu = MarkovMeasure::uniform(3);
        else if (system_label == "golden_mean")
            mu = MarkovMeasure::from_transitions({{0.5, 0.5}, {1.0, 0.0}});
        else
            throw std::invalid_argument("custom: unknown system '" + system_label + "'");
    } else if (sys.is_object()) {
        mu = MarkovMeasure::from_json(sys);
        system_label = "matrix";
    } else {
        throw std::invalid_argument("custom: system must be a name or an object");
    }
    const CylinderUnion hole = cylinder_union_from_json(mu, cfg.at("hole"));

    const double measure = measure_of(mu, hole);
    const RateEstimate rho = escape_rate_exact(mu, hole);
    const RateEstimate rho_u = conditional_escape_rate(mu, hole);
    const SurvivalCurve curve = survival_exact(mu, hole, T, false);
    const SurvivalCurve curve_u = survival_exact(mu, hole, T, true);
    const EntryReturnAudit audit = entry_return_identity_audit(mu, hole, std::min(T, 30));

    ScenarioResult result;
    result.scenario = "custom";
    io::CsvWriter csv({"t", "survival", "survival_conditional"});
    for (int t = 0; t <= T; ++t)
        csv.add_row({std::to_string(t),
                     detail::fmt(curve.values[static_cast<std::size_t>(t)]),
                     detail::fmt(curve_u.values[static_cast<std::size_t>(t)])});
    result.csv = csv.to_string();

    nlohmann::ordered_json s;
    s["scenario"] = "custom";
    s["seed"] = seed;
    s["system"] = system_label;
    std::vector<std::string> hole_words;
    for (const Word& w : hole.words) hole_words.push_back(word_to_string(w));
    s["hole"] = {{"depth", hole.depth}, {"words", hole_words}};
    s["measure"] = measure;
    s["rho"] = rho.rate;
    s["rho_conditional"] = rho_u.rate;
    s["route_dev"] = std::abs(rho.rate - rho_u.rate);
    s["entry_return"] = {{"scaling_dev", audit.max_dev_scaling},
                         {"difference_dev", audit.max_dev_difference}};
    try {
        const EIProfile prof = compute_ei_profile(mu, hole, K, L);
        nlohmann::ordered_json hat = nlohmann::ordered_json::array();
        for (double v : prof.hat_alpha_values) hat.push_back(v);
        nlohmann::ordered_json lam = nlohmann::ordered_json::array();
        for (double v : prof.lambda_values) lam.push_back(v);
        s["profile"] = {{"K", K}, {"alpha_1", prof.alpha_1}, {"hat_alpha", hat},
                        {"lambda", lam}};
    } catch (const std::exception& e) {
        s["profile"] = {{"error", e.what()}};
    }
    result.summary = std::move(s);

    nlohmann::ordered_json resolved;
    resolved["system"] = cfg.at("system");
    resolved["hole"] = cfg.at("hole");
    resolved["T"] = T;
    resolved["K"] = K;
    resolved["L"] = L;
    resolved["seed"] = seed;
    result.manifest = detail::make_manifest("custom", std::move(resolved));
    detail::finish_summary(result);
    return result;
}

inline ScenarioResult run_scenario(const std::string& name, const nlohmann::json& cfg) {
    if (name == "cantor") return run_cantor(cfg);
    if (name == "dichotomy") return run_dichotomy(cfg);
    if (name == "cluster") return run_cluster(cfg);
    if (name == "tower") return run_tower(cfg);
    if (name == "catmap") return run_catmap(cfg);
    if (name == "audit") return run_audit(cfg);
    if (name == "custom") return run_custom(cfg);
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

} // namespace erl
