#pragma once

// Continuous-state realizations: m-ary interval maps with symbolic coding,
// metric holes with cylinder sandwiches, the cat map with segment targets,
// exceedance identities, and Monte Carlo zeta estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "erl/cylinder.hpp"
#include "erl/escape.hpp"
#include "erl/markov.hpp"
#include "erl/rng.hpp"

namespace erl {

// ---- Interval maps and symbolic coding ----

struct IntervalMarkovMap {
    int branch_count = 2; // x -> branch_count * x mod 1, Lebesgue invariant

    double apply(double x) const {
        double y = branch_count * x;
        return y - std::floor(y);
    }
};

inline Word encode(const IntervalMarkovMap& map, double x, int n) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("encode: x must lie in [0,1)");
    if (n < 1) throw std::invalid_argument("encode: n >= 1 required");
    Word w(n);
    const int m = map.branch_count;
    for (int i = 0; i < n; ++i) {
        double y = x * m;
        int d = static_cast<int>(std::floor(y));
        d = std::min(std::max(d, 0), m - 1);
        w[i] = d;
        x = y - d;
    }
    return w;
}

// Half-open cylinder interval [lo, hi) of a word.
inline std::pair<double, double> decode(const IntervalMarkovMap& map, const Word& w) {
    if (w.empty()) throw std::invalid_argument("decode: empty word");
    double lo = 0.0;
    double scale = 1.0;
    for (int d : w) {
        if (d < 0 || d >= map.branch_count)
            throw std::invalid_argument("decode: symbol out of range");
        scale /= map.branch_count;
        lo += d * scale;
    }
    return {lo, lo + scale};
}

// Shrinking covers of the middle-thirds Cantor set: depth-n words over {0,2}
// under the uniform 3-shift; measures (2/3)^n, kappa_n = n.
inline NeighborhoodSystem cantor_neighborhoods(int n_max) {
    if (n_max < 1) throw std::invalid_argument("cantor_neighborhoods: n_max >= 1 required");
    if (n_max > 20)
        throw std::invalid_argument("cantor_neighborhoods: n_max > 20 exceeds the word budget");
    MarkovMeasure mu = MarkovMeasure::uniform(3);
    std::vector<CylinderUnion> levels;
    std::vector<Word> words{{}};
    for (int n = 1; n <= n_max; ++n) {
        std::vector<Word> next;
        next.reserve(words.size() * 2);
        for (const Word& w : words)
            for (int d : {0, 2}) {
                Word v = w;
                v.push_back(d);
                next.push_back(std::move(v));
            }
        words = std::move(next);
        levels.push_back(make_cylinder_union(mu, n, words));
    }
    return make_neighborhood_system(mu, std::move(levels), "middle-thirds Cantor covers");
}

// ---- Metric holes on the interval ----

struct MetricHole {
    std::vector<std::pair<double, double>> intervals; // open (a,b) in [0,1]

    bool contains(double x) const {
        for (const auto& [a, b] : intervals)
            if (x > a && x < b) return true;
        return false;
    }
    double total_length() const {
        double s = 0.0;
        for (const auto& [a, b] : intervals) s += b - a;
        return s;
    }
};

inline MetricHole make_metric_hole(std::vector<std::pair<double, double>> intervals) {
    if (intervals.empty()) throw std::invalid_argument("make_metric_hole: no intervals");
    for (const auto& [a, b] : intervals)
        if (!(a >= 0.0 && a < b && b <= 1.0))
            throw std::invalid_argument("make_metric_hole: intervals must satisfy 0 <= a < b <= 1");
    MetricHole hole{std::move(intervals)};
    if (!(hole.total_length() > 0.0))
        throw std::invalid_argument("make_metric_hole: zero measure");
    return hole;
}

struct SandwichResult {
    int kappa = 0;
    CylinderUnion inner; // V: cylinders contained in the hole
    CylinderUnion outer; // W: cylinders meeting the hole
    double gap = 0.0;    // mu(W) - mu(V)
    double diagnostic = 0.0; // gap / mu(V)
};

// Inner/outer depth-kappa cylinder approximations of a metric hole, with
// kappa minimal such that the cylinder diameter m^-kappa is <= r.
inline SandwichResult metric_hole_sandwich(const IntervalMarkovMap& map, const MetricHole& hole,
                                           double r) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("metric_hole_sandwich: r in (0,1]");
    const int m = map.branch_count;
    int kappa = 1;
    double diam = 1.0 / m;
    while (diam > r) {
        ++kappa;
        diam /= m;
        if (kappa > 40) throw std::invalid_argument("metric_hole_sandwich: r too small");
    }
    double cells = std::pow(static_cast<double>(m), kappa);
    if (cells > 4.0e6)
        throw std::runtime_error("metric_hole_sandwich: depth exceeds the cylinder budget");
    const std::uint64_t n_cells = static_cast<std::uint64_t>(cells);

    auto word_of = [&](std::uint64_t j) {
        Word w(kappa);
        for (int i = kappa - 1; i >= 0; --i) {
            w[i] = static_cast<int>(j % m);
            j /= m;
        }
        return w;
    };

    std::vector<std::uint64_t> inner_ids, outer_ids;
    for (const auto& [a, b] : hole.intervals) {
        std::uint64_t j_lo = static_cast<std::uint64_t>(std::max(0.0, std::floor(a * cells)));
        std::uint64_t j_hi = static_cast<std::uint64_t>(
            std::min(cells - 1.0, std::ceil(b * cells)));
        for (std::uint64_t j = j_lo; j <= j_hi && j < n_cells; ++j) {
            double lo = static_cast<double>(j) / cells;
            double hi = static_cast<double>(j + 1) / cells;
            if (lo < b && hi > a) outer_ids.push_back(j);
            if (lo > a && hi <= b) inner_ids.push_back(j);
        }
    }
    auto canonical = [](std::vector<std::uint64_t>& ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    canonical(inner_ids);
    canonical(outer_ids);
    if (inner_ids.empty())
        throw std::runtime_error(
            "metric_hole_sandwich: hole thinner than one depth-kappa cylinder; use smaller r");

    MarkovMeasure mu = MarkovMeasure::uniform(m);
    std::vector<Word> inner_words, outer_words;
    for (auto j : inner_ids) inner_words.push_back(word_of(j));
    for (auto j : outer_ids) outer_words.push_back(word_of(j));
    SandwichResult res;
    res.kappa = kappa;
    res.inner = make_cylinder_union(mu, kappa, inner_words);
    res.outer = make_cylinder_union(mu, kappa, outer_words);
    res.gap = measure_of(mu, res.outer) - measure_of(mu, res.inner);
    res.diagnostic = res.gap / measure_of(mu, res.inner);
    return res;
}

// Open system on [0,1) with a metric hole, for Monte Carlo comparisons.
struct IntervalOpenSystem {
    IntervalMarkovMap map;
    MetricHole hole;
    using State = double;

    State initial(SplitMix64& rng) const { return rng.uniform(); }
    State step(const State& x, SplitMix64&) const { return map.apply(x); }
    bool in_hole(const State& x) const { return hole.contains(x); }
};

// ---- Cat map ----

struct CatPoint {
    double x = 0.0;
    double y = 0.0;
};

inline CatPoint catmap_step(const CatPoint& p) {
    double x = 2.0 * p.x + p.y;
    double y = p.x + p.y;
    return {x - std::floor(x), y - std::floor(y)};
}

inline std::vector<CatPoint> catmap_iterate(const CatPoint& p, int steps) {
    if (steps < 0) throw std::invalid_argument("catmap_iterate: steps >= 0 required");
    std::vector<CatPoint> orbit;
    orbit.reserve(steps + 1);
    orbit.push_back(p);
    CatPoint q = p;
    for (int i = 0; i < steps; ++i) {
        q = catmap_step(q);
        orbit.push_back(q);
    }
    return orbit;
}

inline double catmap_lambda() { return (3.0 + std::sqrt(5.0)) / 2.0; }

struct SegmentTarget {
    CatPoint p1;
    double vx = 1.0; // unit direction
    double vy = 0.0;
    double length = 0.0;
    std::string alignment = "generic"; // stable | unstable | generic
};

inline SegmentTarget make_segment(const CatPoint& p1, double dir_x, double dir_y, double length,
                                  std::string alignment = "generic") {
    double norm = std::hypot(dir_x, dir_y);
    if (!(norm > 0.0)) throw std::invalid_argument("make_segment: zero direction");
    if (!(length > 0.0)) throw std::invalid_argument("make_segment: length must be positive");
    return {p1, dir_x / norm, dir_y / norm, length, std::move(alignment)};
}

inline SegmentTarget make_aligned_segment(const CatPoint& p1, const std::string& alignment,
                                          double length) {
    const double lambda = catmap_lambda();
    if (alignment == "unstable") return make_segment(p1, 1.0, lambda - 2.0, length, alignment);
    if (alignment == "stable")
        return make_segment(p1, 1.0, (3.0 - std::sqrt(5.0)) / 2.0 - 2.0, length, alignment);
    throw std::invalid_argument("make_aligned_segment: alignment must be stable or unstable");
}

// Torus distance to the segment: minimum over the 3x3 integer translates of
// the point against the planar lift of the segment (exact for distances < 1/2
// with our short targets).
inline double catmap_distance(const CatPoint& p, const SegmentTarget& seg) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            double px = p.x + i;
            double py = p.y + j;
            double wx = px - seg.p1.x;
            double wy = py - seg.p1.y;
            double t = wx * seg.vx + wy * seg.vy;
            t = std::min(std::max(t, 0.0), seg.length);
            double qx = seg.p1.x + t * seg.vx - px;
            double qy = seg.p1.y + t * seg.vy - py;
            best = std::min(best, std::hypot(qx, qy));
        }
    }
    return best;
}

inline SegmentTarget segment_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("segment: JSON object expected");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "p1" && key != "angle" && key != "slope" && key != "length")
            throw std::invalid_argument("segment: unknown field '" + key + "'");
    }
    if (!doc.contains("p1") || !doc["p1"].is_array() || doc["p1"].size() != 2)
        throw std::invalid_argument("segment: p1 must be [x, y]");
    if (!doc.contains("length"))
        throw std::invalid_argument("segment: length required");
    CatPoint p1{doc["p1"][0].get<double>(), doc["p1"][1].get<double>()};
    double length = doc["length"].get<double>();
    const bool has_angle = doc.contains("angle");
    const bool has_slope = doc.contains("slope");
    if (has_angle == has_slope)
        throw std::invalid_argument("segment: exactly one of angle or slope required");
    if (has_angle) {
        if (doc["angle"].is_string()) {
            return make_aligned_segment(p1, doc["angle"].get<std::string>(), length);
        }
        double a = doc["angle"].get<double>();
        return make_segment(p1, std::cos(a), std::sin(a), length);
    }
    double s = doc["slope"].get<double>();
    return make_segment(p1, 1.0, s, length);
}

// ---- Threshold schemes ----

struct ThresholdScheme {
    std::string rule = "log_n"; // u_n = log n
    std::vector<double> explicit_u;

    double u_for(int n, std::size_t index) const {
        if (rule == "log_n") {
            if (n < 2) throw std::invalid_argument("ThresholdScheme: log_n needs n >= 2");
            return std::log(static_cast<double>(n));
        }
        if (index >= explicit_u.size())
            throw std::invalid_argument("ThresholdScheme: explicit list too short");
        return explicit_u[index];
    }
};

inline ThresholdScheme scheme_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("u"))
        throw std::invalid_argument("scheme: object with field u expected");
    ThresholdScheme s;
    if (doc["u"].is_string()) {
        s.rule = doc["u"].get<std::string>();
        if (s.rule != "log_n") throw std::invalid_argument("scheme: unknown rule '" + s.rule + "'");
        return s;
    }
    if (!doc["u"].is_array()) throw std::invalid_argument("scheme: u must be a rule or a list");
    s.rule = "explicit";
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& v : doc["u"]) {
        double u = v.get<double>();
        if (u < prev) throw std::invalid_argument("scheme: u must be nondecreasing");
        prev = u;
        s.explicit_u.push_back(u);
    }
    if (s.explicit_u.empty()) throw std::invalid_argument("scheme: empty u list");
    return s;
}

// ---- Exceedance identity ----

struct ExceedanceReport {
    std::size_t samples = 0;
    long long mismatches = 0;
    bool pass = false;
};

// Pathwise check that {max of phi over the first t orbit points < u} agrees
// with {no orbit point of index < t lies in the delta-ball set}, where the
// two sides are evaluated by independent comparisons (log vs linear scale).
template <class Init, class Step, class Phi, class Member>
ExceedanceReport exceedance_identity_check(Init&& init, Step&& step, Phi&& phi, Member&& member,
                                           double u, int t, std::size_t N, std::uint64_t seed) {
    if (t < 1) throw std::invalid_argument("exceedance_identity_check: t >= 1 required");
    if (N < 1) throw std::invalid_argument("exceedance_identity_check: N >= 1 required");
    const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(64, N));
    std::vector<long long> shard_mismatch(shards, 0);
    detail::parallel_for_shards(shards, [&](std::size_t shard) {
        std::size_t count = N / shards + (shard < N % shards ? 1 : 0);
        SplitMix64 rng = SplitMix64::for_stream(seed, shard);
        for (std::size_t i = 0; i < count; ++i) {
            auto x = init(rng);
            bool max_below = true;
            bool entered = false;
            for (int k = 0; k < t; ++k) {
                if (phi(x) >= u) max_below = false;
                if (member(x)) entered = true;
                x = step(x);
            }
            if (max_below != !entered) ++shard_mismatch[shard];
        }
    });
    ExceedanceReport rep;
    rep.samples = N;
    for (long long v : shard_mismatch) rep.mismatches += v;
    rep.pass = rep.mismatches == 0;
    return rep;
}

// Interval-map instance: phi = -log d(x, x_star) with the circle metric.
inline ExceedanceReport exceedance_check_interval(const IntervalMarkovMap& map, double x_star,
                                                  double u, int t, std::size_t N,
                                                  std::uint64_t seed,
                                                  std::optional<double> delta_override = {}) {
    const double delta = delta_override.value_or(std::exp(-u));
    auto dist = [x_star](double x) {
        double d = std::abs(x - x_star);
        return std::min(d, 1.0 - d);
    };
    return exceedance_identity_check(
        [](SplitMix64& rng) { return rng.uniform(); },
        [&map](double x) { return map.apply(x); },
        [&dist](double x) { return -std::log(std::max(dist(x), 1e-300)); },
        [&dist, delta](double x) { return dist(x) < delta; }, u, t, N, seed);
}

// Cat-map instance: phi = -log d(p, segment).
inline ExceedanceReport exceedance_check_catmap(const SegmentTarget& seg, double u, int t,
                                                std::size_t N, std::uint64_t seed,
                                                std::optional<double> delta_override = {}) {
    const double delta = delta_override.value_or(std::exp(-u));
    return exceedance_identity_check(
        [](SplitMix64& rng) {
            CatPoint p{rng.uniform(), rng.uniform()};
            return p;
        },
        [](const CatPoint& p) { return catmap_step(p); },
        [&seg](const CatPoint& p) {
            return -std::log(std::max(catmap_distance(p, seg), 1e-300));
        },
        [&seg, delta](const CatPoint& p) { return catmap_distance(p, seg) < delta; }, u, t, N,
        seed);
}

// ---- Cat-map zeta estimates ----

struct CatMapOpenSystem {
    SegmentTarget seg;
    double delta = 0.0;
    using State = CatPoint;

    State initial(SplitMix64& rng) const { return {rng.uniform(), rng.uniform()}; }
    State step(const State& p, SplitMix64&) const { return catmap_step(p); }
    bool in_hole(const State& p) const { return catmap_distance(p, seg) < delta; }
};

struct ZetaRow {
    int n = 0;
    double u = 0.0;
    double delta = 0.0;
    double mu_tube = 0.0;  // 2 delta l + pi delta^2
    double mu_mc = 0.0;    // hit-frequency estimate
    double mu_mc_err = 0.0;
    double zeta_rate = 0.0;       // fitted escape rate
    double zeta_err = 0.0;
    double normalized = 0.0;      // zeta_rate / mu_tube
    double normalized_err = 0.0;
    double entry_normalized = 0.0; // (1 - exp(-rate)) / mu_tube
    int fit_lo = 0;
    int fit_hi = 0;
    bool flagged = false;
};

struct ZetaTable {
    SegmentTarget seg;
    std::vector<ZetaRow> rows;
};

inline ZetaTable catmap_zeta_estimate(const SegmentTarget& seg, const ThresholdScheme& scheme,
                                      const std::vector<int>& n_list, int t_max, std::size_t N,
                                      std::uint64_t seed) {
    if (N < 10000) throw std::invalid_argument("catmap_zeta_estimate: N >= 10^4 required");
    if (n_list.empty()) throw std::invalid_argument("catmap_zeta_estimate: empty n list");
    ZetaTable table;
    table.seg = seg;
    for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
        const int n = n_list[idx];
        ZetaRow row;
        row.n = n;
        row.u = scheme.u_for(n, idx);
        row.delta = std::exp(-row.u);
        row.mu_tube = 2.0 * row.delta * seg.length + 3.14159265358979323846 * row.delta * row.delta;

        // Coarse self-overlap / tube-formula check by hit sampling: the
        // analytic area must agree with the empirical frequency within 4
        // standard errors, else the delta-tube wraps onto itself.
        CatMapOpenSystem sys{seg, row.delta};
        {
            SplitMix64 rng = SplitMix64::for_stream(seed, 1000003 + idx);
            std::size_t hits = 0;
            const std::size_t area_samples = N;
            for (std::size_t i = 0; i < area_samples; ++i) {
                CatPoint p{rng.uniform(), rng.uniform()};
                if (sys.in_hole(p)) ++hits;
            }
            row.mu_mc = static_cast<double>(hits) / static_cast<double>(area_samples);
            row.mu_mc_err = std::sqrt(
                std::max(0.0, row.mu_mc * (1.0 - row.mu_mc) / static_cast<double>(area_samples)));
            if (std::abs(row.mu_mc - row.mu_tube) > 4.0 * std::max(row.mu_mc_err, 1e-12))
                throw std::runtime_error(
                    "catmap_zeta_estimate: tube area disagrees with the hit frequency; "
                    "self-overlap suspected at this delta");
        }

        McOptions opt;
        opt.t_max = t_max;
        opt.samples = N;
        opt.seed = seed;
        opt.stream_base = 64 * (idx + 1);
        SurvivalCurve curve = survival_mc(sys, opt);

        int t_lo = static_cast<int>(std::min<double>(1.5 / row.mu_tube, t_max / 2.0));
        int t_hi = t_max;
        while (t_hi > t_lo && curve.survivors[t_hi] < 200) --t_hi;
        if (t_hi <= t_lo + 4) {
            row.flagged = true;
            t_lo = 0;
            t_hi = std::max(1, t_hi);
        }
        RateEstimate est = estimate_rate_mc(curve, t_lo, t_hi);
        row.zeta_rate = est.rate;
        row.zeta_err = est.max_residual;
        row.fit_lo = est.fit_lo;
        row.fit_hi = est.fit_hi;
        row.flagged = row.flagged || est.flagged;
        row.normalized = row.zeta_rate / row.mu_tube;
        row.normalized_err = row.zeta_err / row.mu_tube;
        row.entry_normalized = -std::expm1(-row.zeta_rate) / row.mu_tube;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace erl
