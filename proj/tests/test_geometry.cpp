// Interval geometry, metric-hole sandwiches, and the torus automorphism.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "erl/escape.hpp"
#include "erl/geometry.hpp"

using erl::CatPoint;
using erl::IntervalMarkovMap;
using erl::MarkovMeasure;
using erl::Word;

TEST_CASE("binary and ternary encodings") {
    const IntervalMarkovMap doubling{2};
    CHECK(erl::encode(doubling, 0.3125, 4) == Word{0, 1, 0, 1});
    const auto [lo, hi] = erl::decode(doubling, Word{0, 1, 0, 1});
    CHECK(lo == Catch::Approx(0.3125));
    CHECK(hi == Catch::Approx(0.375));
    CHECK_THROWS_AS(erl::encode(doubling, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(erl::decode(doubling, Word{0, 2}), std::invalid_argument);

    const IntervalMarkovMap tripling{3};
    CHECK(erl::encode(tripling, 0.5, 3) == Word{1, 1, 1});
    CHECK(erl::decode(tripling, Word{2}).first == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("middle-thirds covers") {
    const erl::NeighborhoodSystem ns = erl::cantor_neighborhoods(4);
    REQUIRE(ns.entries.size() == 4);
    for (int n = 1; n <= 4; ++n) {
        CHECK(ns.entries[n - 1].kappa == n);
        CHECK(ns.entries[n - 1].hole.size() == static_cast<std::size_t>(1 << n));
        CHECK(erl::measure_of(MarkovMeasure::uniform(3), ns.entries[n - 1].hole) ==
              Catch::Approx(std::pow(2.0 / 3.0, n)));
    }
    CHECK_FALSE(ns.provenance.empty());
    CHECK_THROWS_AS(erl::cantor_neighborhoods(0), std::invalid_argument);
}

TEST_CASE("metric hole sandwich brackets the hole") {
    const IntervalMarkovMap doubling{2};
    const erl::MetricHole hole = erl::make_metric_hole({{0.0, 0.3}});
    const erl::SandwichResult s = erl::metric_hole_sandwich(doubling, hole, 1.0 / 16.0);
    CHECK(s.kappa == 4);
    const MarkovMeasure mu2 = MarkovMeasure::uniform(2);
    CHECK(erl::measure_of(mu2, s.inner) == Catch::Approx(3.0 / 16.0));
    CHECK(erl::measure_of(mu2, s.outer) == Catch::Approx(5.0 / 16.0));
    CHECK(s.gap == Catch::Approx(2.0 / 16.0));

    // The gap is at most two boundary cells per interval endpoint.
    const erl::MetricHole wide = erl::make_metric_hole({{0.2, 0.8}});
    const erl::SandwichResult w = erl::metric_hole_sandwich(doubling, wide, 0.1);
    CHECK(w.kappa == 4);
    CHECK(w.gap <= 4.0 / 16.0 + 1e-12);

    CHECK_THROWS_AS(erl::metric_hole_sandwich(doubling, hole, 0.0), std::invalid_argument);
    const erl::MetricHole thin = erl::make_metric_hole({{0.3, 0.31}});
    CHECK_THROWS_AS(erl::metric_hole_sandwich(doubling, thin, 0.5), std::runtime_error);
    CHECK_THROWS_AS(erl::make_metric_hole({}), std::invalid_argument);
    CHECK_THROWS_AS(erl::make_metric_hole({{0.5, 0.4}}), std::invalid_argument);
}

TEST_CASE("interval open system matches the hole length") {
    erl::IntervalOpenSystem sys{IntervalMarkovMap{2}, erl::make_metric_hole({{0.0, 0.25}})};
    erl::McOptions opt;
    opt.t_max = 10;
    opt.samples = 40000;
    opt.seed = 23;
    const erl::SurvivalCurve curve = erl::survival_mc(sys, opt);
    CHECK(curve.values[1] == Catch::Approx(0.75).margin(0.01));
}

TEST_CASE("cat map basics") {
    CHECK(erl::catmap_lambda() == Catch::Approx((3.0 + std::sqrt(5.0)) / 2.0));
    const CatPoint fixed = erl::catmap_step({0.0, 0.0});
    CHECK(fixed.x == 0.0);
    CHECK(fixed.y == 0.0);
    const CatPoint p = erl::catmap_step({0.25, 0.5});
    CHECK(p.x == Catch::Approx(0.0)); // 2*0.25 + 0.5 = 1 wraps
    CHECK(p.y == Catch::Approx(0.75));
    const std::vector<CatPoint> orbit = erl::catmap_iterate({0.1, 0.2}, 5);
    REQUIRE(orbit.size() == 6);
    CHECK(orbit[1].x == Catch::Approx(0.4));
    CHECK_THROWS_AS(erl::catmap_iterate({0.1, 0.2}, -1), std::invalid_argument);
}

TEST_CASE("distance to a segment on the torus") {
    const erl::SegmentTarget seg = erl::make_segment({0.2, 0.2}, 1.0, 0.0, 0.4);
    CHECK(erl::catmap_distance({0.4, 0.5}, seg) == Catch::Approx(0.3));
    CHECK(erl::catmap_distance({0.7, 0.2}, seg) == Catch::Approx(0.1));
    CHECK(erl::catmap_distance({0.95, 0.2}, seg) == Catch::Approx(0.25)); // wraps to p1
    CHECK(erl::catmap_distance({0.3, 0.2}, seg) == Catch::Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(erl::make_segment({0.0, 0.0}, 0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(erl::make_segment({0.0, 0.0}, 1.0, 0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(erl::make_aligned_segment({0.0, 0.0}, "diagonal", 1.0),
                    std::invalid_argument);
}

TEST_CASE("segment and scheme json parsing") {
    const erl::SegmentTarget s1 = erl::segment_from_json(
        {{"p1", {0.1, 0.2}}, {"slope", 1.0}, {"length", 0.5}});
    CHECK(s1.length == Catch::Approx(0.5));
    CHECK(s1.vx == Catch::Approx(s1.vy));
    const erl::SegmentTarget s2 = erl::segment_from_json(
        {{"p1", {0.0, 0.0}}, {"angle", "unstable"}, {"length", 0.5}});
    CHECK(s2.alignment == "unstable");
    CHECK_THROWS_AS(erl::segment_from_json({{"p1", {0.0, 0.0}}, {"length", 0.5}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(erl::segment_from_json({{"p1", {0.0, 0.0}},
                                            {"slope", 1.0},
                                            {"angle", 0.5},
                                            {"length", 0.5}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        erl::segment_from_json(
            {{"p1", {0.0, 0.0}}, {"slope", 1.0}, {"length", 0.5}, {"color", "red"}}),
        std::invalid_argument);

    const erl::ThresholdScheme logn = erl::scheme_from_json({{"u", "log_n"}});
    CHECK(logn.u_for(8, 0) == Catch::Approx(std::log(8.0)));
    CHECK_THROWS_AS(logn.u_for(1, 0), std::invalid_argument);
    const erl::ThresholdScheme expl = erl::scheme_from_json({{"u", {0.5, 1.0, 1.5}}});
    CHECK(expl.u_for(99, 2) == Catch::Approx(1.5));
    CHECK_THROWS_AS(expl.u_for(99, 3), std::invalid_argument);
    CHECK_THROWS_AS(erl::scheme_from_json({{"u", {1.0, 0.5}}}), std::invalid_argument);
    CHECK_THROWS_AS(erl::scheme_from_json({{"u", "sqrt_n"}}), std::invalid_argument);
    CHECK_THROWS_AS(erl::scheme_from_json(nlohmann::json::object()), std::invalid_argument);
}

TEST_CASE("exceedance identity holds and the control breaks it") {
    const erl::SegmentTarget seg = erl::make_segment({0.85, 0.94}, 2.0, 1.0, 0.3);
    const double u = std::log(10.0);
    const erl::ExceedanceReport ok = erl::exceedance_check_catmap(seg, u, 30, 20000, 5);
    CHECK(ok.samples == 20000);
    CHECK(ok.mismatches == 0);
    CHECK(ok.pass);
    const erl::ExceedanceReport broken =
        erl::exceedance_check_catmap(seg, u, 30, 20000, 5, 2.0 * std::exp(-u));
    CHECK(broken.mismatches > 0);
    CHECK_FALSE(broken.pass);
}

TEST_CASE("zeta table is structurally sound and reproducible") {
    const erl::SegmentTarget seg = erl::make_aligned_segment({0.0, 0.0}, "unstable", 0.5);
    const erl::ThresholdScheme scheme;
    const erl::ZetaTable table =
        erl::catmap_zeta_estimate(seg, scheme, {8, 16}, 300, 20000, 9);
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows) {
        CHECK(row.u == Catch::Approx(std::log(static_cast<double>(row.n))));
        CHECK(row.delta == Catch::Approx(1.0 / row.n));
        CHECK(row.mu_tube ==
              Catch::Approx(2.0 * row.delta * 0.5 + 3.14159265358979323846 * row.delta * row.delta));
        CHECK(row.zeta_rate > 0.0);
        CHECK(row.normalized > 0.0);
    }
    const erl::ZetaTable again =
        erl::catmap_zeta_estimate(seg, scheme, {8, 16}, 300, 20000, 9);
    CHECK(again.rows[0].zeta_rate == table.rows[0].zeta_rate);
    CHECK(again.rows[1].mu_mc == table.rows[1].mu_mc);

    CHECK_THROWS_AS(erl::catmap_zeta_estimate(seg, scheme, {8, 16}, 300, 100, 9),
                    std::invalid_argument);
    CHECK_THROWS_AS(erl::catmap_zeta_estimate(seg, scheme, {}, 300, 20000, 9),
                    std::invalid_argument);
    CHECK_THROWS_AS(erl::catmap_zeta_estimate(seg, scheme, {1, 8}, 300, 20000, 9),
                    std::invalid_argument);
}
