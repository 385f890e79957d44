// Escape rates: exact spectral route, Monte Carlo route, audits, bounds.
//
// Closed forms used as oracles (all derivable by hand):
//   fair coin, U = [1]:        S(t) = 2^-t, rho = log 2 (both routes)
//   uniform 3, U = [0]u[2]:    S(t) = 3^-t, rho = log 3
//   golden mean, U = [1]:      S(t) = (4/3) 2^-t (t >= 1), S_U(t) = 2^-(t-1)
//   fair coin, U = [01]:       S(t) = (t+2) 2^-(t+1), defective eigensystem
//   uniform 3, two-symbol-free depth-2 cover: rho = log(3/2)

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "erl/cylinder.hpp"
#include "erl/escape.hpp"
#include "erl/markov.hpp"

using erl::CylinderUnion;
using erl::MarkovMeasure;
using erl::Word;

namespace {
const MarkovMeasure& fair() {
    static const MarkovMeasure mu = MarkovMeasure::bernoulli({0.5, 0.5});
    return mu;
}
const MarkovMeasure& golden() {
    static const MarkovMeasure mu = MarkovMeasure::from_transitions({{0.5, 0.5}, {1.0, 0.0}});
    return mu;
}
const MarkovMeasure& mu3() {
    static const MarkovMeasure mu = MarkovMeasure::uniform(3);
    return mu;
}
CylinderUnion cyl(const MarkovMeasure& mu, int depth, std::vector<Word> words) {
    return erl::make_cylinder_union(mu, depth, std::move(words));
}
} // namespace

TEST_CASE("survival of the fair coin against a single symbol") {
    const CylinderUnion U = cyl(fair(), 1, {{1}});
    const erl::SurvivalCurve S = erl::survival_exact(fair(), U, 20);
    CHECK(S.method == "exact");
    for (int t = 0; t <= 20; ++t)
        CHECK(S.values[t] == Catch::Approx(std::pow(2.0, -t)).margin(1e-14));
    const erl::SurvivalCurve SU = erl::survival_exact(fair(), U, 20, true);
    for (int t = 0; t <= 20; ++t)
        CHECK(SU.values[t] == Catch::Approx(std::pow(2.0, -t)).margin(1e-14));
    CHECK(erl::escape_rate_exact(fair(), U).rate == Catch::Approx(std::log(2.0)));
    CHECK(erl::conditional_escape_rate(fair(), U).rate == Catch::Approx(std::log(2.0)));
}

TEST_CASE("two-symbol hole on the full 3-shift") {
    const CylinderUnion U = cyl(mu3(), 1, {{0}, {2}});
    const erl::SurvivalCurve S = erl::survival_exact(mu3(), U, 15);
    for (int t = 0; t <= 15; ++t)
        CHECK(S.values[t] == Catch::Approx(std::pow(3.0, -t)).margin(1e-14));
    CHECK(erl::escape_rate_exact(mu3(), U).rate == Catch::Approx(std::log(3.0)));
}

TEST_CASE("golden mean survival has an exact prefactor") {
    const CylinderUnion U = cyl(golden(), 1, {{1}});
    const erl::SurvivalCurve S = erl::survival_exact(golden(), U, 20);
    for (int t = 1; t <= 20; ++t)
        CHECK(S.values[t] == Catch::Approx((4.0 / 3.0) * std::pow(2.0, -t)).margin(1e-14));
    const erl::SurvivalCurve SU = erl::survival_exact(golden(), U, 20, true);
    for (int t = 1; t <= 20; ++t)
        CHECK(SU.values[t] == Catch::Approx(std::pow(2.0, -(t - 1))).margin(1e-14));
    CHECK(erl::escape_rate_exact(golden(), U).rate == Catch::Approx(std::log(2.0)));
    CHECK(erl::conditional_escape_rate(golden(), U).rate == Catch::Approx(std::log(2.0)));
}

TEST_CASE("defective eigensystem still gives the right curve and rate") {
    const CylinderUnion U = cyl(fair(), 2, {{0, 1}});
    const erl::SurvivalCurve S = erl::survival_exact(fair(), U, 30);
    for (int t = 0; t <= 30; ++t)
        CHECK(S.values[t] == Catch::Approx((t + 2.0) * std::pow(2.0, -(t + 1.0))).margin(1e-13));
    CHECK(erl::escape_rate_exact(fair(), U).rate == Catch::Approx(std::log(2.0)));
}

TEST_CASE("depth-2 two-symbol-free cover has rate log(3/2)") {
    const CylinderUnion U = cyl(mu3(), 2, {{0, 0}, {0, 2}, {2, 0}, {2, 2}});
    const erl::RateEstimate est = erl::escape_rate_exact(mu3(), U);
    CHECK(est.rate == Catch::Approx(std::log(1.5)).margin(1e-12));
    CHECK_FALSE(est.flagged);
    CHECK(est.rate / erl::measure_of(mu3(), U) == Catch::Approx(2.25 * std::log(1.5)));
}

TEST_CASE("full-alphabet hole escapes instantly") {
    const CylinderUnion U = cyl(fair(), 1, {{0}, {1}});
    CHECK(erl::escape_rate_exact(fair(), U).is_infinite());
    const erl::SurvivalCurve S = erl::survival_exact(fair(), U, 5);
    CHECK(S.values[0] == 1.0);
    CHECK(S.values[1] == 0.0);
}

TEST_CASE("enumeration oracle agrees with the automaton") {
    struct Case {
        const MarkovMeasure* mu;
        CylinderUnion U;
    };
    const std::vector<Case> cases = {
        {&fair(), cyl(fair(), 2, {{0, 1}})},
        {&fair(), cyl(fair(), 3, {{0, 1, 0}, {1, 1, 1}})},
        {&golden(), cyl(golden(), 2, {{1, 0}})},
        {&mu3(), cyl(mu3(), 2, {{0, 0}, {0, 2}, {2, 0}, {2, 2}})},
    };
    for (const auto& c : cases) {
        const erl::SurvivalCurve a = erl::survival_exact(*c.mu, c.U, 10);
        const erl::SurvivalCurve b = erl::survival_by_enumeration(*c.mu, c.U, 10);
        for (int t = 0; t <= 10; ++t)
            CHECK(a.values[t] == Catch::Approx(b.values[t]).margin(1e-13));
        const erl::SurvivalCurve au = erl::survival_exact(*c.mu, c.U, 8, true);
        const erl::SurvivalCurve bu = erl::survival_by_enumeration(*c.mu, c.U, 8, true);
        for (int t = 0; t <= 8; ++t)
            CHECK(au.values[t] == Catch::Approx(bu.values[t]).margin(1e-13));
    }
}

TEST_CASE("entry mass balances the survival decrement") {
    const CylinderUnion U = cyl(fair(), 2, {{0, 1}});
    const double muU = erl::measure_of(fair(), U);
    const erl::SurvivalCurve S = erl::survival_exact(fair(), U, 12);
    const erl::SurvivalCurve SU = erl::survival_exact(fair(), U, 12, true);
    for (int k = 1; k <= 12; ++k)
        CHECK(muU * SU.values[k - 1] == Catch::Approx(S.values[k - 1] - S.values[k]).margin(1e-13));

    const erl::EntryReturnAudit audit = erl::entry_return_identity_audit(fair(), U, 25);
    CHECK(audit.pass);
    CHECK(audit.max_dev_scaling < 1e-10);
    CHECK(audit.max_dev_difference < 1e-10);
    const erl::EntryReturnAudit audit2 =
        erl::entry_return_identity_audit(golden(), cyl(golden(), 2, {{0, 0}}), 25);
    CHECK(audit2.pass);
}

TEST_CASE("monte carlo survival matches the exact rate") {
    const CylinderUnion U = cyl(fair(), 1, {{1}});
    erl::SymbolicOpenSystem sys(fair(), U);
    erl::McOptions opt;
    opt.t_max = 25;
    opt.samples = 100000;
    opt.seed = 7;
    const erl::SurvivalCurve curve = erl::survival_mc(sys, opt);
    CHECK(curve.method == "monte_carlo");
    CHECK(curve.values[0] == 1.0);
    CHECK(curve.values[1] == Catch::Approx(0.5).margin(0.01));
    const erl::RateEstimate est = erl::estimate_rate_mc(curve, 2, 18);
    CHECK(est.rate == Catch::Approx(std::log(2.0)).margin(0.02));

    // Same seed, same curve; different seed, different curve.
    const erl::SurvivalCurve again = erl::survival_mc(sys, opt);
    CHECK(again.values == curve.values);
    opt.seed = 8;
    CHECK(erl::survival_mc(sys, opt).values != curve.values);
}

TEST_CASE("conditional monte carlo agrees with the conditional rate") {
    const CylinderUnion U = cyl(golden(), 1, {{1}});
    erl::SymbolicOpenSystem sys(golden(), U);
    erl::McOptions opt;
    opt.t_max = 25;
    opt.samples = 100000;
    opt.conditional = true;
    opt.seed = 11;
    const erl::SurvivalCurve curve = erl::survival_mc(sys, opt);
    const erl::RateEstimate est = erl::estimate_rate_mc(curve, 2, 18);
    CHECK(est.rate == Catch::Approx(std::log(2.0)).margin(0.03));
}

TEST_CASE("localized rates of the zero-block family extrapolate to one half") {
    std::vector<CylinderUnion> levels;
    for (int n = 2; n <= 10; ++n) levels.push_back(cyl(fair(), n, {Word(n, 0)}));
    const erl::NeighborhoodSystem ns =
        erl::make_neighborhood_system(fair(), levels, "zero blocks");
    const erl::LocalizedRateTable table = erl::localized_escape_rate(fair(), ns);
    REQUIRE(table.rows.size() == 9);
    for (const auto& row : table.rows) {
        CHECK(row.method == "exact");
        CHECK_FALSE(row.flagged);
    }
    CHECK(table.coarse_bound_ok);
    REQUIRE(table.extrapolated_limit.has_value());
    CHECK(*table.extrapolated_limit == Catch::Approx(0.5).margin(0.02));
    // Fibonacci oracle at n = 2: growth of 00-free strings is the golden ratio.
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(table.rows[0].rho == Catch::Approx(std::log(2.0 / phi)).margin(1e-12));
}

TEST_CASE("short entry ratios approach the same limit") {
    std::vector<CylinderUnion> levels;
    for (int n = 2; n <= 10; ++n) levels.push_back(cyl(fair(), n, {Word(n, 0)}));
    const erl::NeighborhoodSystem ns =
        erl::make_neighborhood_system(fair(), levels, "zero blocks");
    const erl::ShortEntryReport rep = erl::short_entry_ratio(fair(), ns, 0.2);
    REQUIRE(rep.rows.size() == 9);
    for (const auto& row : rep.rows) {
        CHECK(row.s_n >= 1);
        CHECK(row.ratio > 0.0);
        CHECK(row.ratio <= 1.0 + 1e-12);
    }
    REQUIRE(rep.limit_candidate.has_value());
    CHECK(*rep.limit_candidate == Catch::Approx(0.5).margin(0.05));
    CHECK_THROWS_AS(erl::short_entry_ratio(fair(), ns, 1.2), std::invalid_argument);
}

TEST_CASE("block inequality audit on an iid system") {
    const CylinderUnion U = cyl(fair(), 2, {{0, 1}});
    const auto phi_zero = [](int) { return 0.0; };
    const erl::BlockBoundReport rep =
        erl::block_bound_audit(fair(), U, 10, 2, {3.0, 4.0, 5.0}, phi_zero);
    CHECK(rep.q == Catch::Approx(5.0));
    CHECK(rep.eta == Catch::Approx(5.0 / 6.0));
    CHECK(rep.delta_value == Catch::Approx(2.0 * 2.0 * 0.25));
    CHECK(rep.violations == 0);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& row : rep.rows) CHECK(row.lhs <= row.rhs + 1e-12);
    CHECK_THROWS_AS(erl::block_bound_audit(fair(), U, 10, 5, {3.0}, phi_zero),
                    std::invalid_argument);
    CHECK_THROWS_AS(erl::block_bound_audit(fair(), U, 10, 2, {2.0}, phi_zero),
                    std::invalid_argument);
}

TEST_CASE("difference sequences decay at the same rate") {
    std::vector<double> geometric;
    for (int k = 0; k < 40; ++k) geometric.push_back(3.0 * std::pow(0.8, k));
    const erl::DifferenceRateReport rep = erl::rate_of_difference_sequence(geometric);
    CHECK(rep.rate_a == Catch::Approx(-std::log(0.8)).margin(1e-6));
    CHECK(rep.rate_b == Catch::Approx(-std::log(0.8)).margin(1e-6));
    CHECK(rep.b_monotone);
    CHECK(rep.agree_valid);
    CHECK(rep.agree);

    CHECK_THROWS_AS(erl::rate_of_difference_sequence({1.0, 0.5}), std::invalid_argument);
    std::vector<double> rising = geometric;
    rising[5] = rising[4] * 2.0;
    CHECK_THROWS_AS(erl::rate_of_difference_sequence(rising), std::invalid_argument);
}

TEST_CASE("survival curves from a real survival function are monotone") {
    const CylinderUnion U = cyl(mu3(), 2, {{0, 0}, {0, 2}, {2, 0}, {2, 2}});
    const erl::SurvivalCurve S = erl::survival_exact(mu3(), U, 40);
    for (int t = 1; t <= 40; ++t) CHECK(S.values[t] <= S.values[t - 1] + 1e-15);
    // Tail decay matches the spectral rate.
    const double tail = -std::log(S.values[40] / S.values[39]);
    CHECK(tail == Catch::Approx(std::log(1.5)).margin(1e-6));
}
