// Cylinder unions, shifted intersections, neighborhood systems.

#include <catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "erl/cylinder.hpp"
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
} // namespace

TEST_CASE("make_cylinder_union sorts, dedups, validates") {
    const CylinderUnion U =
        erl::make_cylinder_union(fair(), 2, {{1, 1}, {0, 0}, {1, 1}});
    REQUIRE(U.size() == 2);
    CHECK(U.words[0] == Word{0, 0});
    CHECK(U.words[1] == Word{1, 1});
    CHECK_THROWS_AS(erl::make_cylinder_union(fair(), 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(erl::make_cylinder_union(fair(), 2, {{0}}), std::invalid_argument);
    CHECK_THROWS_AS(erl::make_cylinder_union(golden(), 2, {{1, 1}}), std::invalid_argument);
}

TEST_CASE("measure of unions") {
    CHECK(erl::measure_of(fair(), erl::make_cylinder_union(fair(), 2, {{0, 0}, {1, 1}})) ==
          Catch::Approx(0.5));
    CHECK(erl::measure_of(golden(), erl::make_cylinder_union(golden(), 2, {{1, 0}})) ==
          Catch::Approx(1.0 / 3.0));
    const MarkovMeasure mu3 = MarkovMeasure::uniform(3);
    CHECK(erl::measure_of(mu3, erl::make_cylinder_union(
                                   mu3, 2, {{0, 0}, {0, 2}, {2, 0}, {2, 2}})) ==
          Catch::Approx(4.0 / 9.0));
}

TEST_CASE("shifted intersection, overlapping windows") {
    const CylinderUnion U = erl::make_cylinder_union(fair(), 1, {{0}});
    const CylinderUnion V = erl::shifted_intersection(fair(), U, 1);
    REQUIRE(V.depth == 2);
    REQUIRE(V.size() == 1);
    CHECK(V.words[0] == Word{0, 0});

    const CylinderUnion W = erl::make_cylinder_union(fair(), 2, {{0, 1}});
    CHECK(erl::shifted_intersection(fair(), W, 1).empty());
    const CylinderUnion W2 = erl::shifted_intersection(fair(), W, 2);
    REQUIRE(W2.size() == 1);
    CHECK(W2.words[0] == Word{0, 1, 0, 1});
    CHECK(erl::measure_of(fair(), W2) == Catch::Approx(1.0 / 16.0));
}

TEST_CASE("shifted intersection respects admissibility") {
    const CylinderUnion U = erl::make_cylinder_union(golden(), 1, {{1}});
    CHECK(erl::shifted_intersection(golden(), U, 1).empty());
    const CylinderUnion V = erl::shifted_intersection(golden(), U, 2);
    REQUIRE(V.size() == 1);
    CHECK(V.words[0] == Word{1, 0, 1});
    CHECK_THROWS_AS(erl::shifted_intersection(golden(), U, 0), std::invalid_argument);
}

TEST_CASE("period detectors") {
    CHECK(erl::period(fair(), erl::make_cylinder_union(fair(), 1, {{0}}), 8) == 1);
    CHECK(erl::period(fair(), erl::make_cylinder_union(fair(), 2, {{0, 1}}), 8) == 2);
    CHECK(erl::period(golden(), erl::make_cylinder_union(golden(), 1, {{1}}), 8) == 2);
    CHECK(erl::essential_period(golden(), erl::make_cylinder_union(golden(), 1, {{1}}), 8) == 2);
    const CylinderUnion long_block =
        erl::make_cylinder_union(fair(), 6, {{1, 0, 0, 0, 0, 0}});
    CHECK_FALSE(erl::period(fair(), long_block, 5).has_value());
    CHECK(erl::period(fair(), long_block, 6) == 6);
}

TEST_CASE("outer approximation and refine") {
    const CylinderUnion U = erl::make_cylinder_union(fair(), 3, {{0, 1, 0}, {0, 1, 1}});
    const CylinderUnion outer = erl::outer_approximation(fair(), U, 2);
    REQUIRE(outer.size() == 1);
    CHECK(outer.words[0] == Word{0, 1});
    CHECK_THROWS_AS(erl::outer_approximation(fair(), U, 4), std::invalid_argument);

    const CylinderUnion fine = erl::refine(fair(), U, 6);
    CHECK(fine.depth == 6);
    CHECK(erl::measure_of(fair(), fine) == Catch::Approx(erl::measure_of(fair(), U)));
}

TEST_CASE("neighborhood system validation") {
    std::vector<CylinderUnion> nested = {
        erl::make_cylinder_union(fair(), 1, {{0}}),
        erl::make_cylinder_union(fair(), 2, {{0, 0}}),
        erl::make_cylinder_union(fair(), 3, {{0, 0, 0}}),
    };
    const erl::NeighborhoodSystem ns =
        erl::make_neighborhood_system(fair(), nested, "zero blocks");
    REQUIRE(ns.entries.size() == 3);
    CHECK(ns.entries[2].kappa == 3);

    std::vector<CylinderUnion> broken = {
        erl::make_cylinder_union(fair(), 1, {{0}}),
        erl::make_cylinder_union(fair(), 2, {{1, 1}}), // not inside [0]
    };
    CHECK_THROWS_AS(erl::make_neighborhood_system(fair(), broken, "x"), std::invalid_argument);

    std::vector<CylinderUnion> growing = {
        erl::make_cylinder_union(fair(), 2, {{0, 0}}),
        erl::make_cylinder_union(fair(), 2, {{0, 0}, {0, 1}}),
    };
    CHECK_THROWS_AS(erl::make_neighborhood_system(fair(), growing, "x"), std::invalid_argument);

    CHECK_THROWS_AS(erl::make_neighborhood_system(fair(), {}, "x"), std::invalid_argument);
}

TEST_CASE("cylinder union json round trip") {
    const CylinderUnion U = erl::make_cylinder_union(fair(), 2, {{0, 1}, {1, 0}});
    const nlohmann::json doc = erl::to_json(U);
    const CylinderUnion back = erl::cylinder_union_from_json(fair(), doc);
    CHECK(back == U);
    CHECK_THROWS_AS(erl::cylinder_union_from_json(fair(), nlohmann::json{{"depth", 2}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        erl::cylinder_union_from_json(
            golden(), nlohmann::json{{"depth", 2}, {"words", {"11"}}}),
        std::invalid_argument);
}

TEST_CASE("goodness diagnostics on the zero-block family") {
    std::vector<CylinderUnion> levels;
    for (int n = 1; n <= 12; ++n)
        levels.push_back(erl::make_cylinder_union(fair(), n, {Word(n, 0)}));
    const erl::NeighborhoodSystem ns =
        erl::make_neighborhood_system(fair(), levels, "zero blocks");
    const erl::GoodnessReport rep = erl::goodness_check(ns, fair(), 0.5, 2.0);
    CHECK(rep.epsilon_used == Catch::Approx(0.5));
    CHECK(rep.trend.size() == 12);
    // kappa_n mu(U_n)^eps = n 2^{-n/2} decays eventually.
    CHECK(rep.trend.back() < rep.trend.front());
    CHECK(rep.passes_condition_1 == erl::CheckFlag::pass);
    CHECK_FALSE(rep.pairs.empty());
    CHECK_THROWS_AS(erl::goodness_check(ns, fair(), 1.5, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(erl::goodness_check(ns, fair(), 0.5, 1.0), std::invalid_argument);
}
