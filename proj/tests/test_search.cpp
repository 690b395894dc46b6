#include <doctest.h>

#include <map>
#include <queue>
#include <set>

#include "oracles.hpp"
#include "plumbing/generate.hpp"
#include "plumbing/search.hpp"

using namespace plumbing;

namespace {

Plumbing path(Weight a, Weight b) { return Plumbing({a, b}, {{0, 1}}); }

Plumbing chain(std::vector<Weight> w) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < static_cast<int>(w.size()); ++i) edges.emplace_back(i, i + 1);
    return Plumbing(std::move(w), edges);
}

// Plain BFS from g1 alone; distance to the first graph isomorphic to g2.
std::optional<int> one_sided_distance(const Plumbing& g1, const Plumbing& g2, int max_depth) {
    const std::string goal = canonical_key(g2);
    std::set<std::string> seen{canonical_key(g1)};
    std::vector<Plumbing> frontier{g1};
    if (seen.count(goal)) return 0;
    for (int depth = 1; depth <= max_depth; ++depth) {
        std::vector<Plumbing> next;
        for (const auto& p : frontier)
            for (const auto& a : enumerate_moves(p)) {
                Plumbing q = apply_action(p, a).result;
                const std::string key = canonical_key(q);
                if (key == goal) return depth;
                if (seen.insert(key).second) next.push_back(std::move(q));
            }
        frontier = std::move(next);
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("greedy simplify examples") {
    const auto leaf = greedy_simplify(path(4, 1), 10);
    CHECK(leaf.graph == Plumbing::single(3));
    CHECK(leaf.path.size() == 1);
    const auto e8 = greedy_simplify(e8_plumbing(), 10);
    CHECK(e8.graph == e8_plumbing());
    CHECK(e8.path.empty());
    for (const auto& a : enumerate_legal_actions(e8_plumbing())) CHECK(a.selector != Selector::Down);
}

TEST_CASE("greedy and beam never increase complexity and their paths replay") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const Plumbing p = scramble(oracle::random_tree(rng, 5, -4, 4), 15, rng);
        const auto g = greedy_simplify(p, 50);
        CHECK(g.complexity <= complexity(p));
        CHECK(replay(p, g.path) == g.graph);
        const auto b = beam_simplify(p, 4, 20);
        CHECK(b.complexity <= complexity(p));
        CHECK(b.complexity == complexity(b.graph));
        CHECK(replay(p, b.path) == b.graph);
        CHECK(homology_order(b.graph) == homology_order(p));
    }
}

TEST_CASE("beam of width one follows greedy descent") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Plumbing p = scramble(oracle::random_tree(rng, 4, -3, 3), 10, rng);
        CHECK(beam_simplify(p, 1, 30).complexity <= greedy_simplify(p, 30).complexity);
    }
}

TEST_CASE("beam search simplifies E8 to an orientation-matched three-legged star") {
    BeamOptions options;
    options.width = 16;
    options.depth_budget = 40;
    options.max_expansions = 20000;
    const auto result = beam_simplify(e8_plumbing(), options);
    CHECK(result.complexity <= 31);
    CHECK(homology_order(result.graph) == 1);
    CHECK(replay(e8_plumbing(), result.path) == result.graph);
}

TEST_CASE("bidirectional path examples") {
    const auto same = bidirectional_path(e8_plumbing(), e8_plumbing(), 6);
    REQUIRE(same);
    CHECK(same->length() == 0);
    const auto one = bidirectional_path(Plumbing::single(3), path(4, 1), 3);
    REQUIRE(one);
    CHECK(one->length() == 1);
    CHECK(is_isomorphic(replay(Plumbing::single(3), one->first), replay(path(4, 1), one->second)));
}

TEST_CASE("bidirectional path is as short as one-sided BFS") {
    Rng rng(14);
    for (int trial = 0; trial < 12; ++trial) {
        const Plumbing g1 = oracle::random_tree(rng, 1 + static_cast<int>(rng.index(3)), -2, 2);
        const Plumbing g2 = scramble_successful(g1, 1 + static_cast<int>(rng.index(3)), rng);
        const auto found = bidirectional_path(g1, g2, 4);
        const auto expected = one_sided_distance(g1, g2, 4);
        REQUIRE(found.has_value() == expected.has_value());
        if (!found) continue;
        CHECK(static_cast<int>(found->length()) == *expected);
        CHECK(is_isomorphic(replay(g1, found->first), replay(g2, found->second)));
    }
}

TEST_CASE("decide: differing |det| is a proven inequivalence") {
    const Verdict v = decide_equivalence(Plumbing::single(2), Plumbing::single(3));
    CHECK(v.kind == VerdictKind::Inequivalent);
    CHECK(v.witness_first == "2");
    CHECK(v.witness_second == "3");
    CHECK(to_json(v).at("verdict") == "inequivalent");
}

TEST_CASE("decide never proves inequivalent lens spaces equivalent") {
    EffortBudget budget;
    budget.depth_budget = 30;
    const Verdict v = decide_equivalence(lens_chain(7, 1), lens_chain(7, 2), budget);
    CHECK(v.kind == VerdictKind::Unresolved);
}

TEST_CASE("decide proves scrambled copies equivalent with replayable paths") {
    Rng rng(15);
    int proven = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const PairSample pair = equiv_pair(rng, 10);
        const Verdict v = decide_equivalence(pair.g1, pair.g2);
        CHECK(v.kind != VerdictKind::Inequivalent);
        if (v.kind != VerdictKind::Equivalent) continue;
        ++proven;
        CHECK(is_isomorphic(replay(pair.g1, v.paths.first), replay(pair.g2, v.paths.second)));
    }
    CHECK(proven >= 15);
}

TEST_CASE("replay rejects illegal paths") {
    CHECK_THROWS(replay(Plumbing::single(3), {{0, Selector::Down}}));
    CHECK(replay(chain({7, 1, 0}), {{2, Selector::Down}}) == Plumbing::single(7));
}

}  // TEST_SUITE
