#include <doctest.h>

#include "oracles.hpp"
#include "plumbing/generate.hpp"
#include "plumbing/moves.hpp"

using namespace plumbing;

namespace {

Plumbing path(Weight a, Weight b) { return Plumbing({a, b}, {{0, 1}}); }
Plumbing chain(std::vector<Weight> w) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < static_cast<int>(w.size()); ++i) edges.emplace_back(i, i + 1);
    return Plumbing(std::move(w), edges);
}

}  // namespace

TEST_SUITE("moves") {

TEST_CASE("type (a) blow-up splits an edge") {
    const Plumbing down = blow_up_a(path(2, 3), 0, 1, -1);
    CHECK(down == Plumbing({1, 2, -1}, {{0, 2}, {1, 2}}));
    CHECK(homology_order(down) == 5);
    const Plumbing up = blow_up_a(path(2, 3), 0, 1, 1);
    CHECK(up == Plumbing({3, 4, 1}, {{0, 2}, {1, 2}}));
    CHECK(determinant(up) == 5);
    CHECK_THROWS(blow_up_a(Plumbing::single(3), 0, 0, -1));
}

TEST_CASE("type (b) blow-up attaches a leaf") {
    const Plumbing plus = blow_up_b(Plumbing::single(3), 0, 1);
    CHECK(plus == path(4, 1));
    CHECK(determinant(plus) == 3);
    const Plumbing minus = blow_up_b(Plumbing::single(3), 0, -1);
    CHECK(minus == path(2, -1));
    CHECK(determinant(minus) == -3);
    const Plumbing e8 = e8_plumbing();
    const Plumbing grown = blow_up_b(e8, 6, -1);
    CHECK(grown.size() == 9);
    CHECK(homology_order(grown) == 1);
    CHECK_THROWS(blow_up_b(e8, 8, 1));
}

TEST_CASE("type (c) blow-up attaches an (e, 0) chain") {
    const Plumbing plus = blow_up_c(Plumbing::single(7), 0, 1);
    CHECK(plus == chain({7, 1, 0}));
    CHECK(determinant(plus) == -7);
    CHECK(homology_order(blow_up_c(Plumbing::single(7), 0, -1)) == 7);
    const Plumbing twice = blow_up_c(blow_up_c(e8_plumbing(), 3, 1), 0, -1);
    CHECK(twice.size() == 12);
    CHECK(homology_order(twice) == 1);
}

TEST_CASE("blow-down legality") {
    const Plumbing zoz = chain({0, 1, 0});
    CHECK(legal_blow_down_kind(zoz, 1) == BlowDownKind::A);
    CHECK(legal_blow_down_kind(path(4, -1), 1) == BlowDownKind::B);
    CHECK(legal_blow_down_kind(chain({7, 1, 0}), 2) == BlowDownKind::C);
    // 0-leaf whose neighbor has degree 3: removing both would disconnect.
    const Plumbing branching({5, 2, 0, 3}, {{0, 1}, {1, 2}, {1, 3}});
    CHECK_FALSE(legal_blow_down_kind(branching, 2).has_value());
    // Never empty the graph.
    CHECK_FALSE(legal_blow_down_kind(Plumbing::single(1), 0).has_value());
    CHECK_FALSE(legal_blow_down_kind(path(1, 0), 1).has_value());
}

TEST_CASE("blow-downs invert the blow-up examples") {
    const auto a = blow_down(chain({0, 1, 0}), 1);
    REQUIRE(a);
    CHECK(*a == path(-1, -1));
    CHECK(determinant(*a) == 0);
    CHECK(determinant(chain({0, 1, 0})) == 0);
    CHECK(*blow_down(path(4, 1), 1) == Plumbing::single(3));
    CHECK(*blow_down(chain({7, 1, 0}), 2) == Plumbing::single(7));
    CHECK_FALSE(blow_down(path(4, 2), 1));
}

TEST_CASE("apply_action contract") {
    const Plumbing p = Plumbing::single(3);
    const auto up = apply_action(p, {0, Selector::BUpPlus});
    CHECK(up.done);
    CHECK(up.result == path(4, 1));
    const auto down = apply_action(p, {0, Selector::Down});
    CHECK_FALSE(down.done);
    CHECK(down.result == p);
    const auto a_up = apply_action(p, {0, Selector::AUp});
    CHECK_FALSE(a_up.done);
    CHECK(a_up.result == p);
    CHECK_THROWS(apply_action(p, {1, Selector::BUpPlus}));
}

TEST_CASE("AUp in the action space uses the lowest-indexed neighbor") {
    const Plumbing star({0, 2, 3, 4}, {{0, 3}, {0, 1}, {0, 2}});
    const auto moved = apply_action(star, {0, Selector::AUp});
    REQUIRE(moved.done);
    CHECK(moved.result == blow_up_a(star, 0, 1, -1));
}

TEST_CASE("enumerate_legal_actions") {
    const auto single = enumerate_legal_actions(Plumbing::single(3));
    CHECK(single == std::vector<RlAction>{{0, Selector::BUpPlus},
                                          {0, Selector::BUpMinus},
                                          {0, Selector::CUpPlus},
                                          {0, Selector::CUpMinus}});
    const auto leaf = enumerate_legal_actions(path(4, 1));
    CHECK(std::find(leaf.begin(), leaf.end(), RlAction{1, Selector::Down}) != leaf.end());
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Plumbing p = oracle::random_tree(rng, 1 + static_cast<int>(rng.index(12)), -2, 2);
        const auto legal = enumerate_legal_actions(p);
        CHECK(legal.size() <= static_cast<std::size_t>(6 * p.size()));
        for (const auto& a : legal) CHECK(apply_action(p, a).done);
    }
}

TEST_CASE("categories follow the applied move") {
    const Plumbing p = chain({2, 1, 3, -1});
    CHECK(categorize(p, {0, Selector::AUp}) == MoveCategory::AUp);
    CHECK(categorize(p, {0, Selector::CUpMinus}) == MoveCategory::CUpMinus);
    CHECK(categorize(p, {1, Selector::Down}) == MoveCategory::ADown);
    CHECK(categorize(p, {3, Selector::Down}) == MoveCategory::BDown);
    CHECK(categorize(chain({7, 1, 0}), {2, Selector::Down}) == MoveCategory::CDown);
    // Illegal downs are attributed by shape.
    CHECK(categorize(p, {2, Selector::Down}) == MoveCategory::ADown);
    CHECK(categorize(chain({5, 2, 0}), {0, Selector::Down}) == MoveCategory::BDown);
}

TEST_CASE("successor complexity matches the applied move") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Plumbing p = oracle::random_tree(rng, 1 + static_cast<int>(rng.index(10)), -2, 2);
        for (const auto& a : enumerate_legal_actions(p))
            CHECK(successor_complexity(p, a) == complexity(apply_action(p, a).result));
    }
}

TEST_CASE("legal random moves preserve |det| and validity; failures leave the graph untouched") {
    Rng rng(5);
    Plumbing p = oracle::random_tree(rng, 6, -5, 5);
    int applied = 0;
    for (int draw = 0; draw < 10000; ++draw) {
        const auto before = homology_order(p);
        auto r = random_neumann_move(p, rng);
        if (!r.done) {
            CHECK(r.result == p);
            CHECK_FALSE(r.applied.has_value());
            continue;
        }
        ++applied;
        REQUIRE(validate(r.result).ok);
        REQUIRE(homology_order(r.result) == before);
        const int delta = r.result.size() - p.size();
        const auto cat = static_cast<int>(r.applied->category);
        const bool is_c = cat == 4 || cat == 5 || cat == 8;
        CHECK(std::abs(delta) == (is_c ? 2 : 1));
        CHECK((delta > 0) == (cat <= 5));
        p = std::move(r.result);
        if (p.size() > 40) p = oracle::random_tree(rng, 6, -5, 5);
    }
    CHECK(applied > 4000);
}

TEST_CASE("random moves on a single vertex") {
    // Only (b) and (c) blow-ups can succeed on an isolated vertex.
    Rng rng(6);
    for (int draw = 0; draw < 500; ++draw) {
        const auto r = random_neumann_move(Plumbing::single(4), rng);
        if (r.done) CHECK(static_cast<int>(r.applied->category) >= 2);
        if (r.done) CHECK(static_cast<int>(r.applied->category) <= 5);
    }
}

TEST_CASE("random moves are reproducible") {
    const Plumbing p = e8_plumbing();
    Rng a(77), b(77);
    for (int i = 0; i < 200; ++i) {
        const auto ra = random_neumann_move(p, a);
        const auto rb = random_neumann_move(p, b);
        CHECK(ra.result == rb.result);
    }
}

TEST_CASE("blow-up then blow-down round-trips to an isomorphic graph") {
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const Plumbing p = oracle::random_tree(rng, 1 + static_cast<int>(rng.index(10)), -4, 4);
        const int v = static_cast<int>(rng.index(p.size()));
        const int sign = rng.coin() ? 1 : -1;
        const int last = p.size();
        CHECK(is_isomorphic(*blow_down(blow_up_b(p, v, sign), last), p));
        CHECK(is_isomorphic(*blow_down(blow_up_c(p, v, sign), last + 1), p));
        if (p.degree(v) > 0) {
            const int u = p.neighbors(v)[rng.index(p.degree(v))];
            CHECK(is_isomorphic(*blow_down(blow_up_a(p, v, u, sign), last), p));
        }
    }
}

TEST_CASE("action JSON round-trips") {
    const RlAction a{3, Selector::CUpMinus};
    CHECK(to_json(a) == nlohmann::json::parse(R"({"node":3,"selector":"CUpMinus"})"));
    CHECK(action_from_json(to_json(a)) == a);
    for (int s = 0; s < kSelectorCount; ++s)
        CHECK(selector_from_name(selector_name(static_cast<Selector>(s))) == static_cast<Selector>(s));
}

}  // TEST_SUITE
