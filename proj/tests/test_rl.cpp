#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "plumbing/rl.hpp"

using namespace plumbing;

namespace {

Plumbing chain(std::vector<Weight> w) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < static_cast<int>(w.size()); ++i) edges.emplace_back(i, i + 1);
    return Plumbing(std::move(w), edges);
}

EnvState state_of(Plumbing p, std::int64_t target = 0) { return {std::move(p), 0, target}; }

// Zero-initialized biases put ReLUs exactly on their kink for zero-weight
// vertices; a small shift keeps central differences off the kink.
void jitter(nn::ParamStore& store, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& e : store.entries()) {
        nn::Tensor handle = e.param;
        for (double& v : handle.values()) v += rng.uniform(-0.1, 0.1);
    }
}

}  // namespace

TEST_SUITE("rl") {

TEST_CASE("legal steps pay the negative successor complexity") {
    const StepResult r = env_step(state_of(Plumbing::single(3)), {0, Selector::BUpPlus});
    CHECK(r.legal);
    CHECK(r.next.current == chain({4, 1}));
    CHECK(r.reward == -complexity(chain({4, 1})));
    CHECK(r.reward == -15);
    CHECK(r.next.steps_taken == 1);
}

TEST_CASE("illegal steps cost twice the current complexity and change nothing") {
    const Plumbing single = Plumbing::single(3);
    REQUIRE(complexity(single) == 8);
    const StepResult r = env_step(state_of(single), {0, Selector::Down});
    CHECK_FALSE(r.legal);
    CHECK(r.reward == -16);
    CHECK(r.next.current == single);
    CHECK(r.next.steps_taken == 1);

    Rng rng(1);
    const Plumbing p = oracle::random_tree(rng, 8, -6, 6);
    for (int index = 0; index < 6 * p.size(); ++index) {
        const RlAction a = action_from_index(index);
        const StepResult s = env_step(state_of(p), a);
        if (s.legal) continue;
        CHECK(s.next.current == p);
        CHECK(s.reward == -2 * complexity(p));
    }
}

TEST_CASE("episodes end at the step cap or on reaching the target") {
    const EnvConfig config;
    EnvState state = state_of(Plumbing::single(3), 0);
    for (int t = 1; t <= config.max_steps; ++t) {
        const StepResult r = env_step(state, {0, Selector::Down}, config);
        CHECK(r.done == (t == config.max_steps));
        state = r.next;
    }
    CHECK_THROWS(env_step(state, {0, Selector::Down}, config));

    const StepResult reached = env_step(state_of(chain({4, 1}), 8), {1, Selector::Down});
    CHECK(reached.legal);
    CHECK(reached.done);
    CHECK_THROWS_AS(env_step(state_of(Plumbing::single(3)), {1, Selector::Down}), std::out_of_range);
}

TEST_CASE("reset scrambles a ten-node seed and sets its complexity as the target") {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const EnvState s = env_reset(rng);
        CHECK(s.steps_taken == 0);
        CHECK(s.target_f >= 50);
        CHECK(validate(s.current).ok);
    }
    Rng a(3), b(3);
    CHECK(env_reset(a).current == env_reset(b).current);
    EnvConfig bad;
    bad.max_steps = 0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("action indices round-trip") {
    for (int i = 0; i < 60; ++i) CHECK(action_index(action_from_index(i)) == i);
}

TEST_CASE("policy probabilities sum to one over every action") {
    const ActorCritic model(4, 16);
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Plumbing p = oracle::random_tree(rng, 1 + static_cast<int>(rng.index(15)), -20, 20);
        const auto probs = model.action_probabilities(p);
        REQUIRE(probs.size() == static_cast<std::size_t>(6 * p.size()));
        double total = 0.0;
        for (double x : probs) {
            CHECK(x >= 0.0);
            total += x;
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
        CHECK(action_index(model.greedy_action(p)) ==
              std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
}

TEST_CASE("a zero-parameter policy is uniform and its value is zero") {
    ActorCritic model(6, 8);
    model.params().fill(0.0);
    const Plumbing p = chain({3, -2, 5});
    for (double x : model.action_probabilities(p)) CHECK(x == doctest::Approx(1.0 / 18.0).epsilon(1e-12));
    CHECK(model.value(p) == 0.0);
}

TEST_CASE("sampling follows the distribution") {
    Rng rng(7);
    const std::vector<double> probs{0.1, 0.0, 0.6, 0.3};
    std::vector<int> counts(4, 0);
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) ++counts[sample_index(probs, rng)];
    CHECK(counts[1] == 0);
    for (int i : {0, 2, 3}) {
        const double sigma = std::sqrt(draws * probs[i] * (1 - probs[i]));
        CHECK(std::abs(counts[i] - draws * probs[i]) < 4 * sigma);
    }
}

TEST_CASE("discounted returns") {
    const auto r = discounted_returns({-1, -2, -3}, 0.5);
    CHECK(r[2] == -3.0);
    CHECK(r[1] == -2.0 - 1.5);
    CHECK(r[0] == -1.0 - 0.5 * 3.5);
    const auto scaled = discounted_returns({-100, -100}, 1.0, 0.01);
    CHECK(scaled[0] == doctest::Approx(-2.0));
    CHECK(discounted_returns({}, 0.9).empty());
}

TEST_CASE("actor-critic loss gradients match finite differences") {
    ActorCritic model(8, 6);
    jitter(model.params(), 32);
    Rng rng(9);
    const EpisodeTrace trace = run_episode(model.sampling_policy(), rng);
    REQUIRE(trace.length() > 0);
    // A small reward scale keeps the loss O(1), so differencing roundoff stays
    // well below the smallest gradients.
    A3cConfig config;
    config.reward_scale = 1e-4;
    nn::GradCheckOptions options;
    options.max_per_tensor = 10;
    options.prefix = "policy.";
    const auto policy = nn::grad_check(model.params(), [&] { return a3c_loss(model, trace, config); }, options);
    CAPTURE(policy.worst_param);
    CHECK(policy.checked > 0);
    CHECK(policy.max_rel_error < 1e-4);

    // The advantage is a constant to the actor term, so the value head only
    // receives the critic gradient of sum (R - V)^2.
    std::vector<const Plumbing*> graphs;
    for (const auto& s : trace.states) graphs.push_back(&s);
    const nn::GraphBatch batch = nn::GraphBatch::build(graphs);
    const auto returns = discounted_returns(trace.rewards, config.env.gamma, config.reward_scale);
    auto critic = [&] {
        const nn::Tensor error = nn::sub(nn::Tensor(trace.length(), 1, returns), model.values(batch));
        return nn::sum_all(nn::elemwise_mul(error, error));
    };
    options.prefix = "value.";
    const auto value = nn::grad_check(model.params(), critic, options);
    CHECK(value.checked > 0);
    CHECK(value.max_rel_error < 1e-4);

    model.params().zero_grad();
    a3c_loss(model, trace, config).backward();
    std::vector<std::vector<double>> full;
    for (const auto& e : model.params().entries())
        if (e.name.starts_with("value.")) full.push_back(e.param.grad());
    model.params().zero_grad();
    critic().backward();
    std::size_t k = 0;
    for (const auto& e : model.params().entries()) {
        if (!e.name.starts_with("value.")) continue;
        const auto& g = e.param.grad();
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(full[k][i] == doctest::Approx(g[i]).epsilon(1e-12));
        ++k;
    }
    model.params().zero_grad();
}

TEST_CASE("episode traces replay through the environment") {
    Rng rng(10);
    const EpisodeTrace trace = run_episode(uniform_policy(), rng);
    REQUIRE(trace.length() >= 1);
    CHECK(trace.length() <= 15);
    EnvState state{trace.states.front(), 0, trace.target_f};
    std::int64_t total = 0;
    for (int t = 0; t < trace.length(); ++t) {
        CHECK(state.current == trace.states[t]);
        const StepResult r = env_step(state, trace.actions[t]);
        CHECK(r.reward == trace.rewards[t]);
        CHECK(r.legal == trace.legal[t]);
        CHECK(r.done == (t + 1 == trace.length()));
        total += r.reward;
        state = r.next;
    }
    CHECK(state.current == trace.final_state);
    CHECK(total == trace.total_reward());
}

TEST_CASE("bellman targets with zero discount are the rewards") {
    const QNetwork target(11, 8);
    const Transition a{Plumbing::single(3), {0, Selector::BUpPlus}, -0.15, chain({4, 1}), false};
    const Transition b{chain({4, 1}), {1, Selector::Down}, -0.08, Plumbing::single(3), true};
    const auto zero = bellman_targets(target, {&a, &b}, 0.0);
    CHECK(zero == std::vector<double>{-0.15, -0.08});
    const auto discounted = bellman_targets(target, {&a, &b}, 0.9);
    const auto q = target.q_values(nn::GraphBatch::build(a.next)).values();
    CHECK(discounted[0] == doctest::Approx(-0.15 + 0.9 * *std::max_element(q.begin(), q.end())));
    CHECK(discounted[1] == -0.08);
}

TEST_CASE("q-network greedy action is the argmax") {
    const QNetwork net(12, 8);
    const Plumbing p = chain({2, -3, 1, 4});
    const auto q = net.q_values(nn::GraphBatch::build(p)).values();
    CHECK(action_index(net.greedy_action(p)) == std::max_element(q.begin(), q.end()) - q.begin());
}

TEST_CASE("epsilon schedule decays linearly then holds") {
    DqnConfig config;
    config.episodes = 100;
    CHECK(epsilon_at(config, 0) == doctest::Approx(1.0));
    CHECK(epsilon_at(config, 10) == doctest::Approx(0.525));
    CHECK(epsilon_at(config, 20) == doctest::Approx(0.05));
    CHECK(epsilon_at(config, 99) == doctest::Approx(0.05));
}

TEST_CASE("synchronous actor-critic training is reproducible") {
    A3cConfig config;
    config.workers = 3;
    config.episodes = 9;
    config.seed = 13;
    ActorCritic a(14, 8), b(14, 8);
    const TrainLog la = a3c_train(a, config), lb = a3c_train(b, config);
    REQUIRE(la.episodes.size() == 9);
    for (std::size_t i = 0; i < la.episodes.size(); ++i) CHECK(la.episodes[i].total_reward == lb.episodes[i].total_reward);
    for (std::size_t i = 0; i < a.params().entries().size(); ++i)
        CHECK(a.params().entries()[i].param.values() == b.params().entries()[i].param.values());
    CHECK(a.params().step() > 0);
}

TEST_CASE("a short dqn run updates the network") {
    DqnConfig config;
    config.episodes = 12;
    config.warmup_steps = 40;
    config.batch_size = 8;
    config.target_sync = 50;
    config.seed = 15;
    QNetwork net(16, 8);
    const TrainLog log = dqn_train(net, config);
    CHECK(log.episodes.size() == 12);
    CHECK(net.params().step() > 0);
}

TEST_CASE("checkpoints restore either agent") {
    const auto dir = std::filesystem::temp_directory_path() / "plumbing_test_agent";
    std::filesystem::remove_all(dir);
    const ActorCritic model(17, 8);
    model.save(dir);
    CHECK(checkpoint_algorithm(dir) == "a3c");
    const ActorCritic back = ActorCritic::load(dir);
    const Plumbing p = chain({1, 2, 3});
    CHECK(back.action_probabilities(p) == model.action_probabilities(p));
    std::filesystem::remove_all(dir);
    const QNetwork net(18, 8);
    net.save(dir);
    CHECK(checkpoint_algorithm(dir) == "dqn");
    CHECK(QNetwork::load(dir).greedy_action(p) == net.greedy_action(p));
    Rng rng(1);
    CHECK(load_policy(dir)(p, rng) == net.greedy_action(p));
    std::filesystem::remove_all(dir);
}

TEST_CASE("pair evaluation") {
    Rng rng(19);
    const Plumbing e8 = e8_plumbing();
    CHECK(steps_until_isomorphic(uniform_policy(), e8, e8.relabeled({7, 6, 5, 4, 3, 2, 1, 0}), 10, rng) == 0);
    CHECK(steps_until_isomorphic(uniform_policy(), e8, Plumbing::single(1), 0, rng) == -1);
    CHECK_THROWS(evaluate_pairs(uniform_policy(), 0, 5, 2, 19));
    const PairEvalReport a = evaluate_pairs(uniform_policy(), 3, 10, 2, 20);
    const PairEvalReport b = evaluate_pairs(uniform_policy(), 3, 10, 2, 20);
    CHECK(a.successes == b.successes);
    CHECK(a.mean_steps == b.mean_steps);
    CHECK(a.to_json().at("N") == 3);
    CHECK(a.to_json().contains("mean_actions"));
    if (a.successes > 0) CHECK(a.mean_steps <= 6.0);
}

TEST_CASE("move statistics cover every attempted action") {
    const MoveStats stats = move_stats(uniform_policy(), 20, 21);
    CHECK(stats.total() > 20);
    double total = 0.0;
    for (double f : stats.fractions()) total += f;
    CHECK(total == doctest::Approx(1.0));
    const auto f = stats.fractions();
    CHECK(stats.blow_down_fraction() == doctest::Approx(f[5] + f[6] + f[7]));
}

TEST_CASE("policy simplification replays and never increases complexity") {
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const Plumbing p = oracle::random_tree(rng, 6, -5, 5);
        const SimplifyResult r = simplify_with_policy(uniform_policy(), p, 20, rng);
        CHECK(r.complexity <= complexity(p));
        CHECK(r.complexity == complexity(r.graph));
        CHECK(replay(p, r.path) == r.graph);
    }
}

}  // TEST_SUITE
