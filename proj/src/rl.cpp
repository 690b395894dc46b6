#include "plumbing/rl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace plumbing {

using nn::Tensor;

void EnvConfig::validate() const {
    if (seed_nodes < 1 || scramble_moves < 0 || max_steps < 1)
        throw std::invalid_argument("environment sizes must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
}

EnvState env_reset(Rng& rng, const EnvConfig& config) {
    config.validate();
    const Plumbing seed = random_plumbing_with_nodes(rng, config.seed_nodes, config.weight);
    Plumbing start = scramble(seed, config.scramble_moves, rng, config.moves);
    const std::int64_t target = config.target_after_scramble ? complexity(start) : complexity(seed);
    return {std::move(start), 0, target};
}

StepResult env_step(const EnvState& state, const RlAction& action, const EnvConfig& config) {
    if (state.steps_taken >= config.max_steps) throw std::logic_error("episode already finished");
    if (action.node < 0 || action.node >= state.current.size()) throw std::out_of_range("action node out of range");
    ActionResult moved = apply_action(state.current, action, config.moves);
    StepResult out{{moved.done ? std::move(moved.result) : state.current, state.steps_taken + 1, state.target_f}};
    out.legal = moved.done;
    out.reward = out.legal ? -complexity(out.next.current) : -2 * complexity(state.current);
    out.done = complexity(out.next.current) <= state.target_f || out.next.steps_taken == config.max_steps;
    return out;
}

Policy uniform_policy() {
    return [](const Plumbing& p, Rng& rng) {
        return action_from_index(static_cast<int>(rng.index(static_cast<std::size_t>(p.size()) * kSelectorCount)));
    };
}

int sample_index(const std::vector<double>& probabilities, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        cumulative += probabilities[i];
        if (u < cumulative) return static_cast<int>(i);
    }
    // Rounding left u above the final partial sum; take the last positive entry.
    for (std::size_t i = probabilities.size(); i-- > 0;)
        if (probabilities[i] > 0.0) return static_cast<int>(i);
    throw std::invalid_argument("sample_index: no positive probability");
}

namespace {

int argmax(const std::vector<double>& values) {
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

nlohmann::json agent_description(const char* algorithm, int hidden, std::uint64_t seed) {
    return {{"algorithm", algorithm}, {"hidden", hidden}, {"seed", seed}};
}

}  // namespace

ActorCritic::ActorCritic(std::uint64_t seed, int hidden)
    : hidden_(hidden), seed_(seed), store_(std::make_unique<nn::ParamStore>()) {
    Rng rng(seed);
    policy_conv1_ = std::make_unique<nn::GcnLayer>(*store_, "policy.conv1", 1, hidden, rng);
    policy_conv2_ = std::make_unique<nn::GcnLayer>(*store_, "policy.conv2", hidden, hidden, rng);
    policy_out_ = nn::Linear(*store_, "policy.out", hidden, kSelectorCount, rng);
    value_conv1_ = std::make_unique<nn::GcnLayer>(*store_, "value.conv1", 1, hidden, rng);
    value_conv2_ = std::make_unique<nn::GcnLayer>(*store_, "value.conv2", hidden, hidden, rng);
    value_out_ = nn::Linear(*store_, "value.out", hidden, 1, rng);
}

Tensor ActorCritic::policy_log_probs(const nn::GraphBatch& batch) const {
    const Tensor h1 = nn::relu(policy_conv1_->forward(batch, batch.features));
    const Tensor h2 = nn::relu(policy_conv2_->forward(batch, h1));
    return nn::segment_log_softmax_flat(policy_out_(h2), batch.node_graph, batch.num_graphs);
}

Tensor ActorCritic::values(const nn::GraphBatch& batch) const {
    const Tensor h1 = nn::relu(value_conv1_->forward(batch, batch.features));
    const Tensor h2 = nn::relu(value_conv2_->forward(batch, h1));
    return value_out_(nn::mean_nodes(h2, batch.node_graph, batch.num_graphs));
}

std::vector<double> ActorCritic::action_probabilities(const Plumbing& p) const {
    std::vector<double> probs = policy_log_probs(nn::GraphBatch::build(p)).values();
    for (double& x : probs) x = std::exp(x);
    return probs;
}

double ActorCritic::value(const Plumbing& p) const { return values(nn::GraphBatch::build(p)).item(); }

RlAction ActorCritic::sample_action(const Plumbing& p, Rng& rng) const {
    return action_from_index(sample_index(action_probabilities(p), rng));
}

RlAction ActorCritic::greedy_action(const Plumbing& p) const {
    return action_from_index(argmax(policy_log_probs(nn::GraphBatch::build(p)).values()));
}

Policy ActorCritic::sampling_policy() const {
    return [this](const Plumbing& p, Rng& rng) { return sample_action(p, rng); };
}

nlohmann::json ActorCritic::describe() const { return agent_description("a3c", hidden_, seed_); }

void ActorCritic::save(const std::filesystem::path& dir) const { nn::save_checkpoint(dir, *store_, describe()); }

ActorCritic ActorCritic::load(const std::filesystem::path& dir) {
    const auto model = nn::read_checkpoint_manifest(dir).at("model");
    if (model.at("algorithm") != "a3c") throw std::invalid_argument("not an actor-critic checkpoint: " + dir.string());
    ActorCritic out(model.at("seed").get<std::uint64_t>(), model.at("hidden").get<int>());
    nn::load_checkpoint(dir, out.params());
    return out;
}

QNetwork::QNetwork(std::uint64_t seed, int hidden)
    : hidden_(hidden), seed_(seed), store_(std::make_unique<nn::ParamStore>()) {
    Rng rng(seed);
    conv1_ = std::make_unique<nn::GcnLayer>(*store_, "q.conv1", 1, hidden, rng);
    conv2_ = std::make_unique<nn::GcnLayer>(*store_, "q.conv2", hidden, hidden, rng);
    out_ = nn::Linear(*store_, "q.out", hidden, kSelectorCount, rng);
}

Tensor QNetwork::q_values(const nn::GraphBatch& batch) const {
    const Tensor h1 = nn::relu(conv1_->forward(batch, batch.features));
    return out_(nn::relu(conv2_->forward(batch, h1)));
}

RlAction QNetwork::greedy_action(const Plumbing& p) const {
    return action_from_index(argmax(q_values(nn::GraphBatch::build(p)).values()));
}

Policy QNetwork::greedy_policy() const {
    return [this](const Plumbing& p, Rng&) { return greedy_action(p); };
}

nlohmann::json QNetwork::describe() const { return agent_description("dqn", hidden_, seed_); }

void QNetwork::save(const std::filesystem::path& dir) const { nn::save_checkpoint(dir, *store_, describe()); }

QNetwork QNetwork::load(const std::filesystem::path& dir) {
    const auto model = nn::read_checkpoint_manifest(dir).at("model");
    if (model.at("algorithm") != "dqn") throw std::invalid_argument("not a Q-network checkpoint: " + dir.string());
    QNetwork out(model.at("seed").get<std::uint64_t>(), model.at("hidden").get<int>());
    nn::load_checkpoint(dir, out.params());
    return out;
}

std::string checkpoint_algorithm(const std::filesystem::path& dir) {
    return nn::read_checkpoint_manifest(dir).at("model").at("algorithm").get<std::string>();
}

Policy load_policy(const std::filesystem::path& dir) {
    const std::string algorithm = checkpoint_algorithm(dir);
    if (algorithm == "a3c") {
        auto model = std::make_shared<const ActorCritic>(ActorCritic::load(dir));
        return [model](const Plumbing& p, Rng& rng) { return model->sample_action(p, rng); };
    }
    if (algorithm == "dqn") {
        auto model = std::make_shared<const QNetwork>(QNetwork::load(dir));
        return [model](const Plumbing& p, Rng&) { return model->greedy_action(p); };
    }
    throw std::invalid_argument("unknown agent algorithm: " + algorithm);
}

std::int64_t EpisodeTrace::total_reward() const {
    std::int64_t total = 0;
    for (auto r : rewards) total += r;
    return total;
}

EpisodeTrace run_episode(const Policy& policy, Rng& rng, const EnvConfig& env) {
    EnvState state = env_reset(rng, env);
    EpisodeTrace trace{{}, {}, {}, {}, state.current, state.target_f};
    bool done = false;
    while (!done) {
        const RlAction action = policy(state.current, rng);
        StepResult step = env_step(state, action, env);
        trace.states.push_back(std::move(state.current));
        trace.actions.push_back(action);
        trace.rewards.push_back(step.reward);
        trace.legal.push_back(step.legal);
        state = std::move(step.next);
        done = step.done;
    }
    trace.final_state = std::move(state.current);
    return trace;
}

std::vector<double> discounted_returns(const std::vector<std::int64_t>& rewards, double gamma, double scale) {
    std::vector<double> out(rewards.size());
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        running = scale * static_cast<double>(rewards[t]) + gamma * running;
        out[t] = running;
    }
    return out;
}

double TrainLog::mean_return(std::size_t begin, std::size_t end) const {
    end = std::min(end, episodes.size());
    if (begin >= end) return 0.0;
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) total += static_cast<double>(episodes[i].total_reward);
    return total / static_cast<double>(end - begin);
}

void TrainLog::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "episode,return,steps,terminal_f\n";
    for (const auto& e : episodes)
        out << e.episode << ',' << e.total_reward << ',' << e.steps << ',' << e.terminal_f << '\n';
}

EpisodeLog summarize(const EpisodeTrace& trace, int episode) {
    return {episode, trace.total_reward(), trace.length(), complexity(trace.final_state), trace.reached_target()};
}

TrainLog run_policy_episodes(const Policy& policy, int episodes, std::uint64_t seed, const EnvConfig& env) {
    const Rng master(seed);
    TrainLog log;
    log.episodes.resize(episodes);
#pragma omp parallel for schedule(dynamic, 4)
    for (int e = 0; e < episodes; ++e) {
        Rng rng = master.split(static_cast<std::uint64_t>(e));
        log.episodes[e] = summarize(run_episode(policy, rng, env), e);
    }
    return log;
}

Tensor a3c_loss(const ActorCritic& model, const EpisodeTrace& trace, const A3cConfig& config) {
    const int steps = trace.length();
    if (steps == 0) throw std::invalid_argument("empty episode");
    std::vector<const Plumbing*> graphs;
    for (const auto& s : trace.states) graphs.push_back(&s);
    const nn::GraphBatch batch = nn::GraphBatch::build(graphs);

    std::vector<int> rows, cols;
    for (int t = 0; t < steps; ++t) {
        rows.push_back(batch.offsets[t] + trace.actions[t].node);
        cols.push_back(static_cast<int>(trace.actions[t].selector));
    }
    const Tensor log_probs = model.policy_log_probs(batch);
    const Tensor chosen = nn::pick(log_probs, nn::make_index(std::move(rows)), nn::make_index(std::move(cols)));
    const Tensor values = model.values(batch);

    const std::vector<double> returns = discounted_returns(trace.rewards, config.env.gamma, config.reward_scale);
    std::vector<double> advantage(steps);
    for (int t = 0; t < steps; ++t) advantage[t] = returns[t] - values.values()[t];

    const Tensor actor = nn::scale(nn::sum_all(nn::elemwise_mul(chosen, Tensor(steps, 1, std::move(advantage)))), -1.0);
    const Tensor entropy = nn::scale(nn::sum_all(nn::elemwise_mul(nn::exponential(log_probs), log_probs)), -1.0);
    const Tensor error = nn::sub(Tensor(steps, 1, returns), values);
    const Tensor critic = nn::sum_all(nn::elemwise_mul(error, error));
    return nn::add(nn::sub(actor, nn::scale(entropy, config.entropy_beta)), critic);
}

namespace {

void check_a3c(const A3cConfig& config) {
    if (config.workers < 1 || config.episodes < 0) throw std::invalid_argument("workers and episodes must be positive");
    if (!(config.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    config.env.validate();
}

void apply_update(nn::ParamStore& store, double clip, double lr, std::initializer_list<const char*> groups = {""}) {
    if (clip > 0.0)
        for (const char* group : groups) store.clip_grad_norm(clip, group);
    store.adam_step(nn::AdamConfig{lr});
}

// The actor and critic are clipped separately so large critic errors do not
// shrink the policy gradient.
void apply_a3c_update(ActorCritic& model, const A3cConfig& config) {
    apply_update(model.params(), config.grad_clip, config.lr, {"policy.", "value."});
}

// Synchronous rounds: every worker plays one episode against the weights at
// the start of the round, then the worker gradients are applied one by one in
// worker order. This reproduces the staleness of asynchronous updates
// deterministically.
TrainLog a3c_synchronous(ActorCritic& model, const A3cConfig& config,
                         const std::function<void(const EpisodeLog&)>& on_episode) {
    const Rng master(config.seed);
    std::vector<ActorCritic> workers;
    for (int w = 0; w < config.workers; ++w) workers.emplace_back(model.seed(), model.hidden());
    TrainLog log;
    for (int start = 0; start < config.episodes; start += config.workers) {
        const int count = std::min(config.workers, config.episodes - start);
        std::vector<EpisodeLog> round(count);
        for (int w = 0; w < count; ++w) workers[w].params().copy_values_from(model.params());
#pragma omp parallel for schedule(static, 1)
        for (int w = 0; w < count; ++w) {
            Rng rng = master.split(static_cast<std::uint64_t>(start + w));
            const EpisodeTrace trace = run_episode(workers[w].sampling_policy(), rng, config.env);
            a3c_loss(workers[w], trace, config).backward();
            round[w] = summarize(trace, start + w);
        }
        for (int w = 0; w < count; ++w) {
            model.params().add_grads_from(workers[w].params());
            workers[w].params().zero_grad();
            apply_a3c_update(model, config);
        }
        for (auto& e : round) {
            if (on_episode) on_episode(e);
            log.episodes.push_back(e);
        }
    }
    return log;
}

// Each worker pulls the shared weights, plays an episode and pushes its
// gradient under one lock; updates may be computed from stale weights.
TrainLog a3c_asynchronous(ActorCritic& model, const A3cConfig& config,
                          const std::function<void(const EpisodeLog&)>& on_episode) {
    const Rng master(config.seed);
    TrainLog log;
    log.episodes.resize(config.episodes);
    std::mutex shared;
    std::atomic<int> next{0};
#pragma omp parallel num_threads(config.workers)
    {
        ActorCritic local(model.seed(), model.hidden());
        for (int e = next++; e < config.episodes; e = next++) {
            {
                std::lock_guard<std::mutex> lock(shared);
                local.params().copy_values_from(model.params());
            }
            Rng rng = master.split(static_cast<std::uint64_t>(e));
            const EpisodeTrace trace = run_episode(local.sampling_policy(), rng, config.env);
            a3c_loss(local, trace, config).backward();
            const EpisodeLog entry = summarize(trace, e);
            std::lock_guard<std::mutex> lock(shared);
            model.params().add_grads_from(local.params());
            apply_a3c_update(model, config);
            log.episodes[e] = entry;
            if (on_episode) on_episode(entry);
            local.params().zero_grad();
        }
    }
    return log;
}

}  // namespace

TrainLog a3c_train(ActorCritic& model, const A3cConfig& config,
                   const std::function<void(const EpisodeLog&)>& on_episode) {
    check_a3c(config);
    model.params().zero_grad();
    return config.asynchronous ? a3c_asynchronous(model, config, on_episode)
                               : a3c_synchronous(model, config, on_episode);
}

double epsilon_at(const DqnConfig& config, int episode) {
    const double horizon = config.epsilon_fraction * config.episodes;
    if (horizon <= 0.0 || episode >= horizon) return config.epsilon_end;
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * (episode / horizon);
}

std::vector<double> bellman_targets(const QNetwork& target, const std::vector<const Transition*>& batch, double gamma) {
    std::vector<double> out(batch.size());
    std::vector<const Plumbing*> live;
    std::vector<std::size_t> live_slot;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out[i] = batch[i]->reward;
        if (!batch[i]->done && gamma != 0.0) {
            live.push_back(&batch[i]->next);
            live_slot.push_back(i);
        }
    }
    if (live.empty()) return out;
    const nn::GraphBatch graphs = nn::GraphBatch::build(live);
    const Tensor q = target.q_values(graphs);
    for (std::size_t g = 0; g < live.size(); ++g) {
        const auto first = q.values().begin() + static_cast<std::ptrdiff_t>(graphs.offsets[g]) * kSelectorCount;
        const auto last = q.values().begin() + static_cast<std::ptrdiff_t>(graphs.offsets[g + 1]) * kSelectorCount;
        out[live_slot[g]] += gamma * *std::max_element(first, last);
    }
    return out;
}

namespace {

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[cursor_] = std::move(t);
            cursor_ = (cursor_ + 1) % capacity_;
        }
    }
    std::size_t size() const { return items_.size(); }
    std::vector<const Transition*> sample(std::size_t count, Rng& rng) const {
        std::vector<const Transition*> out;
        for (std::size_t i = 0; i < count; ++i) out.push_back(&items_[rng.index(items_.size())]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> items_;
};

void dqn_update(QNetwork& model, const QNetwork& target, const std::vector<const Transition*>& batch,
                const DqnConfig& config) {
    const std::vector<double> targets = bellman_targets(target, batch, config.env.gamma);
    std::vector<const Plumbing*> graphs;
    for (const auto* t : batch) graphs.push_back(&t->state);
    const nn::GraphBatch states = nn::GraphBatch::build(graphs);
    std::vector<int> rows, cols;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        rows.push_back(states.offsets[i] + batch[i]->action.node);
        cols.push_back(static_cast<int>(batch[i]->action.selector));
    }
    const Tensor chosen =
        nn::pick(model.q_values(states), nn::make_index(std::move(rows)), nn::make_index(std::move(cols)));
    const Tensor error = nn::sub(chosen, Tensor(static_cast<int>(batch.size()), 1, targets));
    nn::mean_all(nn::elemwise_mul(error, error)).backward();
    apply_update(model.params(), config.grad_clip, config.lr);
}

}  // namespace

TrainLog dqn_train(QNetwork& model, const DqnConfig& config,
                   const std::function<void(const EpisodeLog&)>& on_episode) {
    if (config.episodes < 0 || config.batch_size < 1 || config.replay_capacity < 1 || config.target_sync < 1 ||
        config.train_every < 1)
        throw std::invalid_argument("bad DQN configuration");
    config.env.validate();
    model.params().zero_grad();
    QNetwork target(model.seed(), model.hidden());
    target.params().copy_values_from(model.params());
    ReplayBuffer replay(config.replay_capacity);
    Rng sampler = Rng(config.seed).split(~std::uint64_t{0});
    const Rng master(config.seed);
    const Policy uniform = uniform_policy();
    TrainLog log;
    std::int64_t env_steps = 0;
    for (int e = 0; e < config.episodes; ++e) {
        Rng rng = master.split(static_cast<std::uint64_t>(e));
        const double epsilon = epsilon_at(config, e);
        EnvState state = env_reset(rng, config.env);
        EpisodeTrace trace{{}, {}, {}, {}, state.current, state.target_f};
        bool done = false;
        while (!done) {
            const RlAction action =
                rng.uniform() < epsilon ? uniform(state.current, rng) : model.greedy_action(state.current);
            StepResult step = env_step(state, action, config.env);
            replay.push({state.current, action, config.reward_scale * static_cast<double>(step.reward),
                         step.next.current, step.done});
            trace.states.push_back(std::move(state.current));
            trace.actions.push_back(action);
            trace.rewards.push_back(step.reward);
            trace.legal.push_back(step.legal);
            state = std::move(step.next);
            done = step.done;
            ++env_steps;
            if (env_steps >= config.warmup_steps && env_steps % config.train_every == 0 &&
                replay.size() >= static_cast<std::size_t>(config.batch_size))
                dqn_update(model, target, replay.sample(config.batch_size, sampler), config);
            if (env_steps % config.target_sync == 0) target.params().copy_values_from(model.params());
        }
        trace.final_state = std::move(state.current);
        log.episodes.push_back(summarize(trace, e));
        if (on_episode) on_episode(log.episodes.back());
    }
    return log;
}

nlohmann::json PairEvalReport::to_json() const {
    return {{"N", n}, {"pairs", pairs}, {"successes", successes}, {"mean_actions", mean_steps}};
}

int steps_until_isomorphic(const Policy& policy, Plumbing g1, Plumbing g2, int budget, Rng& rng,
                           const MoveConfig& moves) {
    for (int step = 0;; ++step) {
        if (is_isomorphic(g1, g2)) return step;
        if (step >= budget) return -1;
        for (Plumbing* g : {&g1, &g2}) {
            ActionResult moved = apply_action(*g, policy(*g, rng), moves);
            if (moved.done) *g = std::move(moved.result);
        }
    }
}

PairEvalReport evaluate_pairs(const Policy& policy, int n, int pair_count, int budget_multiplier, std::uint64_t seed,
                              const MoveConfig& moves) {
    if (n < 1 || pair_count < 0 || budget_multiplier < 1) throw std::invalid_argument("bad evaluation parameters");
    const Rng master(seed);
    const int budget = budget_multiplier * n;
    GeneratorConfig generator;
    generator.moves = moves;
    std::vector<int> steps_to_success(pair_count, -1);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < pair_count; ++i) {
        Rng rng = master.split(static_cast<std::uint64_t>(i));
        const PairSample pair = equiv_pair_fixed_n(rng, n, generator);
        steps_to_success[i] = steps_until_isomorphic(policy, pair.g1, pair.g2, budget, rng, moves);
    }
    PairEvalReport report{n, pair_count, 0, 0.0};
    double total = 0.0;
    for (int s : steps_to_success)
        if (s >= 0) {
            ++report.successes;
            total += s;
        }
    if (report.successes > 0) report.mean_steps = total / report.successes;
    return report;
}

std::int64_t MoveStats::total() const {
    std::int64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

std::array<double, kMoveCategoryCount> MoveStats::fractions() const {
    std::array<double, kMoveCategoryCount> out{};
    const auto sum = total();
    if (sum == 0) return out;
    for (int i = 0; i < kMoveCategoryCount; ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(sum);
    return out;
}

double MoveStats::blow_down_fraction() const {
    const auto f = fractions();
    return f[5] + f[6] + f[7];
}

nlohmann::json MoveStats::to_json() const {
    const auto f = fractions();
    nlohmann::json categories = nlohmann::json::array();
    for (int i = 0; i < kMoveCategoryCount; ++i)
        categories.push_back({{"category", i + 1}, {"count", counts[i]}, {"fraction", f[i]}});
    return {{"total_actions", total()}, {"blow_down_fraction", blow_down_fraction()}, {"categories", categories}};
}

MoveStats move_stats(const Policy& policy, int episodes, std::uint64_t seed, const EnvConfig& env) {
    const Rng master(seed);
    std::vector<MoveStats> per_episode(episodes);
#pragma omp parallel for schedule(dynamic, 4)
    for (int e = 0; e < episodes; ++e) {
        Rng rng = master.split(static_cast<std::uint64_t>(e));
        EnvState state = env_reset(rng, env);
        bool done = false;
        while (!done) {
            const RlAction action = policy(state.current, rng);
            ++per_episode[e].counts[static_cast<int>(categorize(state.current, action)) - 1];
            StepResult step = env_step(state, action, env);
            state = std::move(step.next);
            done = step.done;
        }
    }
    MoveStats out;
    for (const auto& s : per_episode)
        for (int i = 0; i < kMoveCategoryCount; ++i) out.counts[i] += s.counts[i];
    return out;
}

SimplifyResult simplify_with_policy(const Policy& policy, const Plumbing& p, int budget, Rng& rng,
                                    const MoveConfig& moves) {
    if (budget < 0) throw std::invalid_argument("budget must be non-negative");
    Plumbing current = p;
    std::vector<RlAction> path;
    SimplifyResult best{p, {}, complexity(p)};
    for (int step = 0; step < budget; ++step) {
        const RlAction action = policy(current, rng);
        ActionResult moved = apply_action(current, action, moves);
        if (!moved.done) continue;
        current = std::move(moved.result);
        path.push_back(action);
        const auto f = complexity(current);
        if (f < best.complexity) best = {current, path, f};
    }
    return best;
}

}  // namespace plumbing
