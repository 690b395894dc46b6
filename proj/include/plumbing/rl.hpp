#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plumbing/generate.hpp"
#include "plumbing/moves.hpp"
#include "plumbing/nn/layers.hpp"
#include "plumbing/search.hpp"

namespace plumbing {

struct EnvConfig {
    int seed_nodes = 10;
    int scramble_moves = 15;
    int max_steps = 15;
    double gamma = 0.99;
    /// Terminate against the scrambled start state instead of the seed graph.
    bool target_after_scramble = false;
    IntRange weight{-20, 20};
    MoveConfig moves{};

    void validate() const;
};

struct EnvState {
    Plumbing current;
    int steps_taken = 0;
    std::int64_t target_f = 0;
};

struct StepResult {
    EnvState next;
    std::int64_t reward = 0;
    bool done = false;
    bool legal = false;
};

EnvState env_reset(Rng& rng, const EnvConfig& config = {});
StepResult env_step(const EnvState& state, const RlAction& action, const EnvConfig& config = {});

/// Flat action index used by the networks: node * 6 + selector.
inline int action_index(const RlAction& a) { return a.node * kSelectorCount + static_cast<int>(a.selector); }
inline RlAction action_from_index(int index) {
    return {index / kSelectorCount, static_cast<Selector>(index % kSelectorCount)};
}

/// Picks one action for a graph. Implementations must tolerate concurrent calls.
using Policy = std::function<RlAction(const Plumbing&, Rng&)>;

/// Uniform over all 6|V| actions.
Policy uniform_policy();

/// Index drawn from a discrete distribution by inverse CDF.
int sample_index(const std::vector<double>& probabilities, Rng& rng);

/// Policy and value networks sharing one parameter store.
///   policy: GCN(1->h) ReLU GCN(h->h) ReLU, per-node affine h->6, softmax over 6|V|
///   value:  GCN(1->h) ReLU GCN(h->h) ReLU, mean over nodes, affine h->1
class ActorCritic {
public:
    static constexpr int kDefaultHidden = 128;

    explicit ActorCritic(std::uint64_t seed, int hidden = kDefaultHidden);

    int hidden() const { return hidden_; }
    std::uint64_t seed() const { return seed_; }
    nn::ParamStore& params() { return *store_; }
    const nn::ParamStore& params() const { return *store_; }

    /// N x 6 log-probabilities, normalized over each graph's 6|V| entries.
    nn::Tensor policy_log_probs(const nn::GraphBatch& batch) const;
    /// One value per graph (G x 1).
    nn::Tensor values(const nn::GraphBatch& batch) const;

    std::vector<double> action_probabilities(const Plumbing& p) const;
    double value(const Plumbing& p) const;
    RlAction sample_action(const Plumbing& p, Rng& rng) const;
    RlAction greedy_action(const Plumbing& p) const;
    /// Sampling policy bound to this model; the model must outlive it.
    Policy sampling_policy() const;

    nlohmann::json describe() const;
    void save(const std::filesystem::path& dir) const;
    static ActorCritic load(const std::filesystem::path& dir);

private:
    int hidden_;
    std::uint64_t seed_;
    std::unique_ptr<nn::ParamStore> store_;
    std::unique_ptr<nn::GcnLayer> policy_conv1_, policy_conv2_, value_conv1_, value_conv2_;
    nn::Linear policy_out_, value_out_;
};

/// Q-network: the policy trunk with 6 raw per-node outputs.
class QNetwork {
public:
    static constexpr int kDefaultHidden = 128;

    explicit QNetwork(std::uint64_t seed, int hidden = kDefaultHidden);

    int hidden() const { return hidden_; }
    std::uint64_t seed() const { return seed_; }
    nn::ParamStore& params() { return *store_; }
    const nn::ParamStore& params() const { return *store_; }

    /// N x 6 action values.
    nn::Tensor q_values(const nn::GraphBatch& batch) const;
    /// Argmax over all 6|V| Q-values (lowest index on ties).
    RlAction greedy_action(const Plumbing& p) const;
    Policy greedy_policy() const;

    nlohmann::json describe() const;
    void save(const std::filesystem::path& dir) const;
    static QNetwork load(const std::filesystem::path& dir);

private:
    int hidden_;
    std::uint64_t seed_;
    std::unique_ptr<nn::ParamStore> store_;
    std::unique_ptr<nn::GcnLayer> conv1_, conv2_;
    nn::Linear out_;
};

/// Policy from a checkpoint written by either agent: sampled for actor-critic,
/// greedy for Q-networks. The loaded model is owned by the returned callable.
Policy load_policy(const std::filesystem::path& dir);
/// "a3c" or "dqn", from the checkpoint manifest.
std::string checkpoint_algorithm(const std::filesystem::path& dir);

struct EpisodeTrace {
    std::vector<Plumbing> states;  // s_0 .. s_{T-1}
    std::vector<RlAction> actions;
    std::vector<std::int64_t> rewards;
    std::vector<bool> legal;
    Plumbing final_state;
    std::int64_t target_f = 0;

    int length() const { return static_cast<int>(actions.size()); }
    std::int64_t total_reward() const;
    bool reached_target() const { return complexity(final_state) <= target_f; }
};

EpisodeTrace run_episode(const Policy& policy, Rng& rng, const EnvConfig& env = {});

/// R_t = scale * sum_k gamma^k r_{t+k}.
std::vector<double> discounted_returns(const std::vector<std::int64_t>& rewards, double gamma, double scale = 1.0);

struct EpisodeLog {
    int episode = 0;
    std::int64_t total_reward = 0;  // undiscounted
    int steps = 0;
    std::int64_t terminal_f = 0;
    bool reached_target = false;
};

struct TrainLog {
    std::vector<EpisodeLog> episodes;

    /// Mean undiscounted return over episodes [begin, end).
    double mean_return(std::size_t begin, std::size_t end) const;
    void write_csv(const std::string& path) const;
};

EpisodeLog summarize(const EpisodeTrace& trace, int episode);

/// Episodes of a fixed policy with the same per-episode seeding as training.
TrainLog run_policy_episodes(const Policy& policy, int episodes, std::uint64_t seed, const EnvConfig& env = {});

struct A3cConfig {
    int workers = 8;
    int episodes = 10000;
    double lr = 5e-4;
    double entropy_beta = 0.01;
    double grad_clip = 5.0;
    /// Rewards are multiplied by this before computing returns.
    double reward_scale = 0.01;
    /// Lock-guarded asynchronous updates instead of synchronous rounds.
    bool asynchronous = false;
    std::uint64_t seed = 0;
    EnvConfig env{};
};

/// Actor loss - beta * entropy + critic loss for one episode.
nn::Tensor a3c_loss(const ActorCritic& model, const EpisodeTrace& trace, const A3cConfig& config);

TrainLog a3c_train(ActorCritic& model, const A3cConfig& config,
                   const std::function<void(const EpisodeLog&)>& on_episode = {});

struct Transition {
    Plumbing state;
    RlAction action;
    double reward = 0.0;  // already scaled
    Plumbing next;
    bool done = false;
};

struct DqnConfig {
    int episodes = 10000;
    double lr = 5e-4;
    std::size_t replay_capacity = 100000;
    int batch_size = 64;
    int target_sync = 1000;  // environment steps between target copies
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_fraction = 0.2;  // of all episodes
    int train_every = 4;
    int warmup_steps = 1000;
    double grad_clip = 5.0;
    double reward_scale = 0.01;
    std::uint64_t seed = 0;
    EnvConfig env{};
};

double epsilon_at(const DqnConfig& config, int episode);

/// y = r + gamma * (1 - done) * max_a' Q_target(s', a').
std::vector<double> bellman_targets(const QNetwork& target, const std::vector<const Transition*>& batch, double gamma);

TrainLog dqn_train(QNetwork& model, const DqnConfig& config,
                   const std::function<void(const EpisodeLog&)>& on_episode = {});

struct PairEvalReport {
    int n = 0;
    int pairs = 0;
    int successes = 0;
    /// Mean time steps until success over successful pairs; each step applies
    /// one action to each graph.
    double mean_steps = 0.0;

    double success_rate() const { return pairs == 0 ? 0.0 : static_cast<double>(successes) / pairs; }
    nlohmann::json to_json() const;
};

/// Time steps until g1 and g2 are isomorphic, each step applying one policy
/// action to each graph (illegal ones leave it unchanged); -1 past `budget`.
int steps_until_isomorphic(const Policy& policy, Plumbing g1, Plumbing g2, int budget, Rng& rng,
                           const MoveConfig& moves = {});

/// Pairs from equiv_pair_fixed_n(n) with per-pair seeds; success when the two
/// graphs become isomorphic within budget_multiplier * n time steps.
PairEvalReport evaluate_pairs(const Policy& policy, int n, int pair_count, int budget_multiplier, std::uint64_t seed,
                              const MoveConfig& moves = {});

struct MoveStats {
    std::array<std::int64_t, kMoveCategoryCount> counts{};
    std::int64_t total() const;
    std::array<double, kMoveCategoryCount> fractions() const;
    /// Combined share of categories 6-8.
    double blow_down_fraction() const;
    nlohmann::json to_json() const;
};

/// Attempted-move categories over environment episodes; illegal actions count
/// under the category they attempted.
MoveStats move_stats(const Policy& policy, int episodes, std::uint64_t seed, const EnvConfig& env = {});

/// Rolls the policy out for `budget` steps and returns the lowest-complexity
/// graph visited with the legal actions leading to it.
SimplifyResult simplify_with_policy(const Policy& policy, const Plumbing& p, int budget, Rng& rng,
                                    const MoveConfig& moves = {});

}  // namespace plumbing
