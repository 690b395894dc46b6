#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plumbing/generate.hpp"
#include "plumbing/nn/layers.hpp"

namespace plumbing {

struct ModelSpec {
    nn::ConvKind conv1 = nn::ConvKind::GEN;
    nn::ConvKind conv2 = nn::ConvKind::GAT;

    /// "gen+gat", "GCN+GCN", ... (case-insensitive).
    static ModelSpec parse(const std::string& text);
    std::string name() const;
};

/// Siamese pair classifier: conv1 -> ReLU -> conv2 -> gated aggregator gives a
/// 32-dim graph embedding; the head maps [h1 || h2] to two logits, where
/// class 1 means "equivalent".
class PairClassifier {
public:
    static constexpr int kHidden = 128;
    static constexpr int kEmbedding = 32;

    PairClassifier(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    nn::ParamStore& params() { return *store_; }
    const nn::ParamStore& params() const { return *store_; }

    /// One embedding row per graph of the batch.
    nn::Tensor embed(const nn::GraphBatch& batch) const;
    /// Logits (pairs x 2) for a batch holding g1, g2 of each pair consecutively.
    nn::Tensor pair_logits(const nn::GraphBatch& batch) const;

    std::vector<double> embed_graph(const Plumbing& p) const;
    std::array<double, 2> forward_pair(const Plumbing& g1, const Plumbing& g2) const;

    nlohmann::json describe() const;
    void save(const std::filesystem::path& dir) const;
    static PairClassifier load(const std::filesystem::path& dir);

private:
    ModelSpec spec_;
    std::uint64_t seed_;
    std::unique_ptr<nn::ParamStore> store_;
    std::unique_ptr<nn::ConvLayer> conv1_, conv2_;
    nn::GatedAggregator aggregator_;
    nn::Mlp head_;
};

/// Class index of a file label: +1 -> 1, -1 -> 0.
inline int label_class(int label) { return label > 0 ? 1 : 0; }

/// Graph batch of the pairs [begin, end) of `pairs` taken in `order`.
nn::GraphBatch pair_batch(const std::vector<PairSample>& pairs, const std::vector<std::size_t>& order,
                          std::size_t begin, std::size_t end);

struct TrainConfig {
    int epochs = 150;
    double lr = 1e-3;
    int batch_size = 64;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct EpochMetrics {
    int epoch;
    std::string split;  // "train" or "validation"
    double loss;
    double accuracy;
};

struct TrainHistory {
    std::vector<EpochMetrics> rows;
    int best_epoch = 0;
    double best_validation_accuracy = 0.0;

    void write_csv(const std::string& path) const;
};

/// Minibatch Adam on cross-entropy with a seeded 8:2 split. Epoch 0 rows
/// measure the fresh model. The model ends holding its best-validation weights.
TrainHistory train_sl(PairClassifier& model, const std::vector<PairSample>& data, const TrainConfig& config,
                      const std::function<void(const EpochMetrics&)>& on_metrics = {});

struct EvalReport {
    std::size_t count = 0;
    double accuracy = 0.0;
    double mean_loss = 0.0;
    // Confusion counts with "positive" = equivalent.
    std::size_t true_positive = 0, true_negative = 0, false_positive = 0, false_negative = 0;

    nlohmann::json to_json() const;
};

EvalReport evaluate(const PairClassifier& model, const std::vector<PairSample>& data, int batch_size = 64);

}  // namespace plumbing
