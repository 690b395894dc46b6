#include "plumbing/classify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace plumbing {

using nn::Tensor;

ModelSpec ModelSpec::parse(const std::string& text) {
    const auto plus = text.find('+');
    if (plus == std::string::npos) throw std::invalid_argument("architecture must look like conv1+conv2: " + text);
    return {nn::conv_kind_from_name(text.substr(0, plus)), nn::conv_kind_from_name(text.substr(plus + 1))};
}

std::string ModelSpec::name() const { return nn::conv_kind_name(conv1) + "+" + nn::conv_kind_name(conv2); }

PairClassifier::PairClassifier(ModelSpec spec, std::uint64_t seed)
    : spec_(spec), seed_(seed), store_(std::make_unique<nn::ParamStore>()) {
    Rng rng(seed);
    conv1_ = nn::make_conv(spec.conv1, *store_, "conv1", 1, kHidden, rng);
    conv2_ = nn::make_conv(spec.conv2, *store_, "conv2", kHidden, kHidden, rng);
    aggregator_ = nn::GatedAggregator(*store_, "aggregator", kHidden, kEmbedding, rng);
    head_ = nn::Mlp(*store_, "head", {2 * kEmbedding, 64, 32, 2}, rng);
}

Tensor PairClassifier::embed(const nn::GraphBatch& batch) const {
    const Tensor h1 = nn::relu(conv1_->forward(batch, batch.features));
    const Tensor h2 = conv2_->forward(batch, h1);
    return aggregator_.forward(batch, h2);
}

Tensor PairClassifier::pair_logits(const nn::GraphBatch& batch) const {
    if (batch.num_graphs % 2 != 0) throw std::invalid_argument("pair batch needs an even number of graphs");
    const Tensor embeddings = embed(batch);
    std::vector<int> first, second;
    for (int g = 0; g < batch.num_graphs; g += 2) {
        first.push_back(g);
        second.push_back(g + 1);
    }
    const Tensor joined = nn::concat(nn::gather_rows(embeddings, nn::make_index(std::move(first))),
                                     nn::gather_rows(embeddings, nn::make_index(std::move(second))), 1);
    return head_(joined);
}

std::vector<double> PairClassifier::embed_graph(const Plumbing& p) const { return embed(nn::GraphBatch::build(p)).values(); }

std::array<double, 2> PairClassifier::forward_pair(const Plumbing& g1, const Plumbing& g2) const {
    const auto logits = pair_logits(nn::GraphBatch::build({&g1, &g2})).values();
    return {logits[0], logits[1]};
}

nlohmann::json PairClassifier::describe() const {
    return {{"architecture", spec_.name()},
            {"conv1", {nn::conv_kind_name(spec_.conv1), 1, kHidden}},
            {"conv2", {nn::conv_kind_name(spec_.conv2), kHidden, kHidden}},
            {"aggregator", {kHidden, kEmbedding}},
            {"head", {2 * kEmbedding, 64, 32, 2}},
            {"seed", seed_}};
}

void PairClassifier::save(const std::filesystem::path& dir) const { nn::save_checkpoint(dir, *store_, describe()); }

PairClassifier PairClassifier::load(const std::filesystem::path& dir) {
    const auto manifest = nn::read_checkpoint_manifest(dir);
    const auto& model = manifest.at("model");
    PairClassifier out(ModelSpec::parse(model.at("architecture").get<std::string>()), model.at("seed").get<std::uint64_t>());
    nn::load_checkpoint(dir, out.params());
    return out;
}

nn::GraphBatch pair_batch(const std::vector<PairSample>& pairs, const std::vector<std::size_t>& order,
                          std::size_t begin, std::size_t end) {
    std::vector<const Plumbing*> graphs;
    graphs.reserve(2 * (end - begin));
    for (std::size_t i = begin; i < end; ++i) {
        graphs.push_back(&pairs[order[i]].g1);
        graphs.push_back(&pairs[order[i]].g2);
    }
    return nn::GraphBatch::build(graphs);
}

namespace {

std::vector<int> batch_classes(const std::vector<PairSample>& pairs, const std::vector<std::size_t>& order,
                               std::size_t begin, std::size_t end) {
    std::vector<int> classes;
    for (std::size_t i = begin; i < end; ++i) classes.push_back(label_class(pairs[order[i]].label));
    return classes;
}

struct Tally {
    double loss_sum = 0.0;
    std::size_t count = 0;
    std::size_t confusion[2][2] = {{0, 0}, {0, 0}};  // [true class][predicted class]

    void add_batch(const Tensor& logits, const std::vector<int>& classes, double mean_loss) {
        loss_sum += mean_loss * static_cast<double>(classes.size());
        count += classes.size();
        for (std::size_t r = 0; r < classes.size(); ++r) {
            const int predicted = logits.at(static_cast<int>(r), 1) > logits.at(static_cast<int>(r), 0) ? 1 : 0;
            ++confusion[classes[r]][predicted];
        }
    }
    void merge(const Tally& other) {
        loss_sum += other.loss_sum;
        count += other.count;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) confusion[a][b] += other.confusion[a][b];
    }
    double accuracy() const {
        return count == 0 ? 0.0 : static_cast<double>(confusion[0][0] + confusion[1][1]) / static_cast<double>(count);
    }
    double mean_loss() const { return count == 0 ? 0.0 : loss_sum / static_cast<double>(count); }
};

// Forward-only pass over `order`; chunks run in parallel, merged in order.
Tally measure(const PairClassifier& model, const std::vector<PairSample>& pairs, const std::vector<std::size_t>& order,
              int batch_size) {
    const std::size_t chunks = (order.size() + batch_size - 1) / batch_size;
    std::vector<Tally> partial(chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * batch_size, end = std::min(order.size(), begin + batch_size);
        const auto classes = batch_classes(pairs, order, begin, end);
        const Tensor logits = model.pair_logits(pair_batch(pairs, order, begin, end));
        partial[c].add_batch(logits, classes, nn::cross_entropy(logits, classes).item());
    }
    Tally total;
    for (const auto& t : partial) total.merge(t);
    return total;
}

void shuffle(std::vector<std::size_t>& items, Rng rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.index(i)]);
}

}  // namespace

void TrainHistory::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,split,loss,accuracy\n";
    char buffer[128];
    for (const auto& r : rows) {
        std::snprintf(buffer, sizeof buffer, "%d,%s,%.17g,%.17g\n", r.epoch, r.split.c_str(), r.loss, r.accuracy);
        out << buffer;
    }
}

TrainHistory train_sl(PairClassifier& model, const std::vector<PairSample>& data, const TrainConfig& config,
                      const std::function<void(const EpochMetrics&)>& on_metrics) {
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0))
        throw std::invalid_argument("validation fraction must be in (0, 1)");
    if (config.batch_size < 1 || config.epochs < 0) throw std::invalid_argument("bad batch size or epoch count");
    if (data.size() < 2) throw std::invalid_argument("dataset too small to split");

    const Rng master(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, master.split(1));
    const auto validation_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(data.size()))));
    std::vector<std::size_t> validation(order.begin(), order.begin() + validation_count);
    std::vector<std::size_t> train(order.begin() + validation_count, order.end());

    TrainHistory history;
    auto record = [&](int epoch, const char* split, const Tally& t) {
        history.rows.push_back({epoch, split, t.mean_loss(), t.accuracy()});
        if (on_metrics) on_metrics(history.rows.back());
    };
    record(0, "train", measure(model, data, train, config.batch_size));
    const Tally fresh = measure(model, data, validation, config.batch_size);
    record(0, "validation", fresh);
    history.best_validation_accuracy = fresh.accuracy();

    auto& store = model.params();
    std::vector<std::vector<double>> best;
    for (const auto& e : store.entries()) best.push_back(e.param.values());

    const nn::AdamConfig adam{config.lr};
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(train, master.split(1000 + static_cast<std::uint64_t>(epoch)));
        Tally running;
        for (std::size_t begin = 0; begin < train.size(); begin += config.batch_size) {
            const std::size_t end = std::min(train.size(), begin + config.batch_size);
            const auto classes = batch_classes(data, train, begin, end);
            const Tensor logits = model.pair_logits(pair_batch(data, train, begin, end));
            const Tensor loss = nn::cross_entropy(logits, classes);
            running.add_batch(logits, classes, loss.item());
            loss.backward();
            store.adam_step(adam);
        }
        record(epoch, "train", running);
        const Tally checked = measure(model, data, validation, config.batch_size);
        record(epoch, "validation", checked);
        if (checked.accuracy() > history.best_validation_accuracy) {
            history.best_validation_accuracy = checked.accuracy();
            history.best_epoch = epoch;
            for (std::size_t i = 0; i < best.size(); ++i) best[i] = store.entries()[i].param.values();
        }
    }
    for (std::size_t i = 0; i < best.size(); ++i) {
        Tensor handle = store.entries()[i].param;
        handle.values() = best[i];
    }
    return history;
}

nlohmann::json EvalReport::to_json() const {
    return {{"count", count},
            {"accuracy", accuracy},
            {"mean_loss", mean_loss},
            {"confusion",
             {{"true_positive", true_positive},
              {"true_negative", true_negative},
              {"false_positive", false_positive},
              {"false_negative", false_negative}}}};
}

EvalReport evaluate(const PairClassifier& model, const std::vector<PairSample>& data, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const Tally t = measure(model, data, order, batch_size);
    EvalReport report;
    report.count = t.count;
    report.accuracy = t.accuracy();
    report.mean_loss = t.mean_loss();
    report.true_positive = t.confusion[1][1];
    report.true_negative = t.confusion[0][0];
    report.false_positive = t.confusion[0][1];
    report.false_negative = t.confusion[1][0];
    return report;
}

}  // namespace plumbing
