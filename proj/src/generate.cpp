#include "plumbing/generate.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>

namespace plumbing {

void GeneratorConfig::validate() const {
    if (node_count.lo < 1 || node_count.hi < node_count.lo) throw std::invalid_argument("node_count range is empty");
    if (weight.hi < weight.lo) throw std::invalid_argument("weight range is empty");
    if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
}

Plumbing random_plumbing_with_nodes(Rng& rng, int nodes, IntRange weight) {
    if (nodes < 1) throw std::invalid_argument("random_plumbing: nodes must be positive");
    std::vector<Weight> weights(nodes);
    for (auto& w : weights) w = rng.uniform_int(weight.lo, weight.hi);
    std::vector<std::vector<int>> adjacency(nodes);
    for (int i = 1; i < nodes; ++i) {
        const int j = static_cast<int>(rng.index(i));
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
    }
    return Plumbing::trusted(std::move(weights), std::move(adjacency));
}

Plumbing random_plumbing(Rng& rng, const GeneratorConfig& config) {
    config.validate();
    const int nodes = static_cast<int>(rng.uniform_int(config.node_count.lo, config.node_count.hi));
    return random_plumbing_with_nodes(rng, nodes, config.weight);
}

Plumbing scramble(const Plumbing& p, int calls, Rng& rng, const MoveConfig& config) {
    Plumbing current = p;
    for (int i = 0; i < calls; ++i) {
        auto step = random_neumann_move(current, rng, config);
        if (step.done) current = std::move(step.result);
    }
    return current;
}

Plumbing scramble_successful(const Plumbing& p, int moves, Rng& rng, const MoveConfig& config) {
    Plumbing current = p;
    for (int applied = 0; applied < moves;) {
        auto step = random_neumann_move(current, rng, config);
        if (!step.done) continue;
        current = std::move(step.result);
        ++applied;
    }
    return current;
}

namespace {

int draw_calls(Rng& rng, int n_max) {
    if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
    return static_cast<int>(rng.uniform_int(1, n_max));
}

std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
    std::int64_t g = m, x = 0, x1 = 1, r = a % m;
    while (r != 0) {
        const std::int64_t q = g / r;
        std::tie(g, r) = std::make_pair(r, g - q * r);
        std::tie(x, x1) = std::make_pair(x1, x - q * x1);
    }
    if (g != 1) throw std::invalid_argument("mod_inverse: not a unit");
    return ((x % m) + m) % m;
}

}  // namespace

PairSample equiv_pair(Rng& rng, int n_max, const GeneratorConfig& config) {
    const Plumbing seed = random_plumbing(rng, config);
    const int n1 = draw_calls(rng, n_max);
    Plumbing g1 = scramble(seed, n1, rng, config.moves);
    const int n2 = draw_calls(rng, n_max);
    Plumbing g2 = scramble(seed, n2, rng, config.moves);
    return {std::move(g1), std::move(g2), 1};
}

PairSample equiv_pair_fixed_n(Rng& rng, int n, const GeneratorConfig& config) {
    if (n < 1) throw std::invalid_argument("equiv_pair_fixed_n: n must be positive");
    const Plumbing seed = random_plumbing(rng, config);
    Plumbing g1 = scramble_successful(seed, n, rng, config.moves);
    Plumbing g2 = scramble_successful(seed, n, rng, config.moves);
    return {std::move(g1), std::move(g2), 1};
}

PairSample inequiv_pair(Rng& rng, int n_max, const GeneratorConfig& config) {
    const Plumbing seed1 = random_plumbing(rng, config);
    const Plumbing seed2 = random_plumbing(rng, config);
    const int n1 = draw_calls(rng, n_max);
    Plumbing g1 = scramble(seed1, n1, rng, config.moves);
    const int n2 = draw_calls(rng, n_max);
    Plumbing g2 = scramble(seed2, n2, rng, config.moves);
    return {std::move(g1), std::move(g2), -1};
}

Plumbing tweak_weight(const Plumbing& p, Rng& rng) {
    std::vector<Weight> tweaked = p.weights();
    const std::size_t v = rng.index(tweaked.size());
    std::int64_t t = rng.uniform_int(-3, 2);
    if (t >= 0) ++t;  // uniform on {-3..3} \ {0}
    tweaked[v] += t;
    return Plumbing::trusted(std::move(tweaked), p.adjacency());
}

PairSample tweak_pair(Rng& rng, int n_max, const GeneratorConfig& config) {
    const Plumbing seed1 = random_plumbing(rng, config);
    const Plumbing seed2 = tweak_weight(seed1, rng);
    const int n1 = draw_calls(rng, n_max);
    Plumbing g1 = scramble(seed1, n1, rng, config.moves);
    const int n2 = draw_calls(rng, n_max);
    Plumbing g2 = scramble(seed2, n2, rng, config.moves);
    return {std::move(g1), std::move(g2), -1};
}

bool lens_equivalent(std::int64_t p, std::int64_t a, std::int64_t b) {
    const std::int64_t ra = ((a % p) + p) % p, rb = ((b % p) + p) % p;
    const std::int64_t inv = mod_inverse(rb, p);
    return ra == rb || ra == (p - rb) % p || ra == inv || ra == (p - inv) % p;
}

PairSample lens_pair(Rng& rng, bool equivalent, int n_max, const MoveConfig& moves) {
    constexpr std::int64_t kMinOrder = 5, kMaxOrder = 50;
    for (;;) {
        const std::int64_t p = rng.uniform_int(kMinOrder, kMaxOrder);
        std::vector<std::int64_t> units;
        for (std::int64_t q = 1; q < p; ++q)
            if (std::gcd(q, p) == 1) units.push_back(q);
        const std::int64_t q1 = units[rng.index(units.size())];
        std::int64_t q2;
        if (equivalent) {
            q2 = rng.coin() ? q1 : mod_inverse(q1, p);
        } else {
            std::vector<std::int64_t> others;
            for (std::int64_t q : units)
                if (!lens_equivalent(p, q1, q)) others.push_back(q);
            if (others.empty()) continue;
            q2 = others[rng.index(others.size())];
        }
        const int n1 = draw_calls(rng, n_max);
        Plumbing g1 = scramble(lens_chain(p, q1), n1, rng, moves);
        const int n2 = draw_calls(rng, n_max);
        Plumbing g2 = scramble(lens_chain(p, q2), n2, rng, moves);
        return {std::move(g1), std::move(g2), equivalent ? 1 : -1};
    }
}

DatasetKind dataset_kind_from_name(const std::string& name) {
    if (name == "equiv") return DatasetKind::Equiv;
    if (name == "inequiv") return DatasetKind::Inequiv;
    if (name == "tweak") return DatasetKind::Tweak;
    if (name == "sl-mix") return DatasetKind::SlMix;
    if (name == "balanced") return DatasetKind::Balanced;
    if (name == "test4") return DatasetKind::Test4;
    if (name == "lens-equiv") return DatasetKind::LensEquiv;
    throw std::invalid_argument("unknown dataset kind: " + name);
}

std::string dataset_kind_name(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::Equiv: return "equiv";
    case DatasetKind::Inequiv: return "inequiv";
    case DatasetKind::Tweak: return "tweak";
    case DatasetKind::SlMix: return "sl-mix";
    case DatasetKind::Balanced: return "balanced";
    case DatasetKind::Test4: return "test4";
    case DatasetKind::LensEquiv: return "lens-equiv";
    }
    return "?";
}

nlohmann::json Dataset::header() const {
    return {{"kind", "plumbing-pairs"}, {"dataset", kind}, {"seed", seed}, {"nmax", n_max}, {"counts", counts}};
}

namespace {

enum class SampleKind { Equiv, Inequiv, Tweak, LensInequiv, LensEquiv };

// Per-sample kinds in generation order; mixed kinds list each block in turn.
std::vector<SampleKind> sample_plan(DatasetKind kind, int count) {
    std::vector<SampleKind> plan;
    auto append = [&](SampleKind k, int n) { plan.insert(plan.end(), n, k); };
    switch (kind) {
    case DatasetKind::Equiv: append(SampleKind::Equiv, count); break;
    case DatasetKind::Inequiv: append(SampleKind::Inequiv, count); break;
    case DatasetKind::Tweak: append(SampleKind::Tweak, count); break;
    case DatasetKind::Test4: append(SampleKind::LensInequiv, count); break;
    case DatasetKind::LensEquiv: append(SampleKind::LensEquiv, count); break;
    case DatasetKind::Balanced: {
        const int equiv = count / 2;
        append(SampleKind::Equiv, equiv);
        append(SampleKind::Inequiv, count - equiv);
        break;
    }
    case DatasetKind::SlMix: {
        const int equiv = static_cast<int>(std::llround(count * 4.0 / 8.0));
        const int inequiv = static_cast<int>(std::llround(count * 3.0 / 8.0));
        append(SampleKind::Equiv, equiv);
        append(SampleKind::Inequiv, inequiv);
        append(SampleKind::Tweak, count - equiv - inequiv);
        break;
    }
    }
    return plan;
}

bool is_mixed(DatasetKind kind) { return kind == DatasetKind::SlMix || kind == DatasetKind::Balanced; }

const char* sample_kind_name(SampleKind k) {
    switch (k) {
    case SampleKind::Equiv: return "equiv";
    case SampleKind::Inequiv: return "inequiv";
    case SampleKind::Tweak: return "tweak";
    case SampleKind::LensInequiv: return "lens-inequiv";
    case SampleKind::LensEquiv: return "lens-equiv";
    }
    return "?";
}

}  // namespace

Dataset make_dataset(DatasetKind kind, int count, int n_max, std::uint64_t seed, const GeneratorConfig& config) {
    if (count < 0) throw std::invalid_argument("count must be non-negative");
    if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
    const auto plan = sample_plan(kind, count);
    const Rng master(seed);
    std::vector<std::optional<PairSample>> slots(plan.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < static_cast<int>(plan.size()); ++i) {
        Rng rng = master.split(static_cast<std::uint64_t>(i));
        switch (plan[i]) {
        case SampleKind::Equiv: slots[i] = equiv_pair(rng, n_max, config); break;
        case SampleKind::Inequiv: slots[i] = inequiv_pair(rng, n_max, config); break;
        case SampleKind::Tweak: slots[i] = tweak_pair(rng, n_max, config); break;
        case SampleKind::LensInequiv: slots[i] = lens_pair(rng, false, n_max, config.moves); break;
        case SampleKind::LensEquiv: slots[i] = lens_pair(rng, true, n_max, config.moves); break;
        }
    }
    std::vector<std::size_t> order(slots.size());
    std::iota(order.begin(), order.end(), 0);
    if (is_mixed(kind)) {
        Rng shuffler = master.split(~std::uint64_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffler.index(i)]);
    }
    Dataset data{dataset_kind_name(kind), seed, n_max, nlohmann::json::object(), {}};
    for (SampleKind k : plan) {
        auto& slot = data.counts[sample_kind_name(k)];
        slot = slot.is_null() ? 1 : slot.get<int>() + 1;
    }
    data.pairs.reserve(slots.size());
    for (std::size_t i : order) data.pairs.push_back(std::move(*slots[i]));
    return data;
}

Dataset make_sl_dataset(std::uint64_t seed, double scale) {
    if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("scale must be in (0, 1]");
    return make_dataset(DatasetKind::SlMix, static_cast<int>(std::llround(80000 * scale)), 40, seed);
}

Dataset make_test4_pairs(int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("count must be at least 1");
    return make_dataset(DatasetKind::Test4, count, 40, seed);
}

nlohmann::json pair_to_json(const PairSample& s) {
    const auto j1 = to_json(s.g1), j2 = to_json(s.g2);
    return {{"x1", j1.at("weights")}, {"e1", j1.at("edges")}, {"x2", j2.at("weights")},
            {"e2", j2.at("edges")},   {"label", s.label}};
}

PairSample pair_from_json(const nlohmann::json& j) {
    for (const char* key : {"x1", "e1", "x2", "e2", "label"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("pair line missing \"") + key + "\"");
    const int label = j.at("label").get<int>();
    if (label != 1 && label != -1) throw std::invalid_argument("pair label must be 1 or -1");
    return {plumbing_from_json({{"weights", j.at("x1")}, {"edges", j.at("e1")}}),
            plumbing_from_json({{"weights", j.at("x2")}, {"edges", j.at("e2")}}), label};
}

void write_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << data.header().dump() << '\n';
    for (const auto& s : data.pairs) out << pair_to_json(s).dump() << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty dataset");
    const auto header = nlohmann::json::parse(line);
    if (header.value("kind", "") != "plumbing-pairs") throw std::invalid_argument(path + ": not a plumbing-pairs file");
    Dataset data{header.value("dataset", ""), header.value("seed", std::uint64_t{0}), header.value("nmax", 0),
                 header.value("counts", nlohmann::json::object()), {}};
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            data.pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return data;
}

}  // namespace plumbing
