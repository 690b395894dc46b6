#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plumbing/moves.hpp"

namespace plumbing {

struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

struct GeneratorConfig {
    IntRange node_count{1, 25};
    IntRange weight{-20, 20};
    int n_max = 40;
    std::uint64_t seed = 0;
    MoveConfig moves{};

    void validate() const;
};

struct PairSample {
    Plumbing g1;
    Plumbing g2;
    int label = 1;  // +1 equivalent, -1 inequivalent
};

/// Random tree: vertex i >= 1 attaches to a uniform earlier vertex.
Plumbing random_plumbing(Rng& rng, const GeneratorConfig& config = {});
Plumbing random_plumbing_with_nodes(Rng& rng, int nodes, IntRange weight = {-20, 20});

/// `calls` draws of random_neumann_move; failed draws still count.
Plumbing scramble(const Plumbing& p, int calls, Rng& rng, const MoveConfig& config = {});
/// Keeps drawing until exactly `moves` draws have succeeded.
Plumbing scramble_successful(const Plumbing& p, int moves, Rng& rng, const MoveConfig& config = {});

PairSample equiv_pair(Rng& rng, int n_max, const GeneratorConfig& config = {});
PairSample equiv_pair_fixed_n(Rng& rng, int n, const GeneratorConfig& config = {});
PairSample inequiv_pair(Rng& rng, int n_max, const GeneratorConfig& config = {});
/// Same tree with one uniformly chosen weight shifted by t in {-3..3} \ {0}.
Plumbing tweak_weight(const Plumbing& p, Rng& rng);
PairSample tweak_pair(Rng& rng, int n_max, const GeneratorConfig& config = {});

/// Lens-space chains L(p, q1), L(p, q2), each scrambled by up to n_max moves.
/// Inequivalent: q2 is not +-q1^(+-1) mod p. Equivalent: q2 is q1 or q1^-1.
PairSample lens_pair(Rng& rng, bool equivalent, int n_max, const MoveConfig& moves = {});

/// True when L(p, a) and L(p, b) are homeomorphic (a = +-b^(+-1) mod p).
bool lens_equivalent(std::int64_t p, std::int64_t a, std::int64_t b);

enum class DatasetKind {
    Equiv,
    Inequiv,
    Tweak,
    SlMix,     // 4:3:1 equiv / inequiv / tweak
    Balanced,  // 1:1 equiv / inequiv
    Test4,     // inequivalent equal-determinant lens pairs
    LensEquiv  // equivalent lens pairs, the control for Test4
};

DatasetKind dataset_kind_from_name(const std::string& name);
std::string dataset_kind_name(DatasetKind kind);

struct Dataset {
    std::string kind;
    std::uint64_t seed = 0;
    int n_max = 0;
    nlohmann::json counts = nlohmann::json::object();  // pairs per generator
    std::vector<PairSample> pairs;

    nlohmann::json header() const;
};

/// Sample i draws from the stream split(i) of the seed, so output is independent
/// of thread count. Mixed kinds are shuffled with a seed-derived permutation.
Dataset make_dataset(DatasetKind kind, int count, int n_max, std::uint64_t seed, const GeneratorConfig& config = {});

/// 80,000 * scale pairs in 4:3:1 composition at N_max 40.
Dataset make_sl_dataset(std::uint64_t seed, double scale);
Dataset make_test4_pairs(int count, std::uint64_t seed);

void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

nlohmann::json pair_to_json(const PairSample& s);
PairSample pair_from_json(const nlohmann::json& j);

}  // namespace plumbing
