#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

namespace plumbing {

using BigInt = mpz_class;
using Weight = std::int64_t;
using Edge = std::pair<int, int>;

/// A plumbing graph: a weighted tree with one integer framing per vertex.
///
/// Values are immutable once built. Neighbor lists are kept sorted so that
/// "lowest-indexed neighbor" is well defined and equality is structural.
class Plumbing {
public:
    /// Validating constructor; throws std::invalid_argument on any violation.
    Plumbing(std::vector<Weight> weights, const std::vector<Edge>& edges);

    static Plumbing single(Weight w) { return Plumbing({w}, {}); }

    /// Builds without validation. Callers guarantee the tree invariants.
    static Plumbing trusted(std::vector<Weight> weights, std::vector<std::vector<int>> adjacency);

    int size() const { return static_cast<int>(weights_.size()); }
    Weight weight(int v) const { return weights_[v]; }
    const std::vector<Weight>& weights() const { return weights_; }
    const std::vector<int>& neighbors(int v) const { return adjacency_[v]; }
    const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }
    int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
    bool has_edge(int a, int b) const;

    /// Edges with i < j, sorted lexicographically.
    std::vector<Edge> edges() const;

    /// Vertex i of the result is vertex perm[i] of this graph.
    Plumbing relabeled(const std::vector<int>& perm) const;

    friend bool operator==(const Plumbing&, const Plumbing&) = default;

private:
    Plumbing() = default;

    std::vector<Weight> weights_;
    std::vector<std::vector<int>> adjacency_;
};

struct ValidationReport {
    bool ok = true;
    std::string violation;
};

ValidationReport validate(const std::vector<Weight>& weights, const std::vector<Edge>& edges);
inline ValidationReport validate(const Plumbing& p) { return validate(p.weights(), p.edges()); }

/// Adjacency matrix with the framings on the diagonal, row-major.
std::vector<std::vector<std::int64_t>> weighted_adjacency(const Plumbing& p);

/// Exact determinant of a square integer matrix by fraction-free elimination.
BigInt bareiss_determinant(std::vector<std::vector<std::int64_t>> matrix);

BigInt determinant(const Plumbing& p);

/// |det|; zero means the first homology is infinite.
BigInt homology_order(const Plumbing& p);

/// 5|V| + sum |w(v)|.
std::int64_t complexity(const Plumbing& p);

/// Relabeling-invariant encoding; equal iff the weighted trees are isomorphic.
std::string canonical_key(const Plumbing& p);

bool is_isomorphic(const Plumbing& a, const Plumbing& b);

/// Chain with weights -a_1..-a_k from p/q = a_1 - 1/(a_2 - 1/(...)), a_i >= 2.
Plumbing lens_chain(std::int64_t p, std::int64_t q);

// Graph JSON: {"weights": [...], "edges": [[i, j], ...]}
nlohmann::json to_json(const Plumbing& p);
Plumbing plumbing_from_json(const nlohmann::json& j);
Plumbing read_plumbing_file(const std::string& path);
void write_plumbing_file(const Plumbing& p, const std::string& path);

/// Standard fixtures: E8 tree (all -2) and the three-legged star.
Plumbing e8_plumbing();
Plumbing star_plumbing(Weight center, const std::vector<Weight>& legs);

}  // namespace plumbing
