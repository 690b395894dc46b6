#include "plumbing/core.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace plumbing {

Plumbing::Plumbing(std::vector<Weight> weights, const std::vector<Edge>& edges) {
    auto report = validate(weights, edges);
    if (!report.ok) throw std::invalid_argument("invalid plumbing: " + report.violation);
    adjacency_.assign(weights.size(), {});
    for (auto [a, b] : edges) {
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    weights_ = std::move(weights);
}

Plumbing Plumbing::trusted(std::vector<Weight> weights, std::vector<std::vector<int>> adjacency) {
    Plumbing p;
    p.weights_ = std::move(weights);
    p.adjacency_ = std::move(adjacency);
    for (auto& nbrs : p.adjacency_) std::sort(nbrs.begin(), nbrs.end());
    return p;
}

bool Plumbing::has_edge(int a, int b) const {
    if (a < 0 || b < 0 || a >= size() || b >= size()) return false;
    return std::binary_search(adjacency_[a].begin(), adjacency_[a].end(), b);
}

std::vector<Edge> Plumbing::edges() const {
    std::vector<Edge> out;
    out.reserve(weights_.empty() ? 0 : weights_.size() - 1);
    for (int v = 0; v < size(); ++v)
        for (int u : adjacency_[v])
            if (v < u) out.emplace_back(v, u);
    return out;
}

Plumbing Plumbing::relabeled(const std::vector<int>& perm) const {
    const int n = size();
    if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("relabeled: permutation size");
    std::vector<int> inverse(n, -1);
    for (int i = 0; i < n; ++i) {
        if (perm[i] < 0 || perm[i] >= n || inverse[perm[i]] != -1)
            throw std::invalid_argument("relabeled: not a permutation");
        inverse[perm[i]] = i;
    }
    std::vector<Weight> w(n);
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        w[i] = weights_[perm[i]];
        for (int u : adjacency_[perm[i]]) adj[i].push_back(inverse[u]);
    }
    return trusted(std::move(w), std::move(adj));
}

ValidationReport validate(const std::vector<Weight>& weights, const std::vector<Edge>& edges) {
    const auto n = static_cast<long>(weights.size());
    if (n < 1) return {false, "plumbing must have at least one vertex"};
    std::vector<Edge> seen;
    seen.reserve(edges.size());
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) return {false, "edge index out of range"};
        if (a == b) return {false, "self-loop at vertex " + std::to_string(a)};
        seen.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return {false, "duplicate edge"};
    if (static_cast<long>(edges.size()) != n - 1) {
        return {false, static_cast<long>(edges.size()) < n - 1 ? "disconnected: edge count below |V|-1"
                                                               : "cycle: edge count above |V|-1"};
    }
    // With |E| = |V|-1, connected <=> acyclic.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [a, b] : seen) {
        int ra = find(a), rb = find(b);
        if (ra == rb) return {false, "cycle through edge " + std::to_string(a) + "-" + std::to_string(b)};
        parent[ra] = rb;
    }
    return {};
}

std::vector<std::vector<std::int64_t>> weighted_adjacency(const Plumbing& p) {
    const int n = p.size();
    std::vector<std::vector<std::int64_t>> a(n, std::vector<std::int64_t>(n, 0));
    for (int v = 0; v < n; ++v) {
        a[v][v] = p.weight(v);
        for (int u : p.neighbors(v)) a[v][u] = 1;
    }
    return a;
}

namespace {

// Bareiss in machine integers; nullopt on any overflow.
template <typename Int>
std::optional<Int> bareiss_checked(std::vector<std::vector<Int>> a) {
    const std::size_t n = a.size();
    Int sign = 1, prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t pivot = k + 1;
            while (pivot < n && a[pivot][k] == 0) ++pivot;
            if (pivot == n) return Int{0};
            std::swap(a[k], a[pivot]);
            sign = -sign;
        }
        const Int akk = a[k][k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const Int aik = a[i][k];
            for (std::size_t j = k + 1; j < n; ++j) {
                Int lhs, rhs, diff;
                if (__builtin_mul_overflow(akk, a[i][j], &lhs)) return std::nullopt;
                if (__builtin_mul_overflow(aik, a[k][j], &rhs)) return std::nullopt;
                if (__builtin_sub_overflow(lhs, rhs, &diff)) return std::nullopt;
                a[i][j] = diff / prev;
            }
        }
        prev = akk;
    }
    return sign * a[n - 1][n - 1];
}

BigInt bareiss_big(const std::vector<std::vector<std::int64_t>>& m) {
    const std::size_t n = m.size();
    std::vector<std::vector<BigInt>> a(n, std::vector<BigInt>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = static_cast<long>(m[i][j]);
    int sign = 1;
    BigInt prev = 1, tmp;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t pivot = k + 1;
            while (pivot < n && a[pivot][k] == 0) ++pivot;
            if (pivot == n) return 0;
            std::swap(a[k], a[pivot]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                mpz_mul(tmp.get_mpz_t(), a[k][k].get_mpz_t(), a[i][j].get_mpz_t());
                mpz_submul(tmp.get_mpz_t(), a[i][k].get_mpz_t(), a[k][j].get_mpz_t());
                mpz_divexact(a[i][j].get_mpz_t(), tmp.get_mpz_t(), prev.get_mpz_t());
            }
        }
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

std::string int128_to_string(__int128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    std::string s;
    while (u > 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) s.push_back('-');
    std::reverse(s.begin(), s.end());
    return s;
}

}  // namespace

BigInt bareiss_determinant(std::vector<std::vector<std::int64_t>> matrix) {
    const std::size_t n = matrix.size();
    for (const auto& row : matrix)
        if (row.size() != n) throw std::invalid_argument("determinant: matrix is not square");
    if (n == 0) return 1;
    if (auto small = bareiss_checked<std::int64_t>(matrix)) return BigInt(static_cast<long>(*small));
    std::vector<std::vector<__int128>> wide(n, std::vector<__int128>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) wide[i][j] = matrix[i][j];
    if (auto mid = bareiss_checked<__int128>(std::move(wide))) return BigInt(int128_to_string(*mid));
    return bareiss_big(matrix);
}

BigInt determinant(const Plumbing& p) { return bareiss_determinant(weighted_adjacency(p)); }

BigInt homology_order(const Plumbing& p) {
    BigInt d = determinant(p);
    return abs(d);
}

std::int64_t complexity(const Plumbing& p) {
    std::int64_t f = 5 * static_cast<std::int64_t>(p.size());
    for (Weight w : p.weights()) f += w < 0 ? -w : w;
    return f;
}

namespace {

std::vector<int> centroids(const Plumbing& p) {
    const int n = p.size();
    if (n <= 2) {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    // BFS order from 0, then subtree sizes in reverse.
    std::vector<int> order{0}, parent(n, -1), sub(n, 1);
    order.reserve(n);
    parent[0] = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (int u : p.neighbors(order[i]))
            if (parent[u] == -1) {
                parent[u] = order[i];
                order.push_back(u);
            }
    for (int i = n - 1; i > 0; --i) sub[parent[order[i]]] += sub[order[i]];
    std::vector<int> result;
    for (int v = 0; v < n; ++v) {
        int heaviest = n - sub[v];
        for (int u : p.neighbors(v))
            if (parent[u] == v) heaviest = std::max(heaviest, sub[u]);
        if (2 * heaviest <= n) result.push_back(v);
    }
    return result;
}

std::string encode(const Plumbing& p, int v, int from) {
    std::vector<std::string> children;
    children.reserve(p.neighbors(v).size());
    for (int u : p.neighbors(v))
        if (u != from) children.push_back(encode(p, u, v));
    std::sort(children.begin(), children.end());
    std::string out = "(" + std::to_string(p.weight(v));
    for (auto& c : children) out += c;
    out += ')';
    return out;
}

}  // namespace

std::string canonical_key(const Plumbing& p) {
    std::string best;
    for (int c : centroids(p)) {
        std::string key = encode(p, c, -1);
        if (best.empty() || key < best) best = std::move(key);
    }
    return best;
}

bool is_isomorphic(const Plumbing& a, const Plumbing& b) {
    if (a.size() != b.size() || complexity(a) != complexity(b)) return false;
    return canonical_key(a) == canonical_key(b);
}

Plumbing lens_chain(std::int64_t p, std::int64_t q) {
    if (p < 2 || q < 1 || q >= p || std::gcd(p, q) != 1)
        throw std::invalid_argument("lens_chain: need coprime 1 <= q < p");
    std::vector<Weight> weights;
    while (q != 0) {
        const std::int64_t a = (p + q - 1) / q;
        weights.push_back(-a);
        const std::int64_t next_q = a * q - p;
        p = q;
        q = next_q;
    }
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < static_cast<int>(weights.size()); ++i) edges.emplace_back(i, i + 1);
    return Plumbing(std::move(weights), edges);
}

nlohmann::json to_json(const Plumbing& p) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : p.edges()) edges.push_back({a, b});
    return {{"weights", p.weights()}, {"edges", std::move(edges)}};
}

Plumbing plumbing_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("weights") || !j.contains("edges"))
        throw std::invalid_argument("graph JSON needs \"weights\" and \"edges\"");
    std::vector<Weight> weights;
    for (const auto& w : j.at("weights")) {
        if (!w.is_number_integer()) throw std::invalid_argument("graph JSON: weights must be integers");
        weights.push_back(w.get<Weight>());
    }
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw std::invalid_argument("graph JSON: edges must be [i, j] integer pairs");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return Plumbing(std::move(weights), edges);
}

Plumbing read_plumbing_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return plumbing_from_json(j);
}

void write_plumbing_file(const Plumbing& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(p).dump() << '\n';
}

Plumbing e8_plumbing() {
    // Chain 0-1-2-3-4-5-6 with vertex 7 hanging off 4: arms of length 4, 2, 1.
    std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {4, 7}};
    return Plumbing(std::vector<Weight>(8, -2), edges);
}

Plumbing star_plumbing(Weight center, const std::vector<Weight>& legs) {
    std::vector<Weight> weights{center};
    std::vector<Edge> edges;
    for (Weight w : legs) {
        edges.emplace_back(0, static_cast<int>(weights.size()));
        weights.push_back(w);
    }
    return Plumbing(std::move(weights), edges);
}

}  // namespace plumbing
