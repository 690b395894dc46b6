#include "plumbing/moves.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <stdexcept>

namespace plumbing {

namespace {

void check_vertex(const Plumbing& p, int v) {
    if (v < 0 || v >= p.size()) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
}

void check_sign(int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("move sign must be +1 or -1");
}

void unlink(std::vector<int>& nbrs, int u) { nbrs.erase(std::find(nbrs.begin(), nbrs.end(), u)); }

// Removes the listed vertices and shifts the remaining indices down.
Plumbing remove_vertices(std::vector<Weight> weights, std::vector<std::vector<int>> adj, std::vector<int> gone) {
    std::sort(gone.begin(), gone.end());
    const int n = static_cast<int>(weights.size());
    std::vector<int> remap(n, -1);
    int next = 0;
    for (int v = 0, g = 0; v < n; ++v) {
        if (g < static_cast<int>(gone.size()) && gone[g] == v) {
            ++g;
            continue;
        }
        remap[v] = next++;
    }
    std::vector<Weight> w;
    std::vector<std::vector<int>> a;
    w.reserve(next);
    a.reserve(next);
    for (int v = 0; v < n; ++v) {
        if (remap[v] < 0) continue;
        w.push_back(weights[v]);
        std::vector<int> nbrs;
        nbrs.reserve(adj[v].size());
        for (int u : adj[v]) nbrs.push_back(remap[u]);
        a.push_back(std::move(nbrs));
    }
    return Plumbing::trusted(std::move(w), std::move(a));
}

Weight abs_w(Weight w) { return w < 0 ? -w : w; }

}  // namespace

Plumbing blow_up_a(const Plumbing& p, int v1, int v2, int sign) {
    check_sign(sign);
    if (!p.has_edge(v1, v2)) throw std::invalid_argument("blow_up_a: edge does not exist");
    auto w = p.weights();
    auto adj = p.adjacency();
    const int u = p.size();
    unlink(adj[v1], v2);
    unlink(adj[v2], v1);
    adj[v1].push_back(u);
    adj[v2].push_back(u);
    adj.push_back({v1, v2});
    w[v1] += sign;
    w[v2] += sign;
    w.push_back(sign);
    return Plumbing::trusted(std::move(w), std::move(adj));
}

Plumbing blow_up_b(const Plumbing& p, int v, int sign) {
    check_sign(sign);
    check_vertex(p, v);
    auto w = p.weights();
    auto adj = p.adjacency();
    const int u = p.size();
    adj[v].push_back(u);
    adj.push_back({v});
    w[v] += sign;
    w.push_back(sign);
    return Plumbing::trusted(std::move(w), std::move(adj));
}

Plumbing blow_up_c(const Plumbing& p, int v, int sign) {
    check_sign(sign);
    check_vertex(p, v);
    auto w = p.weights();
    auto adj = p.adjacency();
    const int u = p.size(), t = u + 1;
    adj[v].push_back(u);
    adj.push_back({v, t});
    adj.push_back({u});
    w.push_back(sign);
    w.push_back(0);
    return Plumbing::trusted(std::move(w), std::move(adj));
}

std::optional<BlowDownKind> legal_blow_down_kind(const Plumbing& p, int v) {
    check_vertex(p, v);
    const Weight w = p.weight(v);
    const int deg = p.degree(v);
    if (deg == 2 && abs_w(w) == 1) return BlowDownKind::A;
    if (deg == 1 && abs_w(w) == 1) return BlowDownKind::B;
    // The neighbor must have degree exactly 2; degree 1 would empty the graph.
    if (deg == 1 && w == 0 && p.degree(p.neighbors(v)[0]) == 2) return BlowDownKind::C;
    return std::nullopt;
}

std::optional<Plumbing> blow_down(const Plumbing& p, int v) {
    const auto kind = legal_blow_down_kind(p, v);
    if (!kind) return std::nullopt;
    auto w = p.weights();
    auto adj = p.adjacency();
    switch (*kind) {
    case BlowDownKind::A: {
        const Weight eps = w[v];
        const int n1 = adj[v][0], n2 = adj[v][1];
        unlink(adj[n1], v);
        unlink(adj[n2], v);
        adj[n1].push_back(n2);
        adj[n2].push_back(n1);
        w[n1] -= eps;
        w[n2] -= eps;
        return remove_vertices(std::move(w), std::move(adj), {v});
    }
    case BlowDownKind::B: {
        const int nb = adj[v][0];
        unlink(adj[nb], v);
        w[nb] -= w[v];
        return remove_vertices(std::move(w), std::move(adj), {v});
    }
    case BlowDownKind::C: {
        const int u = adj[v][0];
        const int far = adj[u][0] == v ? adj[u][1] : adj[u][0];
        unlink(adj[far], u);
        return remove_vertices(std::move(w), std::move(adj), {v, u});
    }
    }
    return std::nullopt;
}

namespace {

int a_up_target(const Plumbing& p, const RlAction& action) {
    if (p.degree(action.node) == 0) return -1;
    if (action.neighbor < 0) return p.neighbors(action.node).front();
    return p.has_edge(action.node, action.neighbor) ? action.neighbor : -1;
}

}  // namespace

bool is_legal(const Plumbing& p, const RlAction& action) {
    check_vertex(p, action.node);
    switch (action.selector) {
    case Selector::AUp: return a_up_target(p, action) >= 0;
    case Selector::Down: return legal_blow_down_kind(p, action.node).has_value();
    default: return true;
    }
}

ActionResult apply_action(const Plumbing& p, const RlAction& action, const MoveConfig& config) {
    check_vertex(p, action.node);
    const int v = action.node;
    switch (action.selector) {
    case Selector::AUp: {
        const int u = a_up_target(p, action);
        if (u < 0) return {false, p};
        return {true, blow_up_a(p, v, u, config.a_up_sign)};
    }
    case Selector::BUpPlus: return {true, blow_up_b(p, v, +1)};
    case Selector::BUpMinus: return {true, blow_up_b(p, v, -1)};
    case Selector::CUpPlus: return {true, blow_up_c(p, v, +1)};
    case Selector::CUpMinus: return {true, blow_up_c(p, v, -1)};
    case Selector::Down: {
        auto down = blow_down(p, v);
        if (!down) return {false, p};
        return {true, std::move(*down)};
    }
    }
    return {false, p};
}

MoveCategory categorize(const Plumbing& p, const RlAction& action) {
    check_vertex(p, action.node);
    switch (action.selector) {
    case Selector::AUp: return MoveCategory::AUp;
    case Selector::BUpPlus: return MoveCategory::BUpPlus;
    case Selector::BUpMinus: return MoveCategory::BUpMinus;
    case Selector::CUpPlus: return MoveCategory::CUpPlus;
    case Selector::CUpMinus: return MoveCategory::CUpMinus;
    case Selector::Down: break;
    }
    if (auto kind = legal_blow_down_kind(p, action.node)) {
        switch (*kind) {
        case BlowDownKind::A: return MoveCategory::ADown;
        case BlowDownKind::B: return MoveCategory::BDown;
        case BlowDownKind::C: return MoveCategory::CDown;
        }
    }
    const int deg = p.degree(action.node);
    if (deg == 2) return MoveCategory::ADown;
    if (deg == 1 && p.weight(action.node) == 0) return MoveCategory::CDown;
    return MoveCategory::BDown;
}

std::int64_t successor_complexity(const Plumbing& p, const RlAction& action, const MoveConfig& config) {
    const int v = action.node;
    const std::int64_t f = complexity(p);
    const Weight wv = p.weight(v);
    auto shifted = [](Weight w, int by) { return abs_w(w + by) - abs_w(w); };
    switch (action.selector) {
    case Selector::AUp: {
        const int u = a_up_target(p, action);
        const int s = config.a_up_sign;
        return f + 6 + shifted(wv, s) + shifted(p.weight(u), s);
    }
    case Selector::BUpPlus: return f + 6 + shifted(wv, +1);
    case Selector::BUpMinus: return f + 6 + shifted(wv, -1);
    case Selector::CUpPlus:
    case Selector::CUpMinus: return f + 11;
    case Selector::Down: break;
    }
    switch (*legal_blow_down_kind(p, v)) {
    case BlowDownKind::A: {
        const int eps = static_cast<int>(wv);
        const auto& nb = p.neighbors(v);
        return f - 6 + shifted(p.weight(nb[0]), -eps) + shifted(p.weight(nb[1]), -eps);
    }
    case BlowDownKind::B: return f - 6 + shifted(p.weight(p.neighbors(v)[0]), -static_cast<int>(wv));
    case BlowDownKind::C: return f - 10 - abs_w(p.weight(p.neighbors(v)[0]));
    }
    return f;
}

RandomMoveResult random_neumann_move(const Plumbing& p, Rng& rng, const MoveConfig& config) {
    const int v = static_cast<int>(rng.index(p.size()));
    const int type = static_cast<int>(rng.uniform_int(1, 3));
    const bool up = rng.coin();
    if (up) {
        if (type == 1) {
            const auto& nbrs = p.neighbors(v);
            if (nbrs.empty()) return {false, p, std::nullopt};
            const int u = nbrs[rng.index(nbrs.size())];
            return {true, blow_up_a(p, v, u, config.a_up_sign), AppliedMove{MoveCategory::AUp, v}};
        }
        const int sign = rng.coin() ? 1 : -1;
        if (type == 2)
            return {true, blow_up_b(p, v, sign),
                    AppliedMove{sign > 0 ? MoveCategory::BUpPlus : MoveCategory::BUpMinus, v}};
        return {true, blow_up_c(p, v, sign),
                AppliedMove{sign > 0 ? MoveCategory::CUpPlus : MoveCategory::CUpMinus, v}};
    }
    const auto kind = legal_blow_down_kind(p, v);
    if (!kind) return {false, p, std::nullopt};
    static constexpr std::array<MoveCategory, 3> down_category{MoveCategory::ADown, MoveCategory::BDown,
                                                               MoveCategory::CDown};
    return {true, *blow_down(p, v), AppliedMove{down_category[static_cast<int>(*kind)], v}};
}

std::vector<RlAction> enumerate_legal_actions(const Plumbing& p) {
    std::vector<RlAction> out;
    out.reserve(5 * p.size());
    for (int v = 0; v < p.size(); ++v)
        for (int s = 0; s < kSelectorCount; ++s) {
            RlAction a{v, static_cast<Selector>(s)};
            if (is_legal(p, a)) out.push_back(a);
        }
    return out;
}

std::vector<RlAction> enumerate_moves(const Plumbing& p) {
    std::vector<RlAction> out;
    out.reserve(6 * p.size());
    for (int v = 0; v < p.size(); ++v) {
        for (int u : p.neighbors(v))
            if (v < u) out.push_back({v, Selector::AUp, u});
        for (int s = 1; s < kSelectorCount; ++s) {
            RlAction a{v, static_cast<Selector>(s)};
            if (is_legal(p, a)) out.push_back(a);
        }
    }
    return out;
}

const char* selector_name(Selector s) {
    switch (s) {
    case Selector::AUp: return "AUp";
    case Selector::BUpPlus: return "BUpPlus";
    case Selector::BUpMinus: return "BUpMinus";
    case Selector::CUpPlus: return "CUpPlus";
    case Selector::CUpMinus: return "CUpMinus";
    case Selector::Down: return "Down";
    }
    return "?";
}

Selector selector_from_name(const std::string& name) {
    for (int s = 0; s < kSelectorCount; ++s)
        if (name == selector_name(static_cast<Selector>(s))) return static_cast<Selector>(s);
    throw std::invalid_argument("unknown selector: " + name);
}

nlohmann::json to_json(const RlAction& a) {
    nlohmann::json j{{"node", a.node}, {"selector", selector_name(a.selector)}};
    if (a.neighbor >= 0) j["neighbor"] = a.neighbor;
    return j;
}

RlAction action_from_json(const nlohmann::json& j) {
    RlAction a{j.at("node").get<int>(), selector_from_name(j.at("selector").get<std::string>())};
    if (j.contains("neighbor")) a.neighbor = j.at("neighbor").get<int>();
    return a;
}

}  // namespace plumbing
