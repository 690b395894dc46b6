#include "plumbing/search.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace plumbing {

Plumbing replay(const Plumbing& start, const std::vector<RlAction>& path, const MoveConfig& config) {
    Plumbing current = start;
    for (const auto& action : path) {
        auto step = apply_action(current, action, config);
        if (!step.done) throw std::logic_error("replay: illegal action in path");
        current = std::move(step.result);
    }
    return current;
}

SimplifyResult greedy_simplify(const Plumbing& p, int budget, const MoveConfig& config) {
    SimplifyResult out{p, {}, complexity(p)};
    while (static_cast<int>(out.path.size()) < budget) {
        std::optional<RlAction> best;
        std::int64_t best_f = out.complexity;
        for (const auto& action : enumerate_legal_actions(out.graph)) {
            const auto f = successor_complexity(out.graph, action, config);
            if (f < best_f) {
                best_f = f;
                best = action;
            }
        }
        if (!best) break;
        out.graph = apply_action(out.graph, *best, config).result;
        out.path.push_back(*best);
        out.complexity = best_f;
    }
    return out;
}

namespace {

// Visited-state arena shared by beam and BFS: parent links instead of paths.
struct SearchTree {
    struct Node {
        int parent;
        RlAction action;
        int depth;
    };
    std::vector<Node> nodes;
    std::unordered_map<std::string, int> index;

    int add(std::string key, int parent, RlAction action) {
        const int depth = parent < 0 ? 0 : nodes[parent].depth + 1;
        nodes.push_back({parent, action, depth});
        const int id = static_cast<int>(nodes.size()) - 1;
        index.emplace(std::move(key), id);
        return id;
    }

    const int* find(const std::string& key) const {
        auto it = index.find(key);
        return it == index.end() ? nullptr : &it->second;
    }

    std::vector<RlAction> path_to(int id) const {
        std::vector<RlAction> path;
        for (; nodes[id].parent >= 0; id = nodes[id].parent) path.push_back(nodes[id].action);
        std::reverse(path.begin(), path.end());
        return path;
    }
};

struct Frontier {
    Plumbing graph;
    int id;
};

// Runs beam search; `on_visit(key, id)` sees every newly recorded state and
// may return true to stop early.
template <typename OnVisit>
SimplifyResult run_beam(const Plumbing& p, const BeamOptions& options, SearchTree& tree, OnVisit&& on_visit) {
    if (options.width < 1) throw std::invalid_argument("beam width must be at least 1");
    const std::int64_t cap = options.max_expansions > 0 ? options.max_expansions : 5 * complexity(p);
    std::string root_key = canonical_key(p);
    const bool stop_at_root = on_visit(root_key, 0);
    std::vector<Frontier> frontier{{p, tree.add(std::move(root_key), -1, {})}};
    Plumbing best = p;
    int best_id = frontier.front().id;
    std::int64_t best_f = complexity(p);
    if (stop_at_root) return {best, tree.path_to(best_id), best_f};

    std::int64_t expansions = 0;
    struct Candidate {
        std::int64_t f;
        int parent;
        RlAction action;
    };
    std::vector<Candidate> candidates;
    for (int depth = 0; depth < options.depth_budget && !frontier.empty() && expansions < cap; ++depth) {
        candidates.clear();
        for (int i = 0; i < static_cast<int>(frontier.size()) && expansions < cap; ++i, ++expansions)
            for (const auto& move : enumerate_moves(frontier[i].graph))
                candidates.push_back({successor_complexity(frontier[i].graph, move, options.moves), i, move});
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
        std::vector<Frontier> next;
        for (const auto& c : candidates) {
            if (static_cast<int>(next.size()) >= options.width) break;
            Plumbing succ = apply_action(frontier[c.parent].graph, c.action, options.moves).result;
            std::string key = canonical_key(succ);
            if (tree.find(key)) continue;
            const int id = static_cast<int>(tree.nodes.size());
            const bool stop = on_visit(key, id);
            tree.add(std::move(key), frontier[c.parent].id, c.action);
            if (c.f < best_f) {
                best_f = c.f;
                best = succ;
                best_id = id;
            }
            next.push_back({std::move(succ), id});
            if (stop) return {best, tree.path_to(best_id), best_f};
        }
        frontier = std::move(next);
    }
    return {best, tree.path_to(best_id), best_f};
}

}  // namespace

SimplifyResult beam_simplify(const Plumbing& p, const BeamOptions& options) {
    SearchTree tree;
    return run_beam(p, options, tree, [](const std::string&, int) { return false; });
}

std::optional<MovePath> bidirectional_path(const Plumbing& g1, const Plumbing& g2, int max_depth,
                                           const MoveConfig& config) {
    if (max_depth < 0 || max_depth > 8) throw std::invalid_argument("bidirectional_path: max_depth must be in [0, 8]");
    SearchTree trees[2];
    std::vector<Frontier> frontiers[2];
    int radius[2] = {0, 0};
    const Plumbing* starts[2] = {&g1, &g2};
    for (int s = 0; s < 2; ++s) {
        std::string key = canonical_key(*starts[s]);
        frontiers[s].push_back({*starts[s], trees[s].add(key, -1, {})});
    }
    if (trees[1].find(trees[0].index.begin()->first)) return MovePath{};

    while (radius[0] + radius[1] < max_depth) {
        const int side = frontiers[0].size() <= frontiers[1].size() ? 0 : 1;
        if (frontiers[side].empty()) break;
        SearchTree& own = trees[side];
        const SearchTree& other = trees[1 - side];
        std::vector<Frontier> next;
        int best_total = -1, best_own = -1, best_other = -1;
        for (const auto& state : frontiers[side]) {
            for (const auto& move : enumerate_moves(state.graph)) {
                Plumbing succ = apply_action(state.graph, move, config).result;
                std::string key = canonical_key(succ);
                if (own.find(key)) continue;
                const int* hit = other.find(key);
                const int id = own.add(std::move(key), state.id, move);
                if (hit) {
                    const int total = own.nodes[id].depth + other.nodes[*hit].depth;
                    if (best_total < 0 || total < best_total) {
                        best_total = total;
                        best_own = id;
                        best_other = *hit;
                    }
                }
                next.push_back({std::move(succ), id});
            }
        }
        ++radius[side];
        if (best_total >= 0) {
            MovePath path;
            auto own_path = own.path_to(best_own);
            auto other_path = other.path_to(best_other);
            path.first = side == 0 ? own_path : other_path;
            path.second = side == 0 ? other_path : own_path;
            return path;
        }
        frontiers[side] = std::move(next);
    }
    return std::nullopt;
}

Verdict decide_equivalence(const Plumbing& g1, const Plumbing& g2, const EffortBudget& budget,
                           const MoveConfig& config) {
    Verdict verdict;
    const BigInt h1 = homology_order(g1), h2 = homology_order(g2);
    if (h1 != h2) {
        verdict.kind = VerdictKind::Inequivalent;
        verdict.witness_invariant = "homology_order";
        verdict.witness_first = h1.get_str();
        verdict.witness_second = h2.get_str();
        return verdict;
    }
    BeamOptions options;
    options.width = budget.beam_width;
    options.depth_budget = budget.depth_budget;
    options.max_expansions = budget.max_expansions;
    options.moves = config;

    SearchTree first, second;
    run_beam(g1, options, first, [](const std::string&, int) { return false; });
    int meet_first = -1, meet_second = -1;
    run_beam(g2, options, second, [&](const std::string& key, int id) {
        const int* hit = first.find(key);
        if (!hit) return false;
        meet_first = *hit;
        meet_second = id;
        return true;
    });
    if (meet_first >= 0) {
        verdict.kind = VerdictKind::Equivalent;
        verdict.paths.first = first.path_to(meet_first);
        verdict.paths.second = second.path_to(meet_second);
    }
    return verdict;
}

nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j;
    switch (v.kind) {
    case VerdictKind::Equivalent: j["verdict"] = "equivalent"; break;
    case VerdictKind::Inequivalent: j["verdict"] = "inequivalent"; break;
    case VerdictKind::Unresolved: j["verdict"] = "unresolved"; break;
    }
    if (v.kind == VerdictKind::Inequivalent)
        j["witness"] = {{"invariant", v.witness_invariant}, {"g1", v.witness_first}, {"g2", v.witness_second}};
    else
        j["witness"] = nullptr;
    nlohmann::json p1 = nlohmann::json::array(), p2 = nlohmann::json::array();
    for (const auto& a : v.paths.first) p1.push_back(to_json(a));
    for (const auto& a : v.paths.second) p2.push_back(to_json(a));
    j["path1"] = std::move(p1);
    j["path2"] = std::move(p2);
    return j;
}

}  // namespace plumbing
