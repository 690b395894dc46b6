#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plumbing/moves.hpp"

namespace plumbing {

struct SimplifyResult {
    Plumbing graph;
    std::vector<RlAction> path;  // replays from the input to `graph`
    std::int64_t complexity = 0;
};

/// Steepest descent on complexity over the RL action set.
SimplifyResult greedy_simplify(const Plumbing& p, int budget, const MoveConfig& config = {});

struct BeamOptions {
    int width = 16;
    int depth_budget = 200;
    /// Cap on expanded states; 0 means 5 * complexity(input).
    std::int64_t max_expansions = 0;
    MoveConfig moves{};
};

/// Beam search over the move graph scored by complexity, with canonical-key
/// deduplication. Returns the lowest-complexity graph visited.
SimplifyResult beam_simplify(const Plumbing& p, const BeamOptions& options);

inline SimplifyResult beam_simplify(const Plumbing& p, int width, int depth_budget) {
    BeamOptions options;
    options.width = width;
    options.depth_budget = depth_budget;
    return beam_simplify(p, options);
}

struct MovePath {
    std::vector<RlAction> first;   // applied to g1
    std::vector<RlAction> second;  // applied to g2
    std::size_t length() const { return first.size() + second.size(); }
};

/// Meet-in-the-middle BFS; a shortest connecting path of at most max_depth moves.
std::optional<MovePath> bidirectional_path(const Plumbing& g1, const Plumbing& g2, int max_depth,
                                           const MoveConfig& config = {});

enum class VerdictKind { Equivalent, Inequivalent, Unresolved };

struct Verdict {
    VerdictKind kind = VerdictKind::Unresolved;
    std::string witness_invariant;
    std::string witness_first, witness_second;
    MovePath paths;
};

struct EffortBudget {
    int beam_width = 16;
    int depth_budget = 200;
    std::int64_t max_expansions = 0;  // per side; 0 means 5 * complexity
};

Verdict decide_equivalence(const Plumbing& g1, const Plumbing& g2, const EffortBudget& budget = {},
                           const MoveConfig& config = {});

/// Replays a path, throwing if any step is illegal.
Plumbing replay(const Plumbing& start, const std::vector<RlAction>& path, const MoveConfig& config = {});

nlohmann::json to_json(const Verdict& v);

}  // namespace plumbing
