#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plumbing/core.hpp"
#include "plumbing/rng.hpp"

namespace plumbing {

enum class Selector { AUp = 0, BUpPlus, BUpMinus, CUpPlus, CUpMinus, Down };
inline constexpr int kSelectorCount = 6;

enum class BlowDownKind { A, B, C };

/// Applied-move categories, numbered 1..8: five blow-ups then three blow-downs.
enum class MoveCategory { AUp = 1, BUpPlus, BUpMinus, CUpPlus, CUpMinus, ADown, BDown, CDown };
inline constexpr int kMoveCategoryCount = 8;

/// One per-node action. `neighbor` pins the edge of an AUp; -1 means the
/// lowest-indexed neighbor (the RL action space never sets it).
struct RlAction {
    int node = 0;
    Selector selector = Selector::Down;
    int neighbor = -1;

    friend bool operator==(const RlAction&, const RlAction&) = default;
};

struct AppliedMove {
    MoveCategory category;
    int node;
};

struct MoveConfig {
    /// Sign of the vertex inserted by an (a) blow-up.
    int a_up_sign = -1;
};

struct ActionResult {
    bool done;
    Plumbing result;
};

struct RandomMoveResult {
    bool done;
    Plumbing result;
    std::optional<AppliedMove> applied;
};

Plumbing blow_up_a(const Plumbing& p, int v1, int v2, int sign);
Plumbing blow_up_b(const Plumbing& p, int v, int sign);
Plumbing blow_up_c(const Plumbing& p, int v, int sign);

std::optional<BlowDownKind> legal_blow_down_kind(const Plumbing& p, int v);
std::optional<Plumbing> blow_down(const Plumbing& p, int v);

/// Legality without building the successor.
bool is_legal(const Plumbing& p, const RlAction& action);

ActionResult apply_action(const Plumbing& p, const RlAction& action, const MoveConfig& config = {});

/// Category an action is recorded under. A Down resolves to its legal kind;
/// an illegal Down is attributed by shape: degree 2 -> (a), a 0-leaf -> (c),
/// anything else -> (b).
MoveCategory categorize(const Plumbing& p, const RlAction& action);

/// Complexity of the successor of a legal action, computed without applying it.
std::int64_t successor_complexity(const Plumbing& p, const RlAction& action, const MoveConfig& config = {});

RandomMoveResult random_neumann_move(const Plumbing& p, Rng& rng, const MoveConfig& config = {});

/// All legal RL actions in (node, selector) order.
std::vector<RlAction> enumerate_legal_actions(const Plumbing& p);

/// Legal moves with every incident edge expanded for AUp; used by search.
std::vector<RlAction> enumerate_moves(const Plumbing& p);

const char* selector_name(Selector s);
Selector selector_from_name(const std::string& name);

nlohmann::json to_json(const RlAction& a);
RlAction action_from_json(const nlohmann::json& j);

}  // namespace plumbing
