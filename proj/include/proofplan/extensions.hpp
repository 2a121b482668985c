#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "proofplan/grid.hpp"
#include "proofplan/logic.hpp"
#include "proofplan/planner.hpp"

namespace proofplan {

// ---------------------------------------------------------------------------
// Multi-agent coordination through message passing

/// A comm rule gates one transition At(s) -> At(s') behind Received facts for
/// a single recipient. The gated transition is withdrawn from every agent and
/// granted, under the comm rule, to the recipient only.
struct CommRuleInfo {
    AgentId recipient;
    Cell from;
    Cell to;
};

/// Throws std::invalid_argument when a rule has no Received antecedent, mixes
/// recipients, or is not a single-step At -> At transition.
CommRuleInfo classify_comm_rule(const Rule &rule);

/// Compiled rules of the world as seen by `agent`, with comm rules applied.
/// Comm rule i receives id `compiled.size() + i`.
std::vector<Rule> agent_rules(const GridWorld &world, std::span<const Rule> comm_rules, AgentId agent);

struct AgentAction {
    enum class Kind { Wait, Move, Send };
    Kind kind = Kind::Wait;
    Action move = Action::North;
    AgentId to = 0;                             // Send only
    Proposition fact = Proposition::atom("_");  // Send only: the fact shared

    friend bool operator==(const AgentAction &, const AgentAction &) = default;
};

/// A message sent during `sent_round` that lands as Received(to, fact) at the
/// start of `delivered_round`.
struct Delivery {
    std::size_t sent_round = 0;
    std::size_t delivered_round = 0;
    AgentId from = 0;
    AgentId to = 0;
    Proposition fact = Proposition::atom("_");

    friend bool operator==(const Delivery &, const Delivery &) = default;
};

struct AgentTimeline {
    AgentId agent = 0;
    Cell start;
    std::vector<AgentAction> actions;       // one per round, index 0 is round 1
    Plan plan;                              // the Move actions with their justifications
    std::vector<std::size_t> step_rounds;   // round of each plan step (1-based)
    KnowledgeBase final_gamma;
};

struct MultiAgentResult {
    std::size_t rounds = 0;
    std::map<AgentId, AgentTimeline> agents;
    std::vector<Delivery> deliveries;
    KnowledgeBase global_gamma;  // union of every agent's final knowledge
};

class NoJointPlan : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Round-synchronous joint search: each round every agent waits, moves once,
/// or sends one fact it holds (its current cell or a key it carries) to
/// another agent. Finds the fewest rounds, then the fewest non-wait actions.
/// `round_budget` 0 means unbounded.
MultiAgentResult multi_agent_plan(const GridWorld &world, std::span<const Rule> comm_rules,
                                  std::size_t round_budget = 0);

struct MultiAgentCheck {
    std::map<AgentId, ValidationResult> physical;
    std::map<AgentId, std::vector<std::size_t>> unjustified;  // plan step indices
    std::vector<std::size_t> unsupported_sends;               // delivery indices
    bool goal_reached = false;

    bool ok() const;
};

/// Replays every agent's plan under its own knowledge base, fed only by the
/// given delivery schedule.
MultiAgentCheck verify_multi_agent(const GridWorld &world, std::span<const Rule> comm_rules,
                                   const MultiAgentResult &result, std::span<const Delivery> schedule);

// ---------------------------------------------------------------------------
// Rule learning by safe probing

struct HiddenEnv {
    GridWorld true_world;
    std::vector<std::pair<Cell, Cell>> learnable;

    /// Every ordered pair of in-bounds 4-neighbours is learnable.
    static HiddenEnv from_world(GridWorld world);
};

struct ProbeRecord {
    std::size_t index = 0;
    Cell from;
    Cell to;
    Action action = Action::North;
    bool success = false;
    std::optional<RuleId> rule;
    bool source_proven = false;
};

struct LearningResult {
    std::vector<Rule> learned;
    std::vector<ProbeRecord> log;
};

/// Probes untried learnable transitions whose source the learner can already
/// prove reachable, chosen uniformly at random. Each probe attempts the move in
/// the hidden world with an empty inventory; a success admits `At(s) -> At(s')`,
/// a failure admits nothing.
LearningResult learn_rules(const HiddenEnv &hidden, std::size_t probe_budget, std::uint64_t seed);

/// True when every rule in `subset` has a content-equal rule in `reference`.
bool rules_subset(std::span<const Rule> subset, std::span<const Rule> reference);

// ---------------------------------------------------------------------------
// Conformant planning over possible worlds

struct WorldSet {
    std::vector<KnowledgeBase> worlds;

    /// Throws std::invalid_argument if empty or if two worlds coincide.
    void validate() const;
};

struct ConformantPlan {
    std::vector<Action> actions;
    std::vector<Plan> per_world;  // the same actions, justified in each world
};

class NoConformantPlan : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Breadth-first search over the vector of per-world states for one action
/// sequence that every world licenses at every step and that ends with the
/// goal holding in every world.
ConformantPlan plan_under_uncertainty(const WorldSet &worlds, std::span<const Rule> rules, const Proposition &goal);

}  // namespace proofplan
