#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "proofplan/dynamics.hpp"
#include "proofplan/grid.hpp"
#include "proofplan/logic.hpp"
#include "proofplan/state.hpp"

namespace proofplan {

struct PlanStep {
    Action action = Action::North;
    AugmentedState from;
    AugmentedState to;
    RuleId rule = 0;
    std::vector<Proposition> antecedents;
    std::optional<RuleId> pickup_rule;  // key picked up on entering `to`

    friend bool operator==(const PlanStep &, const PlanStep &) = default;
};

struct Plan {
    std::vector<PlanStep> steps;

    std::size_t total_length() const;
    bool empty() const { return steps.empty(); }
    /// Start cell followed by the cell reached after each step.
    std::vector<Cell> cells(Cell start) const;
    friend bool operator==(const Plan &, const Plan &) = default;
};

/// Movement view of a rule set: every rule whose consequent is At(t) and which
/// has exactly one At antecedent becomes a move, and every rule
/// `At(c) [& ...] -> HasKey(k)` becomes an automatic pickup.
class TransitionSystem {
public:
    struct Move {
        const Rule *rule;
        Action action;
        Cell from;
        Cell to;
        KeySet needs;
        std::vector<Proposition> extra;  // conditions other than At/HasKey
    };
    struct Pickup {
        const Rule *rule;
        KeyId key;
        KeySet needs;
        std::vector<Proposition> extra;
    };
    /// Membership test for conditions that are neither At nor HasKey.
    using ExtraFacts = std::function<bool(const Proposition &)>;

    explicit TransitionSystem(std::span<const Rule> rules);

    /// Moves out of `cell`, ordered N, E, S, W then by rule id.
    std::span<const Move> moves_from(Cell cell) const;

    struct Successor {
        const Move *move;
        AugmentedState next;
        std::optional<RuleId> pickup_rule;
    };
    std::vector<Successor> successors(const AugmentedState &s, const ExtraFacts &extra = {}) const;
    /// Applies automatic pickups at the state's cell.
    AugmentedState settle(AugmentedState s, std::optional<RuleId> *pickup_rule = nullptr,
                          const ExtraFacts &extra = {}) const;

    PlanStep make_step(const Successor &succ, const AugmentedState &from) const;

private:
    std::map<Cell, std::vector<Move>> moves_;
    std::map<Cell, std::vector<Pickup>> pickups_;
};

/// True iff the state satisfies an At or HasKey goal; other kinds never hold.
bool state_satisfies(const AugmentedState &s, const Proposition &goal);

/// Reads the agent's position and inventory out of a knowledge base holding
/// exactly one At fact. Throws std::invalid_argument otherwise.
AugmentedState state_from_facts(const KnowledgeBase &facts);

/// Breadth-first search over augmented states; ties resolved by move order.
std::optional<std::vector<PlanStep>> search_steps(const TransitionSystem &ts, const AugmentedState &start,
                                                  const std::function<bool(const AugmentedState &)> &done,
                                                  const TransitionSystem::ExtraFacts &extra = {});

struct PlanResult {
    std::optional<Plan> plan;  // empty when unsolvable
    std::optional<ProofTree> proof;
    ClosureStats stats;
    std::size_t closure_computations = 0;
    AugmentedState start;

    bool solved() const { return plan.has_value(); }
};

/// One closure decides provability of the goal; the shortest justified move
/// sequence is then read off a BFS over (cell, inventory).
PlanResult plan(const CompiledEnv &env, const GridWorld &world);

struct OracleResult {
    int length = 0;
    std::vector<AugmentedState> path;
};

/// Brute-force BFS over the world's step function; independent of the rules.
std::optional<OracleResult> oracle_shortest(const GridWorld &world);

struct ValidationResult {
    bool valid = true;
    std::vector<std::size_t> invalid_steps;
};

/// Replays the plan's actions through simulate_step, starting from `start`
/// (world start with empty inventory when omitted).
ValidationResult validate_plan(const Plan &plan, const GridWorld &world);
ValidationResult validate_plan(const Plan &plan, const GridWorld &world, const AugmentedState &start);

/// Hook run before each step with the knowledge base the step will be checked against.
using ReplayHook = std::function<void(std::size_t step, KnowledgeBase &gamma)>;

/// Checks that every step's antecedents are in gamma at that point, where gamma
/// grows by each step's At(to) and picked-up keys. Returns indices of steps
/// whose justification is missing.
std::vector<std::size_t> replay_justifications(const Plan &plan, const std::vector<Rule> &rules,
                                               KnowledgeBase gamma, const ReplayHook &before_step = {});

/// Subgoal fragments keyed by (subgoal, cell + inventory). Readers may run
/// concurrently; insertion takes an exclusive lock.
class MemoCache {
public:
    using Key = std::pair<Proposition, AugmentedState>;

    std::optional<std::vector<PlanStep>> lookup(const Proposition &subgoal, const AugmentedState &from) const;
    void store(const Proposition &subgoal, const AugmentedState &from, std::vector<PlanStep> fragment);

    std::size_t size() const;
    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }
    void clear();

private:
    mutable std::shared_mutex mutex_;
    std::map<Key, std::vector<PlanStep>> entries_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

class SubgoalUnreachable : public std::runtime_error {
public:
    SubgoalUnreachable(std::size_t index, const Proposition &subgoal)
        : std::runtime_error("subgoal " + std::to_string(index) + " unreachable: " + subgoal.to_string()),
          index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

struct ChainFragment {
    Proposition subgoal;
    std::size_t first_step = 0;
    std::size_t step_count = 0;
    bool from_cache = false;
};

struct ChainResult {
    Plan plan;
    std::vector<ChainFragment> fragments;
    std::size_t closure_computations = 0;
    KnowledgeBase gamma;  // knowledge accumulated after the final fragment
};

/// Achieves the subgoals left to right. Each fragment starts where the previous
/// one ended, with the knowledge it accumulated. Pass a null cache to disable
/// memoization. Throws SubgoalUnreachable naming the first failing subgoal.
ChainResult plan_chain(const CompiledEnv &env, std::span<const Proposition> subgoals, MemoCache *cache);

}  // namespace proofplan
