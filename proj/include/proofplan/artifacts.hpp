#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proofplan/extensions.hpp"
#include "proofplan/grid.hpp"
#include "proofplan/logic.hpp"
#include "proofplan/planner.hpp"
#include "proofplan/qlearning.hpp"

namespace proofplan {

using Json = nlohmann::ordered_json;

Json cell_json(Cell c);
Cell cell_from_json(const Json &j);
Json state_json(const AugmentedState &s);
AugmentedState state_from_json(const Json &j);

Json rule_json(const Rule &r);
/// Accepts {antecedents, consequent, action?, id?}; `fallback_id` is used when id is absent.
Rule rule_from_json(const Json &j, RuleId fallback_id);
std::vector<Rule> comm_rules_from_json(const Json &j);

Json plan_json(const Plan &plan, Cell start, Cell goal, const ValidationResult &validation);
Json unsolvable_plan_json(Cell start, Cell goal);
Plan plan_from_json(const Json &j);

/// Nested tree plus a flat listing of the tree's distinct nodes in the order
/// they were derived (children before parents).
Json proof_json(const ProofTree &tree, const ClosureStats &stats);
ProofTree proof_from_json(const Json &doc);

Json qtable_json(const QTable &q);
std::string episodes_csv(const std::vector<EpisodeMetrics> &episodes);
Json rollout_json(const Rollout &r);

Hyperparams hyperparams_from_json(const Json &j);
Json hyperparams_json(const Hyperparams &hp);

/// ASCII overlay of the plan (`*` path, `k` key pickup, `d` door entry) followed
/// by one line per step naming the licensing rule.
std::string render_trace(const GridWorld &world, const Plan &plan, Cell start, const std::vector<Rule> &rules);

struct ParsedTrace {
    std::vector<std::string> overlay;
    std::vector<Cell> cells;  // start then the cell after each step
};
ParsedTrace parse_trace(std::string_view text);

struct MethodMetrics {
    std::string method;
    bool success = false;
    std::int64_t invalid_actions = 0;
    std::int64_t episodes_required = 0;
    std::optional<std::int64_t> plan_length;
    std::optional<std::int64_t> optimal_length;
    double wall_time_ms = 0.0;
};

struct ExperimentReport {
    std::string grid_digest;
    int width = 0;
    int height = 0;
    std::size_t key_count = 0;
    std::size_t door_count = 0;
    Hyperparams config;
    std::optional<std::int64_t> optimal_length;
    std::vector<MethodMetrics> methods;
    std::vector<std::pair<std::string, std::string>> artifacts;
};

Json report_json(const ExperimentReport &r);
std::string report_csv(const ExperimentReport &r);
std::string report_table(const ExperimentReport &r);

/// First episode (1-based count) from which every later greedy rollout has
/// the optimal length; `episodes.size()` when the final policy is not optimal.
std::int64_t episodes_to_stable(const std::vector<EpisodeMetrics> &episodes, std::optional<std::int64_t> optimal);

Json multi_agent_json(const MultiAgentResult &r, const MultiAgentCheck &check);
Json learning_json(const LearningResult &r, std::size_t budget, std::uint64_t seed, bool sound);
std::string probes_csv(const LearningResult &r);

std::string read_file(const std::filesystem::path &p);
void write_file(const std::filesystem::path &p, std::string_view content);
/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path &p, const Json &j);

}  // namespace proofplan
