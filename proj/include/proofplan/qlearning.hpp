#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "proofplan/dynamics.hpp"
#include "proofplan/grid.hpp"
#include "proofplan/state.hpp"

namespace proofplan {

/// Tabular action values over (cell, inventory) x {N, E, S, W}. Unseen pairs read as 0.
class QTable {
public:
    using Row = std::array<double, 4>;

    double value(const AugmentedState &s, Action a) const;
    const Row *row(const AugmentedState &s) const;
    Row &row_mut(const AugmentedState &s) { return rows_[s]; }
    double max_value(const AugmentedState &s) const;

    std::size_t support() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    /// Rows sorted by state, for reproducible serialization.
    std::vector<std::pair<AugmentedState, Row>> sorted_rows() const;

    friend bool operator==(const QTable &a, const QTable &b) { return a.rows_ == b.rows_; }

private:
    std::unordered_map<AugmentedState, Row, AugmentedStateHash> rows_;
};

std::size_t move_index(Action a);

struct Hyperparams {
    double alpha = 0.1;
    double gamma_discount = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    /// Linear decay horizon; defaults to 10% of `episodes` when unset.
    std::optional<std::int64_t> epsilon_decay_episodes;
    std::int64_t episodes = 5000;
    std::int64_t max_steps_per_episode = 200;
    std::uint64_t seed = 0;

    std::int64_t decay_episodes() const;
    double epsilon_at(std::int64_t episode) const;
    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

struct EpisodeMetrics {
    std::int64_t episode = 0;
    std::int64_t steps = 0;
    std::int64_t invalid_count = 0;
    bool success = false;
    /// Greedy rollout length after this episode's updates, when it reaches the goal.
    std::optional<std::int64_t> greedy_length;
};

struct TrainingResult {
    QTable table;
    std::vector<EpisodeMetrics> episodes;

    std::int64_t total_invalid() const;
};

/// One-step Q-learning with epsilon-greedy exploration (ties in the greedy
/// choice broken uniformly at random). Terminal transitions do not bootstrap.
/// Deterministic for a given seed.
TrainingResult train_q(const GridWorld &world, const Hyperparams &hp);

struct Rollout {
    std::vector<AugmentedState> states;  // includes the start state
    std::vector<Action> actions;
    std::vector<bool> invalid;
    bool success = false;
    bool looped = false;

    std::size_t length() const { return actions.size(); }
};

/// Follows argmax actions from the start (ties: N, E, S, W). Stops at the
/// goal, after `max_steps`, or as soon as a state repeats.
Rollout greedy_rollout(const QTable &q, const GridWorld &world, std::int64_t max_steps);

}  // namespace proofplan
