#pragma once

#include "proofplan/grid.hpp"
#include "proofplan/state.hpp"

namespace proofplan {

struct StepOutcome {
    AugmentedState next;
    double reward = 0.0;
    bool invalid = false;
    bool terminal = false;
};

inline constexpr double kGoalReward = 1.0;

/// Ground-truth environment dynamics shared by the Q-learning baseline and plan
/// replay. A move is rejected (agent stays, `invalid` set) when the target is
/// out of bounds, a wall, or a door whose key is not held. Entering a key cell
/// picks the key up. Non-movement actions are always rejected.
StepOutcome simulate_step(const GridWorld &world, const AugmentedState &state, Action action);

AugmentedState initial_state(const GridWorld &world);

}  // namespace proofplan
