#include "proofplan/dynamics.hpp"

namespace proofplan {

KeySet KeySet::from_string(std::string_view letters) {
    KeySet s;
    for (char c : letters) {
        if (c < 'a' || c > 'z') throw std::invalid_argument("inventory letters must be a-z");
        s.insert(c);
    }
    return s;
}

std::vector<KeyId> KeySet::keys() const {
    std::vector<KeyId> out;
    for (unsigned i = 0; i < 26; ++i)
        if ((mask_ >> i) & 1U) out.push_back(static_cast<KeyId>('a' + i));
    return out;
}

std::string KeySet::to_string() const {
    const auto k = keys();
    return {k.begin(), k.end()};
}

std::string to_string(const AugmentedState &s) {
    return "(" + std::to_string(s.cell.x) + "," + std::to_string(s.cell.y) + "){" + s.inventory.to_string() + "}";
}

AugmentedState initial_state(const GridWorld &world) { return {world.start, {}}; }

StepOutcome simulate_step(const GridWorld &world, const AugmentedState &state, Action action) {
    StepOutcome out{state, 0.0, true, state.cell == world.goal};
    if (!is_move(action)) return out;
    const Cell target = step_cell(state.cell, action);
    if (!world.in_bounds(target) || world.is_wall(target)) return out;
    if (auto door = world.doors.find(target); door != world.doors.end() && !state.inventory.contains(door->second))
        return out;

    out.invalid = false;
    out.next.cell = target;
    if (auto key = world.keys.find(target); key != world.keys.end()) out.next.inventory.insert(key->second);
    out.terminal = target == world.goal;
    out.reward = out.terminal ? kGoalReward : 0.0;
    return out;
}

}  // namespace proofplan
