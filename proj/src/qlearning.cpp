#include "proofplan/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_set>

namespace proofplan {

std::size_t move_index(Action a) {
    switch (a) {
        case Action::North: return 0;
        case Action::East: return 1;
        case Action::South: return 2;
        case Action::West: return 3;
        default: throw std::invalid_argument("not a movement action");
    }
}

double QTable::value(const AugmentedState &s, Action a) const {
    const Row *r = row(s);
    return r ? (*r)[move_index(a)] : 0.0;
}

const QTable::Row *QTable::row(const AugmentedState &s) const {
    auto it = rows_.find(s);
    return it == rows_.end() ? nullptr : &it->second;
}

double QTable::max_value(const AugmentedState &s) const {
    const Row *r = row(s);
    return r ? *std::max_element(r->begin(), r->end()) : 0.0;
}

std::vector<std::pair<AugmentedState, QTable::Row>> QTable::sorted_rows() const {
    std::vector<std::pair<AugmentedState, Row>> out(rows_.begin(), rows_.end());
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    return out;
}

std::int64_t Hyperparams::decay_episodes() const {
    if (epsilon_decay_episodes) return *epsilon_decay_episodes;
    return static_cast<std::int64_t>(std::llround(0.1 * static_cast<double>(episodes)));
}

double Hyperparams::epsilon_at(std::int64_t episode) const {
    const std::int64_t horizon = decay_episodes();
    if (horizon <= 0) return epsilon_end;
    const double t = std::min(1.0, static_cast<double>(episode) / static_cast<double>(horizon));
    return epsilon_start + (epsilon_end - epsilon_start) * t;
}

void Hyperparams::validate() const {
    auto fail = [](const std::string &msg) { throw std::invalid_argument(msg); };
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
    if (!(gamma_discount >= 0.0 && gamma_discount < 1.0)) fail("gamma_discount must be in [0, 1)");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must be in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) fail("epsilon_end must be in [0, 1]");
    if (epsilon_decay_episodes && *epsilon_decay_episodes < 0) fail("epsilon_decay_episodes must be >= 0");
    if (episodes < 0) fail("episodes must be >= 0");
    if (max_steps_per_episode < 0) fail("max_steps_per_episode must be >= 0");
}

std::int64_t TrainingResult::total_invalid() const {
    std::int64_t n = 0;
    for (const auto &e : episodes) n += e.invalid_count;
    return n;
}

TrainingResult train_q(const GridWorld &world, const Hyperparams &hp) {
    hp.validate();
    TrainingResult result;
    result.episodes.reserve(static_cast<std::size_t>(hp.episodes));
    std::mt19937_64 rng(hp.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_action(0, 3);

    auto choose = [&](const AugmentedState &s, double epsilon) -> int {
        if (unit(rng) < epsilon) return pick_action(rng);
        const QTable::Row *row = result.table.row(s);
        if (!row) return pick_action(rng);
        const double best = *std::max_element(row->begin(), row->end());
        int ties[4];
        int n = 0;
        for (int i = 0; i < 4; ++i)
            if ((*row)[static_cast<std::size_t>(i)] == best) ties[n++] = i;
        if (n == 1) return ties[0];
        return ties[std::uniform_int_distribution<int>(0, n - 1)(rng)];
    };

    for (std::int64_t ep = 0; ep < hp.episodes; ++ep) {
        const double epsilon = hp.epsilon_at(ep);
        EpisodeMetrics m;
        m.episode = ep;
        AugmentedState s = initial_state(world);
        while (m.steps < hp.max_steps_per_episode && s.cell != world.goal) {
            const int a = choose(s, epsilon);
            const StepOutcome out = simulate_step(world, s, kMoves[a]);
            ++m.steps;
            m.invalid_count += out.invalid;
            const double target = out.reward + (out.terminal ? 0.0 : hp.gamma_discount * result.table.max_value(out.next));
            double &q = result.table.row_mut(s)[static_cast<std::size_t>(a)];
            q += hp.alpha * (target - q);
            s = out.next;
            if (out.terminal) m.success = true;
        }
        const Rollout greedy = greedy_rollout(result.table, world, hp.max_steps_per_episode);
        if (greedy.success) m.greedy_length = static_cast<std::int64_t>(greedy.length());
        result.episodes.push_back(m);
    }
    return result;
}

Rollout greedy_rollout(const QTable &q, const GridWorld &world, std::int64_t max_steps) {
    Rollout r;
    AugmentedState s = initial_state(world);
    r.states.push_back(s);
    std::unordered_set<AugmentedState, AugmentedStateHash> visited{s};
    if (s.cell == world.goal) {
        r.success = true;
        return r;
    }
    while (static_cast<std::int64_t>(r.actions.size()) < max_steps) {
        std::size_t best = 0;
        if (const QTable::Row *row = q.row(s)) {
            for (std::size_t i = 1; i < 4; ++i)
                if ((*row)[i] > (*row)[best]) best = i;
        }
        const StepOutcome out = simulate_step(world, s, kMoves[best]);
        r.actions.push_back(kMoves[best]);
        r.invalid.push_back(out.invalid);
        s = out.next;
        r.states.push_back(s);
        if (out.terminal) {
            r.success = true;
            break;
        }
        if (!visited.insert(s).second) {
            r.looped = true;
            break;
        }
    }
    return r;
}

}  // namespace proofplan
