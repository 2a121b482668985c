#include "proofplan/planner.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace proofplan {

std::size_t Plan::total_length() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const PlanStep &s) { return is_move(s.action); }));
}

std::vector<Cell> Plan::cells(Cell start) const {
    std::vector<Cell> out{start};
    for (const auto &s : steps) out.push_back(s.to.cell);
    return out;
}

// ---------------------------------------------------------------------------
// TransitionSystem

namespace {

std::optional<Action> direction_between(Cell from, Cell to) {
    for (const Action a : kMoves)
        if (step_cell(from, a) == to) return a;
    return std::nullopt;
}

int move_rank(Action a) {
    for (int i = 0; i < 4; ++i)
        if (kMoves[i] == a) return i;
    return 4;
}

bool extras_hold(const std::vector<Proposition> &extra, const TransitionSystem::ExtraFacts &facts) {
    if (extra.empty()) return true;
    if (!facts) return false;
    return std::all_of(extra.begin(), extra.end(), facts);
}

}  // namespace

TransitionSystem::TransitionSystem(std::span<const Rule> rules) {
    for (const Rule &r : rules) {
        std::optional<Cell> source;
        int at_count = 0;
        KeySet needs;
        std::vector<Proposition> extra;
        for (const auto &a : r.antecedents) {
            if (a.is_at()) {
                ++at_count;
                source = a.cell();
            } else if (a.is_has_key()) {
                needs.insert(a.key());
            } else {
                extra.push_back(a);
            }
        }
        if (at_count != 1) continue;
        if (r.consequent.is_at()) {
            const Cell target = r.consequent.cell();
            std::optional<Action> action = r.action && is_move(*r.action) ? r.action : direction_between(*source, target);
            if (!action) continue;
            moves_[*source].push_back(Move{&r, *action, *source, target, needs, std::move(extra)});
        } else if (r.consequent.is_has_key()) {
            pickups_[*source].push_back(Pickup{&r, r.consequent.key(), needs, std::move(extra)});
        }
    }
    for (auto &[cell, moves] : moves_) {
        std::stable_sort(moves.begin(), moves.end(), [](const Move &a, const Move &b) {
            const int ra = move_rank(a.action), rb = move_rank(b.action);
            return ra != rb ? ra < rb : a.rule->id < b.rule->id;
        });
    }
    for (auto &[cell, picks] : pickups_) {
        std::stable_sort(picks.begin(), picks.end(),
                         [](const Pickup &a, const Pickup &b) { return a.rule->id < b.rule->id; });
    }
}

std::span<const TransitionSystem::Move> TransitionSystem::moves_from(Cell cell) const {
    auto it = moves_.find(cell);
    if (it == moves_.end()) return {};
    return it->second;
}

AugmentedState TransitionSystem::settle(AugmentedState s, std::optional<RuleId> *pickup_rule,
                                        const ExtraFacts &extra) const {
    auto it = pickups_.find(s.cell);
    if (it == pickups_.end()) return s;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto &p : it->second) {
            if (s.inventory.contains(p.key) || !p.needs.subset_of(s.inventory) || !extras_hold(p.extra, extra)) continue;
            s.inventory.insert(p.key);
            if (pickup_rule && !pickup_rule->has_value()) *pickup_rule = p.rule->id;
            changed = true;
        }
    }
    return s;
}

std::vector<TransitionSystem::Successor> TransitionSystem::successors(const AugmentedState &s,
                                                                      const ExtraFacts &extra) const {
    std::vector<Successor> out;
    for (const auto &m : moves_from(s.cell)) {
        if (!m.needs.subset_of(s.inventory) || !extras_hold(m.extra, extra)) continue;
        Successor succ{&m, {m.to, s.inventory}, std::nullopt};
        succ.next = settle(succ.next, &succ.pickup_rule, extra);
        out.push_back(std::move(succ));
    }
    return out;
}

PlanStep TransitionSystem::make_step(const Successor &succ, const AugmentedState &from) const {
    return PlanStep{succ.move->action, from, succ.next, succ.move->rule->id, succ.move->rule->antecedents,
                    succ.pickup_rule};
}

bool state_satisfies(const AugmentedState &s, const Proposition &goal) {
    if (goal.is_at()) return s.cell == goal.cell();
    if (goal.is_has_key()) return s.inventory.contains(goal.key());
    return false;
}

AugmentedState state_from_facts(const KnowledgeBase &facts) {
    std::optional<Cell> cell;
    KeySet inv;
    for (const auto &f : facts) {
        if (f.is_at()) {
            if (cell) throw std::invalid_argument("knowledge base holds more than one At fact");
            cell = f.cell();
        } else if (f.is_has_key()) {
            inv.insert(f.key());
        }
    }
    if (!cell) throw std::invalid_argument("knowledge base holds no At fact");
    return {*cell, inv};
}

std::optional<std::vector<PlanStep>> search_steps(const TransitionSystem &ts, const AugmentedState &start,
                                                  const std::function<bool(const AugmentedState &)> &done,
                                                  const TransitionSystem::ExtraFacts &extra) {
    struct Node {
        AugmentedState state;
        std::optional<std::size_t> parent;
        std::optional<PlanStep> step;
    };
    if (done(start)) return std::vector<PlanStep>{};

    std::vector<Node> nodes{{start, std::nullopt, std::nullopt}};
    std::unordered_map<AugmentedState, std::size_t, AugmentedStateHash> seen{{start, 0}};
    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
        const std::size_t idx = frontier.front();
        frontier.pop_front();
        const AugmentedState current = nodes[idx].state;
        for (const auto &succ : ts.successors(current, extra)) {
            if (seen.contains(succ.next)) continue;
            seen.emplace(succ.next, nodes.size());
            nodes.push_back({succ.next, idx, ts.make_step(succ, current)});
            if (done(succ.next)) {
                std::vector<PlanStep> steps;
                for (std::optional<std::size_t> at = nodes.size() - 1; nodes[*at].parent; at = nodes[*at].parent)
                    steps.push_back(*nodes[*at].step);
                std::reverse(steps.begin(), steps.end());
                return steps;
            }
            frontier.push_back(nodes.size() - 1);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// plan / oracle / validation

PlanResult plan(const CompiledEnv &env, const GridWorld & /*world*/) {
    PlanResult result;
    const TransitionSystem ts(env.rules);
    result.start = ts.settle(state_from_facts(env.initial));

    const ClosureResult closure = close(env.initial, env.rules);
    result.closure_computations = 1;
    result.stats = closure.stats;
    if (!proves(closure.closure, env.goal_prop)) return result;

    auto steps = search_steps(ts, result.start, [&](const AugmentedState &s) { return state_satisfies(s, env.goal_prop); });
    if (!steps) throw std::logic_error("goal is provable but no executable path exists: " + env.goal_prop.to_string());
    result.plan = Plan{std::move(*steps)};
    result.proof = extract_proof(closure.graph, env.goal_prop);
    return result;
}

std::optional<OracleResult> oracle_shortest(const GridWorld &world) {
    const AugmentedState start = initial_state(world);
    std::unordered_map<AugmentedState, AugmentedState, AugmentedStateHash> parent{{start, start}};
    std::deque<AugmentedState> frontier{start};
    std::optional<AugmentedState> reached;
    if (start.cell == world.goal) reached = start;
    while (!reached && !frontier.empty()) {
        const AugmentedState s = frontier.front();
        frontier.pop_front();
        for (const Action a : kMoves) {
            const StepOutcome out = simulate_step(world, s, a);
            if (out.invalid || parent.contains(out.next)) continue;
            parent.emplace(out.next, s);
            if (out.terminal) {
                reached = out.next;
                break;
            }
            frontier.push_back(out.next);
        }
    }
    if (!reached) return std::nullopt;
    OracleResult result;
    for (AugmentedState s = *reached;; s = parent.at(s)) {
        result.path.push_back(s);
        if (s == start) break;
    }
    std::reverse(result.path.begin(), result.path.end());
    result.length = static_cast<int>(result.path.size()) - 1;
    return result;
}

ValidationResult validate_plan(const Plan &plan, const GridWorld &world) {
    return validate_plan(plan, world, initial_state(world));
}

ValidationResult validate_plan(const Plan &plan, const GridWorld &world, const AugmentedState &start) {
    ValidationResult result;
    AugmentedState state = start;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const StepOutcome out = simulate_step(world, state, plan.steps[i].action);
        if (out.invalid) {
            result.invalid_steps.push_back(i);
            continue;
        }
        state = out.next;
    }
    result.valid = result.invalid_steps.empty();
    return result;
}

std::vector<std::size_t> replay_justifications(const Plan &plan, const std::vector<Rule> &rules, KnowledgeBase gamma,
                                               const ReplayHook &before_step) {
    std::unordered_map<RuleId, const Rule *> by_id;
    for (const auto &r : rules) by_id.emplace(r.id, &r);
    auto holds = [&](const std::vector<Proposition> &ante) {
        return std::all_of(ante.begin(), ante.end(), [&](const Proposition &p) { return gamma.contains(p); });
    };

    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        if (before_step) before_step(i, gamma);
        const PlanStep &step = plan.steps[i];
        auto it = by_id.find(step.rule);
        const bool licensed = it != by_id.end() && it->second->antecedents == step.antecedents &&
                              it->second->consequent == Proposition::at(step.to.cell) && holds(step.antecedents);
        if (!licensed) {
            bad.push_back(i);
            continue;
        }
        gamma.insert(it->second->consequent);
        if (step.pickup_rule) {
            auto p = by_id.find(*step.pickup_rule);
            if (p == by_id.end() || !holds(p->second->antecedents)) {
                bad.push_back(i);
                continue;
            }
            gamma.insert(p->second->consequent);
        }
    }
    return bad;
}

// ---------------------------------------------------------------------------
// MemoCache

std::optional<std::vector<PlanStep>> MemoCache::lookup(const Proposition &subgoal, const AugmentedState &from) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(Key{subgoal, from});
    if (it == entries_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void MemoCache::store(const Proposition &subgoal, const AugmentedState &from, std::vector<PlanStep> fragment) {
    std::unique_lock lock(mutex_);
    entries_.insert_or_assign(Key{subgoal, from}, std::move(fragment));
}

std::size_t MemoCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void MemoCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
    hits_ = 0;
    misses_ = 0;
}

// ---------------------------------------------------------------------------
// Goal chaining

ChainResult plan_chain(const CompiledEnv &env, std::span<const Proposition> subgoals, MemoCache *cache) {
    if (subgoals.empty()) throw std::invalid_argument("plan_chain needs at least one subgoal");
    const TransitionSystem ts(env.rules);
    std::unordered_map<RuleId, const Rule *> by_id;
    for (const auto &r : env.rules) by_id.emplace(r.id, &r);

    ChainResult result;
    result.gamma = env.initial;
    AugmentedState current = ts.settle(state_from_facts(env.initial));
    for (std::size_t i = 0; i < subgoals.size(); ++i) {
        const Proposition &goal = subgoals[i];
        ChainFragment info{goal, result.plan.steps.size(), 0, false};
        if (state_satisfies(current, goal)) {
            result.fragments.push_back(info);
            continue;
        }

        std::optional<std::vector<PlanStep>> fragment;
        if (cache) fragment = cache->lookup(goal, current);
        info.from_cache = fragment.has_value();
        if (!fragment) {
            const ClosureResult closure = close(result.gamma, env.rules);
            ++result.closure_computations;
            if (!proves(closure.closure, goal)) throw SubgoalUnreachable(i, goal);
            fragment = search_steps(ts, current, [&](const AugmentedState &s) { return state_satisfies(s, goal); });
            if (!fragment) throw SubgoalUnreachable(i, goal);
            if (cache) cache->store(goal, current, *fragment);
        }

        for (auto &step : *fragment) {
            result.gamma.insert(Proposition::at(step.to.cell));
            if (step.pickup_rule) result.gamma.insert(by_id.at(*step.pickup_rule)->consequent);
            current = step.to;
            result.plan.steps.push_back(std::move(step));
        }
        info.step_count = result.plan.steps.size() - info.first_step;
        result.fragments.push_back(info);
    }
    return result;
}

}  // namespace proofplan
