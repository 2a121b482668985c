#include "proofplan/extensions.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace proofplan {

// ---------------------------------------------------------------------------
// Multi-agent

CommRuleInfo classify_comm_rule(const Rule &rule) {
    std::optional<AgentId> recipient;
    std::optional<Cell> from;
    for (const auto &a : rule.antecedents) {
        if (a.is_received()) {
            if (recipient && *recipient != a.recipient())
                throw std::invalid_argument("comm rule mixes recipients: " + rule.to_string());
            recipient = a.recipient();
        } else if (a.is_at()) {
            if (from) throw std::invalid_argument("comm rule has two At antecedents: " + rule.to_string());
            from = a.cell();
        }
    }
    if (!recipient) throw std::invalid_argument("comm rule has no Received antecedent: " + rule.to_string());
    if (!from || !rule.consequent.is_at())
        throw std::invalid_argument("comm rule must gate an At -> At transition: " + rule.to_string());
    const Cell to = rule.consequent.cell();
    if (std::abs(to.x - from->x) + std::abs(to.y - from->y) != 1)
        throw std::invalid_argument("comm rule transition is not between neighbours: " + rule.to_string());
    return {*recipient, *from, to};
}

std::vector<Rule> agent_rules(const GridWorld &world, std::span<const Rule> comm_rules, AgentId agent) {
    std::set<std::pair<Cell, Cell>> gated;
    std::vector<CommRuleInfo> infos;
    for (const auto &r : comm_rules) {
        infos.push_back(classify_comm_rule(r));
        gated.emplace(infos.back().from, infos.back().to);
    }
    const CompiledEnv env = compile_rules(world);
    std::vector<Rule> out;
    for (const auto &r : env.rules) {
        if (r.consequent.is_at() && r.action && is_move(*r.action)) {
            const auto src = std::find_if(r.antecedents.begin(), r.antecedents.end(), [](const Proposition &p) { return p.is_at(); });
            if (gated.contains({src->cell(), r.consequent.cell()})) continue;
        }
        out.push_back(r);
    }
    for (std::size_t i = 0; i < comm_rules.size(); ++i) {
        if (infos[i].recipient != agent) continue;
        Rule r = comm_rules[i];
        r.id = static_cast<RuleId>(env.rules.size() + i);
        if (!r.action) r.action = [&] {
            for (const Action a : kMoves)
                if (step_cell(infos[i].from, a) == infos[i].to) return a;
            return Action::North;
        }();
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

struct JointState {
    std::vector<AugmentedState> agents;
    std::uint64_t received = 0;
    std::uint64_t pending = 0;

    std::string key() const {
        std::string k;
        k.reserve(agents.size() * 12 + 16);
        auto put = [&](std::uint64_t v, int bytes) {
            for (int i = 0; i < bytes; ++i) k.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        };
        for (const auto &a : agents) {
            put(static_cast<std::uint32_t>(a.cell.x), 4);
            put(static_cast<std::uint32_t>(a.cell.y), 4);
            put(a.inventory.mask(), 4);
        }
        put(received, 8);
        put(pending, 8);
        return k;
    }
};

struct Option {
    AgentAction action;
    std::optional<TransitionSystem::Successor> succ;
    int message = -1;
};

struct JointNode {
    JointState state;
    std::optional<std::size_t> parent;
    std::vector<Option> choice;
    std::size_t cost = 0;
    JointState before;  // parent state after delivery, the origin of `choice`
};

const Rule *find_rule(const std::vector<Rule> &rules, RuleId id) {
    for (const auto &r : rules)
        if (r.id == id) return &r;
    return nullptr;
}

}  // namespace

bool MultiAgentCheck::ok() const {
    if (!goal_reached || !unsupported_sends.empty()) return false;
    for (const auto &[a, v] : physical)
        if (!v.valid) return false;
    for (const auto &[a, u] : unjustified)
        if (!u.empty()) return false;
    return true;
}

MultiAgentResult multi_agent_plan(const GridWorld &world, std::span<const Rule> comm_rules, std::size_t round_budget) {
    if (world.agents.size() < 2) throw std::invalid_argument("multi-agent planning needs at least two agents");

    std::vector<AgentId> ids;
    std::vector<std::vector<Rule>> rules;
    for (const auto &[id, cell] : world.agents) {
        ids.push_back(id);
        rules.push_back(agent_rules(world, comm_rules, id));
    }
    std::vector<TransitionSystem> systems;
    systems.reserve(rules.size());
    for (const auto &r : rules) systems.emplace_back(r);

    std::vector<Proposition> messages;
    std::unordered_map<Proposition, int, PropositionHash> message_index;
    for (const auto &r : comm_rules)
        for (const auto &a : r.antecedents)
            if (a.is_received() && !message_index.contains(a)) {
                message_index.emplace(a, static_cast<int>(messages.size()));
                messages.push_back(a);
            }
    if (messages.size() > 64) throw std::invalid_argument("at most 64 distinct Received facts are supported");

    const std::size_t n = ids.size();
    JointState initial;
    for (std::size_t i = 0; i < n; ++i) initial.agents.push_back(systems[i].settle({world.agents.at(ids[i]), {}}));
    auto at_goal = [&](const JointState &s) {
        return std::any_of(s.agents.begin(), s.agents.end(), [&](const AugmentedState &a) { return a.cell == world.goal; });
    };

    std::vector<JointNode> nodes{{initial, std::nullopt, {}, 0, initial}};
    std::optional<std::size_t> goal_node;
    if (at_goal(initial)) goal_node = 0;

    constexpr std::size_t kNodeLimit = 2'000'000;
    std::unordered_set<std::string> seen{initial.key()};
    std::vector<std::size_t> layer{0};
    std::size_t round = 0;
    while (!goal_node) {
        if (layer.empty()) throw NoJointPlan("no interleaving of agent actions reaches the goal");
        if (round_budget && round >= round_budget)
            throw NoJointPlan("no joint plan within " + std::to_string(round_budget) + " rounds");
        ++round;
        std::unordered_map<std::string, std::size_t> next_layer_index;
        std::vector<std::size_t> next_layer;

        for (const std::size_t idx : layer) {
            JointState here = nodes[idx].state;
            here.received |= here.pending;
            here.pending = 0;

            std::vector<std::vector<Option>> options(n);
            for (std::size_t i = 0; i < n; ++i) {
                const AugmentedState &s = here.agents[i];
                const AgentId me = ids[i];
                options[i].push_back(Option{});
                auto extra = [&](const Proposition &p) {
                    if (!p.is_received() || p.recipient() != me) return false;
                    auto it = message_index.find(p);
                    return it != message_index.end() && ((here.received >> it->second) & 1U);
                };
                for (const auto &succ : systems[i].successors(s, extra)) {
                    Option o;
                    o.action.kind = AgentAction::Kind::Move;
                    o.action.move = succ.move->action;
                    o.succ = succ;
                    options[i].push_back(std::move(o));
                }
                for (std::size_t m = 0; m < messages.size(); ++m) {
                    const Proposition &msg = messages[m];
                    if (msg.recipient() == me || ((here.received >> m) & 1U)) continue;
                    const Proposition fact = msg.inner();
                    const bool holds = (fact.is_has_key() && s.inventory.contains(fact.key())) ||
                                       (fact.is_at() && fact.cell() == s.cell);
                    if (!holds || !world.agents.contains(msg.recipient())) continue;
                    Option o;
                    o.action = AgentAction{AgentAction::Kind::Send, Action::Send, msg.recipient(), fact};
                    o.message = static_cast<int>(m);
                    options[i].push_back(std::move(o));
                }
            }

            std::vector<std::size_t> pick(n, 0);
            while (true) {
                JointState next = here;
                std::size_t cost = nodes[idx].cost;
                std::vector<Option> choice(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const Option &o = options[i][pick[i]];
                    choice[i] = o;
                    if (o.action.kind == AgentAction::Kind::Wait) continue;
                    ++cost;
                    if (o.succ) next.agents[i] = o.succ->next;
                    else next.pending |= std::uint64_t{1} << o.message;
                }
                std::string key = next.key();
                if (!seen.contains(key)) {
                    auto it = next_layer_index.find(key);
                    if (it == next_layer_index.end()) {
                        next_layer_index.emplace(std::move(key), nodes.size());
                        next_layer.push_back(nodes.size());
                        nodes.push_back({std::move(next), idx, std::move(choice), cost, here});
                        if (nodes.size() > kNodeLimit) throw NoJointPlan("joint search space limit exceeded");
                    } else if (cost < nodes[it->second].cost) {
                        nodes[it->second] = {std::move(next), idx, std::move(choice), cost, here};
                    }
                }
                std::size_t i = n;
                while (i > 0) {
                    --i;
                    if (++pick[i] < options[i].size()) break;
                    pick[i] = 0;
                    if (i == 0) { i = n + 1; break; }
                }
                if (i == n + 1) break;
            }
        }

        for (const auto &[key, idx] : next_layer_index) seen.insert(key);
        for (const std::size_t idx : next_layer) {
            if (at_goal(nodes[idx].state) && (!goal_node || nodes[idx].cost < nodes[*goal_node].cost)) goal_node = idx;
        }
        layer = std::move(next_layer);
    }

    // Rebuild per-agent timelines from the chosen joint actions.
    std::vector<std::size_t> chain;
    for (std::optional<std::size_t> at = goal_node; nodes[*at].parent; at = nodes[*at].parent) chain.push_back(*at);
    std::reverse(chain.begin(), chain.end());

    MultiAgentResult result;
    result.rounds = chain.size();
    for (std::size_t i = 0; i < n; ++i) {
        AgentTimeline t;
        t.agent = ids[i];
        t.start = world.agents.at(ids[i]);
        t.final_gamma.insert(Proposition::at(t.start));
        result.agents.emplace(ids[i], std::move(t));
    }
    for (std::size_t r = 0; r < chain.size(); ++r) {
        const JointNode &node = nodes[chain[r]];
        for (std::size_t i = 0; i < n; ++i) {
            AgentTimeline &t = result.agents.at(ids[i]);
            const Option &o = node.choice[i];
            t.actions.push_back(o.action);
            if (o.succ) {
                t.plan.steps.push_back(systems[i].make_step(*o.succ, node.before.agents[i]));
                t.step_rounds.push_back(r + 1);
                t.final_gamma.insert(Proposition::at(o.succ->next.cell));
                if (o.succ->pickup_rule) t.final_gamma.insert(find_rule(rules[i], *o.succ->pickup_rule)->consequent);
            } else if (o.action.kind == AgentAction::Kind::Send) {
                result.deliveries.push_back(Delivery{r + 1, r + 2, ids[i], o.action.to, o.action.fact});
            }
        }
    }
    for (const auto &d : result.deliveries)
        if (d.delivered_round <= result.rounds)
            result.agents.at(d.to).final_gamma.insert(Proposition::received(d.to, d.fact));
    for (const auto &[id, t] : result.agents)
        for (const auto &f : t.final_gamma) result.global_gamma.insert(f);
    return result;
}

MultiAgentCheck verify_multi_agent(const GridWorld &world, std::span<const Rule> comm_rules,
                                   const MultiAgentResult &result, std::span<const Delivery> schedule) {
    MultiAgentCheck check;
    std::map<AgentId, std::vector<Rule>> rules;
    for (const auto &[id, t] : result.agents) rules.emplace(id, agent_rules(world, comm_rules, id));

    for (const auto &[id, t] : result.agents) {
        check.physical[id] = validate_plan(t.plan, world, AugmentedState{t.start, {}});
        auto hook = [&](std::size_t step, KnowledgeBase &gamma) {
            for (const auto &d : schedule)
                if (d.to == id && d.delivered_round <= t.step_rounds.at(step))
                    gamma.insert(Proposition::received(d.to, d.fact));
        };
        check.unjustified[id] = replay_justifications(t.plan, rules.at(id), KnowledgeBase{Proposition::at(t.start)}, hook);
        const bool clean = check.physical[id].valid && check.unjustified[id].empty();
        const Cell end = t.plan.empty() ? t.start : t.plan.steps.back().to.cell;
        if (clean && end == world.goal) check.goal_reached = true;
    }

    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const Delivery &d = schedule[i];
        auto sender = result.agents.find(d.from);
        if (sender == result.agents.end() || d.delivered_round <= d.sent_round || !result.agents.contains(d.to)) {
            check.unsupported_sends.push_back(i);
            continue;
        }
        const AgentTimeline &t = sender->second;
        const auto &sender_rules = rules.at(d.from);
        KnowledgeBase gamma{Proposition::at(t.start)};
        for (std::size_t s = 0; s < t.plan.steps.size() && t.step_rounds[s] < d.sent_round; ++s) {
            gamma.insert(Proposition::at(t.plan.steps[s].to.cell));
            if (t.plan.steps[s].pickup_rule)
                if (const Rule *r = find_rule(sender_rules, *t.plan.steps[s].pickup_rule)) gamma.insert(r->consequent);
        }
        if (!gamma.contains(d.fact)) check.unsupported_sends.push_back(i);
    }
    return check;
}

// ---------------------------------------------------------------------------
// Rule learning

HiddenEnv HiddenEnv::from_world(GridWorld world) {
    HiddenEnv env;
    for (int y = 0; y < world.height; ++y)
        for (int x = 0; x < world.width; ++x)
            for (const Action a : kMoves) {
                const Cell from{x, y};
                const Cell to = step_cell(from, a);
                if (world.in_bounds(to)) env.learnable.emplace_back(from, to);
            }
    env.true_world = std::move(world);
    return env;
}

LearningResult learn_rules(const HiddenEnv &hidden, std::size_t probe_budget, std::uint64_t seed) {
    LearningResult result;
    std::mt19937_64 rng(seed);
    const KnowledgeBase gamma0{Proposition::at(hidden.true_world.start)};
    KnowledgeBase proven = gamma0;
    std::vector<char> tried(hidden.learnable.size(), 0);

    while (result.log.size() < probe_budget) {
        std::vector<std::size_t> frontier;
        for (std::size_t i = 0; i < hidden.learnable.size(); ++i)
            if (!tried[i] && proven.contains(Proposition::at(hidden.learnable[i].first))) frontier.push_back(i);
        if (frontier.empty()) break;
        const std::size_t pick = frontier[std::uniform_int_distribution<std::size_t>(0, frontier.size() - 1)(rng)];
        tried[pick] = 1;

        const auto [from, to] = hidden.learnable[pick];
        ProbeRecord rec;
        rec.index = result.log.size();
        rec.from = from;
        rec.to = to;
        rec.source_proven = true;
        const auto dir = [&]() -> std::optional<Action> {
            for (const Action a : kMoves)
                if (step_cell(from, a) == to) return a;
            return std::nullopt;
        }();
        if (dir) {
            rec.action = *dir;
            const StepOutcome out = simulate_step(hidden.true_world, AugmentedState{from, {}}, *dir);
            rec.success = !out.invalid && out.next.cell == to;
        }
        if (rec.success) {
            const auto id = static_cast<RuleId>(result.learned.size());
            result.learned.push_back(make_rule(id, {Proposition::at(from)}, Proposition::at(to), *dir));
            rec.rule = id;
            proven = close(gamma0, result.learned).closure;
        }
        result.log.push_back(rec);
    }
    return result;
}

bool rules_subset(std::span<const Rule> subset, std::span<const Rule> reference) {
    return std::all_of(subset.begin(), subset.end(), [&](const Rule &r) {
        return std::any_of(reference.begin(), reference.end(), [&](const Rule &ref) { return ref.same_content(r); });
    });
}

// ---------------------------------------------------------------------------
// Conformant planning

void WorldSet::validate() const {
    if (worlds.empty()) throw std::invalid_argument("world set is empty");
    for (std::size_t i = 0; i < worlds.size(); ++i)
        for (std::size_t j = i + 1; j < worlds.size(); ++j)
            if (worlds[i] == worlds[j])
                throw std::invalid_argument("worlds " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

ConformantPlan plan_under_uncertainty(const WorldSet &worlds, std::span<const Rule> rules, const Proposition &goal) {
    worlds.validate();
    const TransitionSystem ts(rules);
    const std::size_t n = worlds.worlds.size();
    std::vector<TransitionSystem::ExtraFacts> extras;
    for (const auto &w : worlds.worlds) extras.emplace_back([&w](const Proposition &p) { return w.contains(p); });

    using Belief = std::vector<AugmentedState>;
    struct Node {
        Belief belief;
        std::optional<std::size_t> parent;
        Action action = Action::North;
        std::vector<PlanStep> steps;
    };
    auto key_of = [](const Belief &b) {
        std::string k;
        for (const auto &s : b) k += to_string(s) + ";";
        return k;
    };
    auto satisfied = [&](const Belief &b) {
        for (std::size_t i = 0; i < b.size(); ++i)
            if (!state_satisfies(b[i], goal) && !worlds.worlds[i].contains(goal)) return false;
        return true;
    };

    Belief start;
    for (std::size_t i = 0; i < n; ++i) start.push_back(ts.settle(state_from_facts(worlds.worlds[i]), nullptr, extras[i]));

    std::vector<Node> nodes{{start, std::nullopt, Action::North, {}}};
    std::unordered_set<std::string> seen{key_of(start)};
    std::deque<std::size_t> frontier{0};
    std::optional<std::size_t> found;
    if (satisfied(start)) found = 0;
    while (!found && !frontier.empty()) {
        const std::size_t idx = frontier.front();
        frontier.pop_front();
        const Belief here = nodes[idx].belief;
        for (const Action a : kMoves) {
            Belief next(n);
            std::vector<PlanStep> steps;
            bool licensed = true;
            for (std::size_t i = 0; i < n && licensed; ++i) {
                const auto succs = ts.successors(here[i], extras[i]);
                auto it = std::find_if(succs.begin(), succs.end(), [&](const auto &s) { return s.move->action == a; });
                if (it == succs.end()) {
                    licensed = false;
                    break;
                }
                next[i] = it->next;
                steps.push_back(ts.make_step(*it, here[i]));
            }
            if (!licensed) continue;
            if (!seen.insert(key_of(next)).second) continue;
            nodes.push_back({next, idx, a, std::move(steps)});
            if (satisfied(next)) {
                found = nodes.size() - 1;
                break;
            }
            frontier.push_back(nodes.size() - 1);
        }
    }
    if (!found) throw NoConformantPlan("no single action sequence reaches " + goal.to_string() + " in every world");

    ConformantPlan plan;
    plan.per_world.resize(n);
    std::vector<std::size_t> chain;
    for (std::optional<std::size_t> at = found; nodes[*at].parent; at = nodes[*at].parent) chain.push_back(*at);
    std::reverse(chain.begin(), chain.end());
    for (const std::size_t idx : chain) {
        plan.actions.push_back(nodes[idx].action);
        for (std::size_t i = 0; i < n; ++i) plan.per_world[i].steps.push_back(nodes[idx].steps[i]);
    }
    return plan;
}

}  // namespace proofplan
