#include "proofplan/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace proofplan {

namespace {

Json optional_int(const std::optional<std::int64_t> &v) { return v ? Json(*v) : Json(nullptr); }

std::string fmt_ms(double ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

std::string cell_text(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

}  // namespace

Json cell_json(Cell c) { return Json::array({c.x, c.y}); }

Cell cell_from_json(const Json &j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

Json state_json(const AugmentedState &s) {
    return Json{{"cell", cell_json(s.cell)}, {"inventory", s.inventory.to_string()}};
}

AugmentedState state_from_json(const Json &j) {
    return {cell_from_json(j.at("cell")), KeySet::from_string(j.at("inventory").get<std::string>())};
}

Json rule_json(const Rule &r) {
    Json ante = Json::array();
    for (const auto &a : r.antecedents) ante.push_back(a.to_string());
    return Json{{"id", r.id},
                {"antecedents", ante},
                {"consequent", r.consequent.to_string()},
                {"action", r.action ? Json(std::string(action_name(*r.action))) : Json(nullptr)}};
}

Rule rule_from_json(const Json &j, RuleId fallback_id) {
    if (!j.is_object()) throw std::invalid_argument("rule entry must be an object");
    std::vector<Proposition> ante;
    for (const auto &a : j.at("antecedents")) ante.push_back(parse_proposition(a.get<std::string>()));
    std::optional<Action> action;
    if (j.contains("action") && !j.at("action").is_null()) {
        action = parse_action(j.at("action").get<std::string>());
        if (!action) throw std::invalid_argument("unknown action '" + j.at("action").get<std::string>() + "'");
    }
    const RuleId id = j.contains("id") ? j.at("id").get<RuleId>() : fallback_id;
    return make_rule(id, std::move(ante), parse_proposition(j.at("consequent").get<std::string>()), action);
}

std::vector<Rule> comm_rules_from_json(const Json &j) {
    if (!j.is_array()) throw std::invalid_argument("comm rules must be a JSON list");
    std::vector<Rule> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(rule_from_json(j[i], static_cast<RuleId>(i)));
    return out;
}

Json plan_json(const Plan &plan, Cell start, Cell goal, const ValidationResult &validation) {
    Json steps = Json::array();
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep &s = plan.steps[i];
        Json ante = Json::array();
        for (const auto &a : s.antecedents) ante.push_back(a.to_string());
        steps.push_back(Json{{"index", i},
                             {"action", std::string(action_name(s.action))},
                             {"from", state_json(s.from)},
                             {"to", state_json(s.to)},
                             {"rule", s.rule},
                             {"antecedents", ante},
                             {"pickup_rule", s.pickup_rule ? Json(*s.pickup_rule) : Json(nullptr)}});
    }
    Json cells = Json::array();
    for (const Cell c : plan.cells(start)) cells.push_back(cell_json(c));
    return Json{{"solvable", true},
                {"start", cell_json(start)},
                {"goal", cell_json(goal)},
                {"length", plan.total_length()},
                {"steps", steps},
                {"cells", cells},
                {"validation", Json{{"valid", validation.valid}, {"invalid_steps", validation.invalid_steps}}}};
}

Json unsolvable_plan_json(Cell start, Cell goal) {
    return Json{{"solvable", false},
                {"start", cell_json(start)},
                {"goal", cell_json(goal)},
                {"length", nullptr},
                {"steps", Json::array()},
                {"cells", Json::array()},
                {"validation", nullptr}};
}

Plan plan_from_json(const Json &j) {
    Plan plan;
    for (const auto &s : j.at("steps")) {
        PlanStep step;
        const auto action = parse_action(s.at("action").get<std::string>());
        if (!action) throw std::invalid_argument("unknown action in plan");
        step.action = *action;
        step.from = state_from_json(s.at("from"));
        step.to = state_from_json(s.at("to"));
        step.rule = s.at("rule").get<RuleId>();
        for (const auto &a : s.at("antecedents")) step.antecedents.push_back(parse_proposition(a.get<std::string>()));
        if (!s.at("pickup_rule").is_null()) step.pickup_rule = s.at("pickup_rule").get<RuleId>();
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Proof documents

namespace {

Json tree_json(const ProofTree &t) {
    Json children = Json::array();
    for (const auto &c : t.children) children.push_back(tree_json(c));
    return Json{{"proposition", t.proposition.to_string()},
                {"rule", t.rule ? Json(*t.rule) : Json("axiom")},
                {"children", children}};
}

void flatten(const ProofTree &t, Json &out, std::unordered_set<Proposition, PropositionHash> &seen) {
    if (seen.contains(t.proposition)) return;
    for (const auto &c : t.children) flatten(c, out, seen);
    seen.insert(t.proposition);
    Json ante = Json::array();
    for (const auto &c : t.children) ante.push_back(c.proposition.to_string());
    out.push_back(Json{{"step", out.size()},
                       {"proposition", t.proposition.to_string()},
                       {"rule", t.rule ? Json(*t.rule) : Json("axiom")},
                       {"antecedents", ante}});
}

}  // namespace

Json proof_json(const ProofTree &tree, const ClosureStats &stats) {
    Json flat = Json::array();
    std::unordered_set<Proposition, PropositionHash> seen;
    flatten(tree, flat, seen);
    Json leaves = Json::array();
    for (const auto &l : proof_leaves(tree)) leaves.push_back(l.to_string());
    return Json{{"goal", tree.proposition.to_string()},
                {"depth", tree.depth()},
                {"leaves", leaves},
                {"closure", Json{{"rule_applications", stats.rule_applications},
                                 {"membership_tests", stats.membership_tests},
                                 {"iterations", stats.iterations}}},
                {"tree", tree_json(tree)},
                {"derivation", flat}};
}

ProofTree proof_from_json(const Json &doc) {
    std::unordered_map<Proposition, ProofTree, PropositionHash> built;
    const Json &flat = doc.at("derivation");
    if (flat.empty()) throw std::invalid_argument("proof document has an empty derivation");
    for (const auto &entry : flat) {
        const Proposition p = parse_proposition(entry.at("proposition").get<std::string>());
        ProofTree node{p, std::nullopt, {}};
        if (!entry.at("rule").is_string()) node.rule = entry.at("rule").get<RuleId>();
        else if (entry.at("rule").get<std::string>() != "axiom") throw std::invalid_argument("bad rule tag in proof");
        for (const auto &a : entry.at("antecedents")) {
            auto it = built.find(parse_proposition(a.get<std::string>()));
            if (it == built.end()) throw std::invalid_argument("proof step cites an antecedent not yet derived");
            node.children.push_back(it->second);
        }
        built.insert_or_assign(p, std::move(node));
    }
    const Proposition goal = parse_proposition(doc.at("goal").get<std::string>());
    return built.at(goal);
}

// ---------------------------------------------------------------------------
// Q-learning artifacts

Json qtable_json(const QTable &q) {
    Json rows = Json::array();
    for (const auto &[state, values] : q.sorted_rows()) {
        rows.push_back(Json{{"cell", cell_json(state.cell)},
                            {"inventory", state.inventory.to_string()},
                            {"values", Json{{"N", values[0]}, {"E", values[1]}, {"S", values[2]}, {"W", values[3]}}}});
    }
    return Json{{"actions", Json::array({"N", "E", "S", "W"})}, {"support", q.support()}, {"entries", rows}};
}

std::string episodes_csv(const std::vector<EpisodeMetrics> &episodes) {
    std::string out = "episode,steps,invalid_count,success\n";
    for (const auto &e : episodes) {
        out += std::to_string(e.episode) + "," + std::to_string(e.steps) + "," + std::to_string(e.invalid_count) + "," +
               (e.success ? "true" : "false") + "\n";
    }
    return out;
}

Json rollout_json(const Rollout &r) {
    Json cells = Json::array();
    for (const auto &s : r.states) cells.push_back(cell_json(s.cell));
    Json actions = Json::array();
    for (const auto a : r.actions) actions.push_back(std::string(action_name(a)));
    Json invalid = Json::array();
    for (std::size_t i = 0; i < r.invalid.size(); ++i)
        if (r.invalid[i]) invalid.push_back(i);
    return Json{{"success", r.success},
                {"looped", r.looped},
                {"length", r.success ? Json(r.length()) : Json(nullptr)},
                {"actions", actions},
                {"cells", cells},
                {"invalid_steps", invalid}};
}

Hyperparams hyperparams_from_json(const Json &j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    static const std::set<std::string> known{"alpha",        "gamma_discount", "epsilon_start",         "epsilon_end",
                                             "epsilon_decay_episodes", "episodes", "max_steps_per_episode", "seed"};
    for (const auto &[key, value] : j.items())
        if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");

    Hyperparams hp;
    auto number = [&](const char *key, double &dst) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
        dst = j.at(key).get<double>();
    };
    auto count = [&](const char *key) -> std::optional<std::int64_t> {
        if (!j.contains(key)) return std::nullopt;
        const auto &v = j.at(key);
        if (!v.is_number_integer()) throw std::invalid_argument(std::string(key) + " must be an integer");
        return v.get<std::int64_t>();
    };
    number("alpha", hp.alpha);
    number("gamma_discount", hp.gamma_discount);
    number("epsilon_start", hp.epsilon_start);
    number("epsilon_end", hp.epsilon_end);
    if (auto v = count("epsilon_decay_episodes")) hp.epsilon_decay_episodes = *v;
    if (auto v = count("episodes")) hp.episodes = *v;
    if (auto v = count("max_steps_per_episode")) hp.max_steps_per_episode = *v;
    if (auto v = count("seed")) {
        if (*v < 0) throw std::invalid_argument("seed must be non-negative");
        hp.seed = static_cast<std::uint64_t>(*v);
    }
    hp.validate();
    return hp;
}

Json hyperparams_json(const Hyperparams &hp) {
    return Json{{"alpha", hp.alpha},
                {"gamma_discount", hp.gamma_discount},
                {"epsilon_start", hp.epsilon_start},
                {"epsilon_end", hp.epsilon_end},
                {"epsilon_decay_episodes", hp.decay_episodes()},
                {"episodes", hp.episodes},
                {"max_steps_per_episode", hp.max_steps_per_episode},
                {"seed", hp.seed}};
}

// ---------------------------------------------------------------------------
// Trace

std::string render_trace(const GridWorld &world, const Plan &plan, Cell start, const std::vector<Rule> &rules) {
    std::unordered_map<RuleId, const Rule *> by_id;
    for (const auto &r : rules) by_id.emplace(r.id, &r);

    std::vector<std::string> rows;
    std::istringstream grid(render_grid(world));
    for (std::string line; std::getline(grid, line);) rows.push_back(line);
    for (const auto &s : plan.steps) {
        const Cell c = s.to.cell;
        if (c == world.goal || c == start) continue;
        char &ch = rows[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)];
        if (world.keys.contains(c)) ch = 'k';
        else if (world.doors.contains(c)) ch = 'd';
        else ch = '*';
    }

    std::string out;
    for (const auto &r : rows) out += r + "\n";
    out += "\n";
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep &s = plan.steps[i];
        out += std::to_string(i + 1) + ". " + std::string(action_name(s.action)) + " " + cell_text(s.from.cell) + " -> " +
               cell_text(s.to.cell) + "  by rule " + std::to_string(s.rule);
        if (auto it = by_id.find(s.rule); it != by_id.end()) out += ": " + it->second->to_string();
        if (s.pickup_rule) {
            out += "; pickup by rule " + std::to_string(*s.pickup_rule);
            if (auto it = by_id.find(*s.pickup_rule); it != by_id.end()) out += ": " + it->second->to_string();
        }
        out += "\n";
    }
    return out;
}

ParsedTrace parse_trace(std::string_view text) {
    ParsedTrace parsed;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line) && !line.empty()) parsed.overlay.push_back(line);

    auto read_cell = [](const std::string &s, std::size_t &pos) {
        const auto open = s.find('(', pos);
        const auto close = s.find(')', open);
        if (open == std::string::npos || close == std::string::npos) throw std::invalid_argument("malformed trace line: " + s);
        int x = 0, y = 0;
        if (std::sscanf(s.c_str() + open, "(%d,%d)", &x, &y) != 2) throw std::invalid_argument("malformed trace cell: " + s);
        pos = close + 1;
        return Cell{x, y};
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        const Cell from = read_cell(line, pos);
        const Cell to = read_cell(line, pos);
        if (parsed.cells.empty()) parsed.cells.push_back(from);
        parsed.cells.push_back(to);
    }
    return parsed;
}

// ---------------------------------------------------------------------------
// Reports

std::int64_t episodes_to_stable(const std::vector<EpisodeMetrics> &episodes, std::optional<std::int64_t> optimal) {
    const auto total = static_cast<std::int64_t>(episodes.size());
    if (!optimal) return total;
    std::int64_t stable_from = total;
    for (std::int64_t i = total - 1; i >= 0; --i) {
        if (episodes[static_cast<std::size_t>(i)].greedy_length != optimal) break;
        stable_from = i;
    }
    return stable_from == total ? total : stable_from + 1;
}

Json report_json(const ExperimentReport &r) {
    Json methods = Json::array();
    for (const auto &m : r.methods) {
        methods.push_back(Json{{"method", m.method},
                               {"success", m.success},
                               {"invalid_actions", m.invalid_actions},
                               {"episodes_required", m.episodes_required},
                               {"plan_length", optional_int(m.plan_length)},
                               {"optimal_length", optional_int(m.optimal_length)},
                               {"wall_time_ms", m.wall_time_ms}});
    }
    Json artifacts = Json::object();
    for (const auto &[k, v] : r.artifacts) artifacts[k] = v;
    return Json{{"environment", Json{{"grid_digest", r.grid_digest},
                                     {"width", r.width},
                                     {"height", r.height},
                                     {"keys", r.key_count},
                                     {"doors", r.door_count}}},
                {"config", hyperparams_json(r.config)},
                {"optimal_length", optional_int(r.optimal_length)},
                {"methods", methods},
                {"artifacts", artifacts}};
}

std::string report_csv(const ExperimentReport &r) {
    std::string out = "method,success,invalid_actions,episodes_required,plan_length,optimal_length,wall_time_ms\n";
    auto opt = [](const std::optional<std::int64_t> &v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto &m : r.methods) {
        out += m.method + "," + (m.success ? "true" : "false") + "," + std::to_string(m.invalid_actions) + "," +
               std::to_string(m.episodes_required) + "," + opt(m.plan_length) + "," + opt(m.optimal_length) + "," +
               fmt_ms(m.wall_time_ms) + "\n";
    }
    return out;
}

std::string report_table(const ExperimentReport &r) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-14s %-8s %15s %17s %11s %14s %12s\n", "method", "success", "invalid_actions",
                  "episodes_required", "plan_length", "optimal_length", "wall_time_ms");
    out += line;
    auto opt = [](const std::optional<std::int64_t> &v) { return v ? std::to_string(*v) : std::string("-"); };
    for (const auto &m : r.methods) {
        std::snprintf(line, sizeof line, "%-14s %-8s %15lld %17lld %11s %14s %12s\n", m.method.c_str(),
                      m.success ? "yes" : "no", static_cast<long long>(m.invalid_actions),
                      static_cast<long long>(m.episodes_required), opt(m.plan_length).c_str(),
                      opt(m.optimal_length).c_str(), fmt_ms(m.wall_time_ms).c_str());
        out += line;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extensions

Json multi_agent_json(const MultiAgentResult &r, const MultiAgentCheck &check) {
    Json agents = Json::array();
    for (const auto &[id, t] : r.agents) {
        Json actions = Json::array();
        for (const auto &a : t.actions) {
            switch (a.kind) {
                case AgentAction::Kind::Wait: actions.push_back("wait"); break;
                case AgentAction::Kind::Move: actions.push_back(std::string(action_name(a.move))); break;
                case AgentAction::Kind::Send:
                    actions.push_back("send " + a.fact.to_string() + " to " + std::to_string(a.to));
                    break;
            }
        }
        const auto &phys = check.physical.at(id);
        Json gamma = Json::array();
        for (const auto &f : t.final_gamma) gamma.push_back(f.to_string());
        agents.push_back(Json{{"agent", id},
                              {"start", cell_json(t.start)},
                              {"actions", actions},
                              {"step_rounds", t.step_rounds},
                              {"plan", plan_json(t.plan, t.start, t.plan.empty() ? t.start : t.plan.steps.back().to.cell, phys)},
                              {"unjustified_steps", check.unjustified.at(id)},
                              {"final_knowledge", gamma}});
    }
    Json deliveries = Json::array();
    for (const auto &d : r.deliveries) {
        deliveries.push_back(Json{{"sent_round", d.sent_round},
                                  {"delivered_round", d.delivered_round},
                                  {"from", d.from},
                                  {"to", d.to},
                                  {"fact", d.fact.to_string()},
                                  {"delivered_as", Proposition::received(d.to, d.fact).to_string()}});
    }
    return Json{{"rounds", r.rounds},
                {"agents", agents},
                {"deliveries", deliveries},
                {"validation", Json{{"ok", check.ok()},
                                    {"goal_reached", check.goal_reached},
                                    {"unsupported_sends", check.unsupported_sends}}}};
}

Json learning_json(const LearningResult &r, std::size_t budget, std::uint64_t seed, bool sound) {
    Json learned = Json::array();
    for (const auto &rule : r.learned) learned.push_back(rule_json(rule));
    return Json{{"budget", budget}, {"seed", seed}, {"probes_used", r.log.size()}, {"sound", sound}, {"learned", learned}};
}

std::string probes_csv(const LearningResult &r) {
    std::string out = "probe,from_x,from_y,to_x,to_y,action,success,rule\n";
    for (const auto &p : r.log) {
        out += std::to_string(p.index) + "," + std::to_string(p.from.x) + "," + std::to_string(p.from.y) + "," +
               std::to_string(p.to.x) + "," + std::to_string(p.to.y) + "," + std::string(action_name(p.action)) + "," +
               (p.success ? "true" : "false") + "," + (p.rule ? std::to_string(*p.rule) : std::string()) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path &p, std::string_view content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

void write_json(const std::filesystem::path &p, const Json &j) { write_file(p, j.dump(2) + "\n"); }

}  // namespace proofplan
