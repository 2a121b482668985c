#include "proofplan/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "proofplan/artifacts.hpp"
#include "proofplan/extensions.hpp"
#include "proofplan/planner.hpp"

namespace fs = std::filesystem;

namespace proofplan {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::optional<GridWorld> load_grid(const fs::path &path, Console io) {
    try {
        GridWorld world = parse_grid(read_file(path));
        for (const auto &w : world.warnings) io.err << path.string() << ": warning: " << w << "\n";
        return world;
    } catch (const GridParseError &e) {
        io.err << path.string() << ":" << e.what() << "\n";
    } catch (const std::exception &e) {
        io.err << path.string() << ": " << e.what() << "\n";
    }
    return std::nullopt;
}

struct PlanOutcome {
    PlanResult result;
    ValidationResult validation;
    double wall_time_ms = 0.0;
};

PlanOutcome run_plan(const GridWorld &world, const fs::path &out_dir) {
    const auto t0 = Clock::now();
    const CompiledEnv env = compile_rules(world);
    PlanOutcome outcome{plan(env, world), {}, 0.0};
    if (outcome.result.solved()) outcome.validation = validate_plan(*outcome.result.plan, world);
    outcome.wall_time_ms = elapsed_ms(t0);

    fs::create_directories(out_dir);
    if (!outcome.result.solved()) {
        write_json(out_dir / "plan.json", unsolvable_plan_json(world.start, world.goal));
        return outcome;
    }
    const Plan &p = *outcome.result.plan;
    write_json(out_dir / "plan.json", plan_json(p, world.start, world.goal, outcome.validation));
    write_json(out_dir / "proof.json", proof_json(*outcome.result.proof, outcome.result.stats));
    write_file(out_dir / "trace.txt", render_trace(world, p, world.start, env.rules));
    return outcome;
}

struct TrainOutcome {
    TrainingResult training;
    Rollout greedy;
    double wall_time_ms = 0.0;
};

TrainOutcome run_train(const GridWorld &world, const Hyperparams &hp, const fs::path &out_dir) {
    const auto t0 = Clock::now();
    TrainOutcome outcome{train_q(world, hp), {}, 0.0};
    outcome.greedy = greedy_rollout(outcome.training.table, world, hp.max_steps_per_episode);
    outcome.wall_time_ms = elapsed_ms(t0);

    fs::create_directories(out_dir);
    write_json(out_dir / "qtable.json", qtable_json(outcome.training.table));
    write_file(out_dir / "episodes.csv", episodes_csv(outcome.training.episodes));
    write_json(out_dir / "greedy.json", rollout_json(outcome.greedy));
    return outcome;
}

std::optional<Hyperparams> load_hyperparams_reporting(const std::optional<fs::path> &config, Console io) {
    try {
        return load_hyperparams(config);
    } catch (const std::exception &e) {
        io.err << "config error: " << e.what() << "\n";
        return std::nullopt;
    }
}

int parse_coordinate(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument("bad coordinate '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::vector<Proposition> parse_subgoals(std::string_view flag, const GridWorld &world) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (start <= flag.size()) {
        auto end = flag.find(',', start);
        if (end == std::string_view::npos) end = flag.size();
        tokens.push_back(flag.substr(start, end - start));
        start = end + 1;
    }

    std::vector<Proposition> goals;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string_view tok = tokens[i];
        const auto colon = tok.find(':');
        const std::string_view kind = tok.substr(0, colon);
        if (kind == "goal" && colon == std::string_view::npos) {
            goals.push_back(Proposition::at(world.goal));
        } else if (kind == "start" && colon == std::string_view::npos) {
            goals.push_back(Proposition::at(world.start));
        } else if (kind == "haskey" && colon != std::string_view::npos) {
            const auto key = tok.substr(colon + 1);
            if (key.size() != 1) throw std::invalid_argument("haskey takes one letter: '" + std::string(tok) + "'");
            goals.push_back(Proposition::has_key(key[0]));
        } else if (kind == "at" && colon != std::string_view::npos) {
            if (i + 1 >= tokens.size()) throw std::invalid_argument("at needs x,y: '" + std::string(tok) + "'");
            const int x = parse_coordinate(tok.substr(colon + 1));
            const int y = parse_coordinate(tokens[++i]);
            goals.push_back(Proposition::at({x, y}));
        } else {
            throw std::invalid_argument("unknown subgoal '" + std::string(tok) + "'");
        }
    }
    if (goals.empty()) throw std::invalid_argument("no subgoals given");
    return goals;
}

Hyperparams load_hyperparams(const std::optional<fs::path> &config) {
    Hyperparams hp;
    if (config) {
        Json j;
        try {
            j = Json::parse(read_file(*config));
        } catch (const Json::parse_error &e) {
            throw std::invalid_argument(config->string() + ": " + e.what());
        }
        hp = hyperparams_from_json(j);
    }
    if (const char *env = std::getenv("PROOFPLAN_SEED"); env && *env) {
        std::uint64_t seed = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw std::invalid_argument("PROOFPLAN_SEED must be a non-negative integer");
        hp.seed = seed;
    }
    hp.validate();
    return hp;
}

int cmd_plan(const fs::path &grid, const fs::path &out_dir, Console io) {
    const auto world = load_grid(grid, io);
    if (!world) return exit_code::kError;
    const PlanOutcome outcome = run_plan(*world, out_dir);
    if (!outcome.result.solved()) {
        io.out << "UNSOLVABLE\n";
        return exit_code::kNoPlan;
    }
    io.out << "plan: " << outcome.result.plan->total_length() << " moves, proof depth " << outcome.result.proof->depth()
           << ", closure " << outcome.result.stats.rule_applications << " rule applications in "
           << outcome.result.stats.iterations << " passes, invalid steps " << outcome.validation.invalid_steps.size()
           << "\n";
    return exit_code::kOk;
}

int cmd_train(const fs::path &grid, const std::optional<fs::path> &config, const fs::path &out_dir, Console io) {
    const auto world = load_grid(grid, io);
    if (!world) return exit_code::kError;
    const auto hp = load_hyperparams_reporting(config, io);
    if (!hp) return exit_code::kError;
    const TrainOutcome outcome = run_train(*world, *hp, out_dir);
    io.out << "trained " << hp->episodes << " episodes, invalid actions " << outcome.training.total_invalid()
           << ", greedy rollout " << (outcome.greedy.success ? "reaches goal in " + std::to_string(outcome.greedy.length()) + " steps" : std::string("fails"))
           << "\n";
    return exit_code::kOk;
}

int cmd_compare(const fs::path &grid, const std::optional<fs::path> &config, const fs::path &out_dir, Console io) {
    const auto world = load_grid(grid, io);
    if (!world) return exit_code::kError;
    const auto hp = load_hyperparams_reporting(config, io);
    if (!hp) return exit_code::kError;

    const auto oracle = oracle_shortest(*world);
    const std::optional<std::int64_t> optimal = oracle ? std::optional<std::int64_t>(oracle->length) : std::nullopt;
    const PlanOutcome planned = run_plan(*world, out_dir);
    const TrainOutcome trained = run_train(*world, *hp, out_dir);

    ExperimentReport report;
    report.grid_digest = grid_digest(*world);
    report.width = world->width;
    report.height = world->height;
    report.key_count = world->keys.size();
    report.door_count = world->doors.size();
    report.config = *hp;
    report.optimal_length = optimal;

    MethodMetrics constructive;
    constructive.method = "constructive";
    constructive.success = planned.result.solved();
    constructive.invalid_actions = static_cast<std::int64_t>(planned.validation.invalid_steps.size());
    constructive.episodes_required = 1;
    if (planned.result.solved()) constructive.plan_length = static_cast<std::int64_t>(planned.result.plan->total_length());
    constructive.optimal_length = optimal;
    constructive.wall_time_ms = planned.wall_time_ms;

    MethodMetrics q;
    q.method = "q_learning";
    q.success = trained.greedy.success;
    q.invalid_actions = trained.training.total_invalid();
    q.episodes_required = episodes_to_stable(trained.training.episodes, optimal);
    if (trained.greedy.success) q.plan_length = static_cast<std::int64_t>(trained.greedy.length());
    q.optimal_length = optimal;
    q.wall_time_ms = trained.wall_time_ms;

    report.methods = {constructive, q};
    report.artifacts = {{"plan", "plan.json"},       {"proof", planned.result.solved() ? "proof.json" : ""},
                        {"trace", planned.result.solved() ? "trace.txt" : ""},
                        {"qtable", "qtable.json"},   {"episodes", "episodes.csv"},
                        {"greedy", "greedy.json"},   {"report_csv", "report.csv"}};
    write_json(out_dir / "report.json", report_json(report));
    write_file(out_dir / "report.csv", report_csv(report));
    io.out << report_table(report);
    return planned.result.solved() ? exit_code::kOk : exit_code::kNoPlan;
}

int cmd_chain(const fs::path &grid, std::string_view subgoals, const fs::path &out_dir, Console io) {
    const auto world = load_grid(grid, io);
    if (!world) return exit_code::kError;
    std::vector<Proposition> goals;
    try {
        goals = parse_subgoals(subgoals, *world);
    } catch (const std::exception &e) {
        io.err << "subgoals: " << e.what() << "\n";
        return exit_code::kError;
    }
    const CompiledEnv env = compile_rules(*world);
    MemoCache cache;
    fs::create_directories(out_dir);
    try {
        const ChainResult chain = plan_chain(env, goals, &cache);
        const ValidationResult validation = validate_plan(chain.plan, *world);
        write_json(out_dir / "plan.json", plan_json(chain.plan, world->start, world->goal, validation));
        write_file(out_dir / "trace.txt", render_trace(*world, chain.plan, world->start, env.rules));
        Json fragments = Json::array();
        for (const auto &f : chain.fragments) {
            fragments.push_back(Json{{"subgoal", f.subgoal.to_string()},
                                     {"first_step", f.first_step},
                                     {"step_count", f.step_count},
                                     {"from_cache", f.from_cache}});
        }
        Json doc{{"subgoals", Json::array()},
                 {"fragments", fragments},
                 {"closure_computations", chain.closure_computations},
                 {"cache", Json{{"hits", cache.hits()}, {"misses", cache.misses()}, {"entries", cache.size()}}},
                 {"replay", Json{{"valid", validation.valid},
                                 {"unjustified_steps", replay_justifications(chain.plan, env.rules, env.initial)}}}};
        for (const auto &g : goals) doc["subgoals"].push_back(g.to_string());
        write_json(out_dir / "chain.json", doc);
        io.out << "chain: " << goals.size() << " subgoals, " << chain.plan.total_length() << " moves, invalid steps "
               << validation.invalid_steps.size() << "\n";
        return exit_code::kOk;
    } catch (const SubgoalUnreachable &e) {
        io.out << "UNSOLVABLE: " << e.what() << "\n";
        return exit_code::kNoPlan;
    }
}

int cmd_worlds(const fs::path &worlds_dir, const fs::path &out_dir, Console io) {
    std::vector<fs::path> grids;
    std::error_code ec;
    for (const auto &entry : fs::directory_iterator(worlds_dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".grid") grids.push_back(entry.path());
    if (ec || grids.empty()) {
        io.err << worlds_dir.string() << ": no .grid files found\n";
        return exit_code::kError;
    }
    std::sort(grids.begin(), grids.end());

    std::vector<GridWorld> layouts;
    WorldSet set;
    std::vector<CompiledEnv> compiled;
    for (const auto &g : grids) {
        auto world = load_grid(g, io);
        if (!world) return exit_code::kError;
        KnowledgeBase kb{Proposition::at(world->start)};
        fs::path facts = g;
        facts.replace_extension(".facts");
        if (fs::exists(facts)) {
            try {
                std::istringstream lines(read_file(facts));
                for (std::string line; std::getline(lines, line);) {
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (line.empty() || line.front() == '#') continue;
                    kb.insert(parse_proposition(line));
                }
            } catch (const std::exception &e) {
                io.err << facts.string() << ": " << e.what() << "\n";
                return exit_code::kError;
            }
        }
        compiled.push_back(compile_rules(*world));
        const auto &first = compiled.front().rules;
        const auto &mine = compiled.back().rules;
        const bool same = first.size() == mine.size() &&
                          std::equal(first.begin(), first.end(), mine.begin(),
                                     [](const Rule &a, const Rule &b) { return a.same_content(b); }) &&
                          world->goal == layouts.emplace_back(*world).goal && world->goal == layouts.front().goal;
        if (!same) {
            io.err << g.string() << ": possible worlds must share one layout and goal\n";
            return exit_code::kError;
        }
        set.worlds.push_back(std::move(kb));
    }

    fs::create_directories(out_dir);
    const Proposition goal = Proposition::at(layouts.front().goal);
    try {
        const ConformantPlan plan = plan_under_uncertainty(set, compiled.front().rules, goal);
        Json per_world = Json::array();
        std::vector<ValidationResult> results;
        for (std::size_t i = 0; i < layouts.size(); ++i) {
            const AugmentedState start = state_from_facts(set.worlds[i]);
            results.push_back(validate_plan(plan.per_world[i], layouts[i], start));
            Json facts = Json::array();
            for (const auto &f : set.worlds[i]) facts.push_back(f.to_string());
            per_world.push_back(Json{{"name", grids[i].filename().string()},
                                     {"facts", facts},
                                     {"valid", results.back().valid},
                                     {"invalid_steps", results.back().invalid_steps},
                                     {"unjustified_steps", replay_justifications(plan.per_world[i], compiled[i].rules, set.worlds[i])}});
        }
        write_json(out_dir / "plan.json", plan_json(plan.per_world.front(), layouts.front().start, layouts.front().goal, results.front()));
        write_file(out_dir / "trace.txt", render_trace(layouts.front(), plan.per_world.front(), layouts.front().start, compiled.front().rules));
        Json actions = Json::array();
        for (const auto a : plan.actions) actions.push_back(std::string(action_name(a)));
        write_json(out_dir / "worlds.json", Json{{"conformant", true}, {"actions", actions}, {"worlds", per_world}});
        io.out << "conformant plan: " << plan.actions.size() << " moves valid in " << layouts.size() << " worlds\n";
        return exit_code::kOk;
    } catch (const NoConformantPlan &e) {
        io.out << "UNSOLVABLE: " << e.what() << "\n";
        return exit_code::kNoPlan;
    } catch (const std::invalid_argument &e) {
        io.err << worlds_dir.string() << ": " << e.what() << "\n";
        return exit_code::kError;
    }
}

int cmd_learn(const fs::path &grid, std::size_t budget, std::uint64_t seed, const fs::path &out_dir, Console io) {
    auto world = load_grid(grid, io);
    if (!world) return exit_code::kError;
    const CompiledEnv truth = compile_rules(*world);
    const LearningResult learned = learn_rules(HiddenEnv::from_world(*world), budget, seed);
    const bool sound = rules_subset(learned.learned, truth.rules);
    fs::create_directories(out_dir);
    write_json(out_dir / "learned_rules.json", learning_json(learned, budget, seed, sound));
    write_file(out_dir / "probes.csv", probes_csv(learned));
    io.out << "learned " << learned.learned.size() << " rules from " << learned.log.size() << " probes, "
           << (sound ? "all" : "NOT all") << " present in the true rule set\n";
    return exit_code::kOk;
}

int cmd_multi(const fs::path &scenario, const fs::path &out_dir, Console io) {
    const auto world = load_grid(scenario, io);
    if (!world) return exit_code::kError;
    std::vector<Rule> comm;
    fs::path sidecar = scenario;
    sidecar.replace_extension(".comm.json");
    if (fs::exists(sidecar)) {
        try {
            comm = comm_rules_from_json(Json::parse(read_file(sidecar)));
            for (const auto &r : comm) classify_comm_rule(r);
        } catch (const std::exception &e) {
            io.err << sidecar.string() << ": " << e.what() << "\n";
            return exit_code::kError;
        }
    }
    if (world->agents.size() < 2) {
        io.err << scenario.string() << ": multi-agent scenarios need at least two digit agent starts\n";
        return exit_code::kError;
    }
    try {
        const MultiAgentResult result = multi_agent_plan(*world, comm);
        const MultiAgentCheck check = verify_multi_agent(*world, comm, result, result.deliveries);
        fs::create_directories(out_dir);
        write_json(out_dir / "multi.json", multi_agent_json(result, check));
        io.out << "joint plan: " << result.rounds << " rounds, " << result.deliveries.size() << " deliveries, "
               << (check.ok() ? "replay valid" : "REPLAY FAILED") << "\n";
        return check.ok() ? exit_code::kOk : exit_code::kNoPlan;
    } catch (const NoJointPlan &e) {
        io.out << "UNSOLVABLE: " << e.what() << "\n";
        return exit_code::kNoPlan;
    }
}

int run_cli(int argc, char **argv) {
    CLI::App app{"Constructive proof-based planning for key/door gridworlds"};
    app.require_subcommand(1);
    Console io{std::cout, std::cerr};

    std::string grid, out_dir = "proofplan_out", config, subgoals, dir;
    std::size_t budget = 0;
    std::uint64_t seed = 0;

    auto *plan_cmd = app.add_subcommand("plan", "Prove the goal and extract an optimal justified plan");
    plan_cmd->add_option("grid", grid, "Grid file")->required();
    plan_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *train_cmd = app.add_subcommand("train", "Train the tabular Q-learning baseline");
    train_cmd->add_option("grid", grid, "Grid file")->required();
    train_cmd->add_option("-c,--config", config, "Hyperparameter JSON");
    train_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *compare_cmd = app.add_subcommand("compare", "Run both methods and write a comparison report");
    compare_cmd->add_option("grid", grid, "Grid file")->required();
    compare_cmd->add_option("-c,--config", config, "Hyperparameter JSON");
    compare_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *chain_cmd = app.add_subcommand("chain", "Plan through an ordered list of subgoals");
    chain_cmd->add_option("grid", grid, "Grid file")->required();
    chain_cmd->add_option("--subgoals", subgoals, "e.g. haskey:a,at:8,8")->required();
    chain_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *worlds_cmd = app.add_subcommand("worlds", "Conformant plan over a directory of possible worlds");
    worlds_cmd->add_option("dir", dir, "Directory of .grid (+ .facts) files")->required();
    worlds_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *learn_cmd = app.add_subcommand("learn", "Learn movement rules by safe probing");
    learn_cmd->add_option("grid", grid, "Grid file")->required();
    learn_cmd->add_option("--budget", budget, "Probe budget")->required();
    learn_cmd->add_option("--seed", seed, "RNG seed")->required();
    learn_cmd->add_option("-o,--out", out_dir, "Output directory");

    auto *multi_cmd = app.add_subcommand("multi", "Joint plan for a multi-agent scenario");
    multi_cmd->add_option("scenario", grid, "Grid with digit agents; comm rules in <name>.comm.json")->required();
    multi_cmd->add_option("-o,--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? exit_code::kOk : exit_code::kError;
    }

    const std::optional<fs::path> config_path = config.empty() ? std::nullopt : std::optional<fs::path>(config);
    try {
        if (plan_cmd->parsed()) return cmd_plan(grid, out_dir, io);
        if (train_cmd->parsed()) return cmd_train(grid, config_path, out_dir, io);
        if (compare_cmd->parsed()) return cmd_compare(grid, config_path, out_dir, io);
        if (chain_cmd->parsed()) return cmd_chain(grid, subgoals, out_dir, io);
        if (worlds_cmd->parsed()) return cmd_worlds(dir, out_dir, io);
        if (learn_cmd->parsed()) return cmd_learn(grid, budget, seed, out_dir, io);
        if (multi_cmd->parsed()) return cmd_multi(grid, out_dir, io);
    } catch (const std::exception &e) {
        io.err << "error: " << e.what() << "\n";
        return exit_code::kError;
    }
    return exit_code::kError;
}

}  // namespace proofplan
