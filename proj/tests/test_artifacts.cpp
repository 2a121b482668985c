#include <doctest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "proofplan/artifacts.hpp"
#include "proofplan/commands.hpp"
#include "support.hpp"

using namespace proofplan;
namespace fs = std::filesystem;

namespace {

GridWorld load(const std::string &name) { return parse_grid(read_file(support::fixture(name))); }

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / "proofplan_tests" / name;
    fs::remove_all(p);
    return p;
}

struct Captured {
    std::ostringstream out, err;
    Console io() { return {out, err}; }
};

Json strip_times(Json j) {
    for (auto &m : j["methods"]) m.erase("wall_time_ms");
    return j;
}

}  // namespace

TEST_CASE("plan json round trip") {
    const GridWorld w = load("two_key_9x9.grid");
    const auto res = plan(compile_rules(w), w);
    REQUIRE(res.solved());
    const Json j = plan_json(*res.plan, w.start, w.goal, validate_plan(*res.plan, w));
    CHECK(j["length"] == 20);
    CHECK(j["cells"].size() == 21);
    CHECK(plan_from_json(Json::parse(j.dump())) == *res.plan);
    CHECK(unsolvable_plan_json(w.start, w.goal)["solvable"] == false);
}

TEST_CASE("proof json round trip") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 30; ++i) {
        const GridWorld w = parse_grid(support::random_grid(rng, 7, 2).text());
        const auto res = plan(compile_rules(w), w);
        if (!res.solved()) continue;
        const Json j = proof_json(*res.proof, res.stats);
        CHECK(j["depth"] == res.proof->depth());
        CHECK(proof_from_json(Json::parse(j.dump())) == *res.proof);
    }
}

TEST_CASE("rule json round trip") {
    const auto rules = compile_rules(load("key_corridor.grid")).rules;
    for (const auto &r : rules) {
        const Rule back = rule_from_json(rule_json(r), 999);
        CHECK(back.id == r.id);
        CHECK(back.same_content(r));
        CHECK(back.action == r.action);
    }
    const Rule fallback = rule_from_json(Json::parse(R"j({"antecedents":["At(0,0)"],"consequent":"At(1,0)"})j"), 42);
    CHECK(fallback.id == 42);
}

TEST_CASE("trace overlay re-parses to the plan cells") {
    std::mt19937_64 rng(2);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        const GridWorld w = parse_grid(support::random_grid(rng, 9, 3).text());
        const CompiledEnv env = compile_rules(w);
        const auto res = plan(env, w);
        if (!res.solved()) continue;
        const std::string trace = render_trace(w, *res.plan, w.start, env.rules);
        const ParsedTrace parsed = parse_trace(trace);
        CHECK(parsed.cells == res.plan->cells(w.start));
        CHECK(parsed.overlay.size() == static_cast<std::size_t>(w.height));
        for (const auto &c : res.plan->cells(w.start)) {
            const char ch = parsed.overlay[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)];
            CHECK(std::string("*kdSG").find(ch) != std::string::npos);
        }
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("one-key trace marks key and door") {
    const GridWorld w = load("one_key_5x5.grid");
    const CompiledEnv env = compile_rules(w);
    const auto res = plan(env, w);
    const ParsedTrace t = parse_trace(render_trace(w, *res.plan, w.start, env.rules));
    CHECK(t.overlay[2] == "k*d*G");
    CHECK(t.overlay[0][0] == 'S');
}

TEST_CASE("report validates against the schema") {
    const fs::path out = scratch("schema");
    const fs::path cfg = out / "cfg.json";
    write_file(cfg, R"({"episodes": 400, "seed": 5})");
    Captured c;
    REQUIRE(cmd_compare(support::fixture("one_key_5x5.grid"), cfg, out, c.io()) == exit_code::kOk);
    const auto schema = nlohmann::json::parse(read_file(support::schema("report.schema.json")));
    const auto report = nlohmann::json::parse(read_file(out / "report.json"));
    std::vector<std::string> errors;
    support::schema_errors(schema, report, "", errors);
    CHECK(errors.empty());
    CHECK(report["methods"][0]["invalid_actions"] == 0);
    CHECK(report["methods"][0]["episodes_required"] == 1);
    CHECK(report["optimal_length"] == 6);

    const std::string csv = read_file(out / "report.csv");
    CHECK(csv.rfind("method,success,invalid_actions,episodes_required,plan_length,optimal_length,wall_time_ms\n", 0) == 0);
    CHECK(c.out.str().find("constructive") != std::string::npos);

    Json broken = report;
    broken["methods"][0].erase("success");
    errors.clear();
    support::schema_errors(schema, broken, "", errors);
    CHECK_FALSE(errors.empty());
}

TEST_CASE("artifacts are byte reproducible") {
    const fs::path a = scratch("repro_a"), b = scratch("repro_b");
    fs::create_directories(a);
    const fs::path cfg = a / "cfg.json";
    write_file(cfg, R"({"episodes": 300, "seed": 11})");
    Captured c1, c2;
    REQUIRE(cmd_compare(support::fixture("one_key_5x5.grid"), cfg, a / "out", c1.io()) == 0);
    REQUIRE(cmd_compare(support::fixture("one_key_5x5.grid"), cfg, b / "out", c2.io()) == 0);
    for (const char *f : {"plan.json", "proof.json", "trace.txt", "qtable.json", "episodes.csv", "greedy.json"})
        CHECK(read_file(a / "out" / f) == read_file(b / "out" / f));
    CHECK(strip_times(Json::parse(read_file(a / "out" / "report.json"))) ==
          strip_times(Json::parse(read_file(b / "out" / "report.json"))));
}

TEST_CASE("seed environment override") {
    ::setenv("PROOFPLAN_SEED", "77", 1);
    CHECK(load_hyperparams(std::nullopt).seed == 77);
    ::setenv("PROOFPLAN_SEED", "seven", 1);
    CHECK_THROWS(load_hyperparams(std::nullopt));
    ::unsetenv("PROOFPLAN_SEED");
    CHECK(load_hyperparams(std::nullopt).seed == 0);
}

TEST_CASE("subgoal flag grammar") {
    const GridWorld w = load("two_key_9x9.grid");
    const auto goals = parse_subgoals("haskey:a,haskey:b,at:8,8", w);
    CHECK(goals == std::vector<Proposition>{Proposition::has_key('a'), Proposition::has_key('b'),
                                             Proposition::at({8, 8})});
    CHECK(parse_subgoals("goal", w) == std::vector<Proposition>{Proposition::at(w.goal)});
    CHECK_THROWS(parse_subgoals("at:8", w));
    CHECK_THROWS(parse_subgoals("key:a", w));
    CHECK_THROWS(parse_subgoals("", w));
}

TEST_CASE("command exit codes") {
    Captured c;
    const fs::path out = scratch("exit");
    CHECK(cmd_plan(support::fixture("one_key_5x5.grid"), out / "ok", c.io()) == exit_code::kOk);
    CHECK(fs::exists(out / "ok" / "plan.json"));
    CHECK(fs::exists(out / "ok" / "proof.json"));
    CHECK(fs::exists(out / "ok" / "trace.txt"));

    CHECK(cmd_plan(support::fixture("blocked.grid"), out / "blocked", c.io()) == exit_code::kNoPlan);
    CHECK(c.out.str().find("UNSOLVABLE") != std::string::npos);
    CHECK(Json::parse(read_file(out / "blocked" / "plan.json"))["solvable"] == false);

    write_file(out / "bad.grid", "S..\n.?.\n..G\n");
    Captured bad;
    CHECK(cmd_plan(out / "bad.grid", out / "bad", bad.io()) == exit_code::kError);
    CHECK(bad.err.str().find("2:2:") != std::string::npos);
    CHECK(cmd_plan(out / "missing.grid", out / "missing", bad.io()) == exit_code::kError);

    CHECK(cmd_chain(support::fixture("two_key_9x9.grid"), "haskey:a,haskey:b,goal", out / "chain", c.io()) == 0);
    CHECK(fs::exists(out / "chain" / "chain.json"));
    CHECK(cmd_chain(support::fixture("two_key_9x9.grid"), "haskey:z", out / "chain2", c.io()) == exit_code::kNoPlan);
    CHECK(cmd_chain(support::fixture("two_key_9x9.grid"), "nonsense", out / "chain3", c.io()) == exit_code::kError);

    CHECK(cmd_worlds(support::fixture("worlds/key_uncertainty"), out / "worlds", c.io()) == 0);
    CHECK(cmd_worlds(out / "nowhere", out / "worlds2", c.io()) == exit_code::kError);

    CHECK(cmd_learn(support::fixture("one_key_5x5.grid"), 20, 3, out / "learn", c.io()) == 0);
    CHECK(fs::exists(out / "learn" / "learned_rules.json"));
    CHECK(fs::exists(out / "learn" / "probes.csv"));

    CHECK(cmd_multi(support::fixture("courier.grid"), out / "multi", c.io()) == 0);
    CHECK(Json::parse(read_file(out / "multi" / "multi.json"))["rounds"] == 3);
    CHECK(cmd_multi(support::fixture("corridor.grid"), out / "multi2", c.io()) == exit_code::kError);

    write_file(out / "bad_cfg.json", R"({"alpha": -1})");
    CHECK(cmd_train(support::fixture("corridor.grid"), out / "bad_cfg.json", out / "train", c.io()) == exit_code::kError);
}

TEST_CASE("single-world directory matches plain planning") {
    const fs::path out = scratch("single");
    Captured c;
    REQUIRE(cmd_worlds(support::fixture("worlds/single"), out / "w", c.io()) == 0);
    REQUIRE(cmd_plan(support::fixture("worlds/single/only.grid"), out / "p", c.io()) == 0);
    CHECK(read_file(out / "w" / "plan.json") == read_file(out / "p" / "plan.json"));
}

TEST_CASE("run_cli dispatch") {
    const fs::path out = scratch("cli");
    const std::string grid = support::fixture("corridor.grid").string();
    const std::string dir = out.string();
    std::vector<std::string> args = {"proofplan", "plan", grid, "-o", dir};
    std::vector<char *> argv;
    for (auto &s : args) argv.push_back(s.data());
    CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 0);
    CHECK(fs::exists(out / "plan.json"));

    std::vector<std::string> bad = {"proofplan", "frobnicate"};
    std::vector<char *> bargv;
    for (auto &s : bad) bargv.push_back(s.data());
    CHECK(run_cli(static_cast<int>(bargv.size()), bargv.data()) == exit_code::kError);
}
