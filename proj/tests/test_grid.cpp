#include <doctest.h>

#include <random>

#include "proofplan/artifacts.hpp"
#include "proofplan/dynamics.hpp"
#include "proofplan/grid.hpp"
#include "support.hpp"

using namespace proofplan;

namespace {

GridParseError::Kind parse_error_kind(std::string_view text) {
    try {
        parse_grid(text);
    } catch (const GridParseError &e) {
        return e.kind();
    }
    FAIL("grid parsed unexpectedly");
    return GridParseError::Kind::Empty;
}

}  // namespace

TEST_CASE("parse the one-key fixture") {
    const GridWorld w = parse_grid(read_file(support::fixture("one_key_5x5.grid")));
    CHECK(w.width == 5);
    CHECK(w.height == 5);
    CHECK(w.start == Cell{0, 0});
    CHECK(w.goal == Cell{4, 2});
    CHECK(w.keys.at(Cell{0, 2}) == 'a');
    CHECK(w.doors.at(Cell{2, 2}) == 'a');
    CHECK(w.walls.size() == 4);
    CHECK(w.warnings.empty());
}

TEST_CASE("CRLF and trailing blank lines") {
    const GridWorld a = parse_grid("S.\r\n.G\r\n\r\n");
    const GridWorld b = parse_grid("S.\n.G");
    CHECK(render_grid(a) == render_grid(b));
    CHECK(grid_digest(a) == grid_digest(b));
    CHECK(render_grid(a) == "S.\n.G\n");
    CHECK(normalize_grid_text("S. \r\n.G\r\n\n") == "S.\n.G\n");
}

TEST_CASE("parse errors carry kind and position") {
    CHECK(parse_error_kind("") == GridParseError::Kind::Empty);
    CHECK(parse_error_kind("S.G\n..") == GridParseError::Kind::RaggedRows);
    CHECK(parse_error_kind("S.?G") == GridParseError::Kind::UnknownChar);
    CHECK(parse_error_kind("S. G") == GridParseError::Kind::UnknownChar);
    CHECK(parse_error_kind("..G") == GridParseError::Kind::MissingStart);
    CHECK(parse_error_kind("S..") == GridParseError::Kind::MissingGoal);
    CHECK(parse_error_kind("SSG") == GridParseError::Kind::DuplicateStart);
    CHECK(parse_error_kind("SGG") == GridParseError::Kind::DuplicateGoal);
    CHECK(parse_error_kind("00G") == GridParseError::Kind::DuplicateAgent);
    try {
        parse_grid("S..\n.x?\n..G");
        FAIL("expected error");
    } catch (const GridParseError &e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
        CHECK(std::string(e.what()).rfind("2:3:", 0) == 0);
    }
}

TEST_CASE("lone door warns and agent start fallback") {
    const GridWorld w = parse_grid("SBG");
    CHECK(w.warnings.size() == 1);
    const GridWorld m = parse_grid("1.0G");
    CHECK(m.start == Cell{2, 0});
    CHECK(m.agents.size() == 2);
    CHECK(render_grid(m) == "1.0G\n");
}

TEST_CASE("render is the inverse of parse") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        const auto raw = support::random_grid(rng, 8, 3);
        CHECK(render_grid(parse_grid(raw.text())) == raw.text());
    }
}

TEST_CASE("compiled rule counts on the corridor") {
    const GridWorld w = parse_grid("S.G");
    const CompiledEnv env = compile_rules(w);
    CHECK(env.rules.size() == 4);
    CHECK(env.movement_rule_count() == 4);
    CHECK(env.pickup_rule_count() == 0);
    CHECK(env.rules[0].to_string() == "At(0,0) -> At(1,0) [E]");
    CHECK(env.goal_prop == Proposition::at({2, 0}));
    CHECK(env.initial == KnowledgeBase{Proposition::at({0, 0})});
    for (std::size_t i = 0; i < env.rules.size(); ++i) CHECK(env.rules[i].id == i);
}

TEST_CASE("door and key rules") {
    const GridWorld w = parse_grid("SaAG");
    const CompiledEnv env = compile_rules(w);
    CHECK(env.pickup_rule_count() == 1);
    bool door_rule = false;
    for (const auto &r : env.rules) {
        if (r.consequent == Proposition::at({2, 0})) {
            CHECK(std::find(r.antecedents.begin(), r.antecedents.end(), Proposition::has_key('a')) !=
                  r.antecedents.end());
            door_rule = true;
        }
        if (r.consequent == Proposition::has_key('a')) {
            CHECK(r.antecedents == std::vector<Proposition>{Proposition::at({1, 0})});
            CHECK(r.action == Action::Pickup);
        }
    }
    CHECK(door_rule);
}

TEST_CASE("empty N x N grids compile to 4N(N-1) moves") {
    for (int n : {2, 5, 10}) {
        std::string text;
        for (int y = 0; y < n; ++y) {
            std::string row(static_cast<std::size_t>(n), '.');
            if (y == 0) row[0] = 'S';
            if (y == n - 1) row.back() = 'G';
            text += row + "\n";
        }
        CHECK(compile_rules(parse_grid(text)).rules.size() == static_cast<std::size_t>(4 * n * (n - 1)));
    }
}

TEST_CASE("compiled moves agree with the step function") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        const GridWorld w = parse_grid(support::random_grid(rng, 7, 2).text());
        const CompiledEnv env = compile_rules(w);
        for (const auto &r : env.rules) {
            if (!r.action || !is_move(*r.action)) continue;
            Cell from{};
            KeySet inv;
            for (const auto &a : r.antecedents) {
                if (a.is_at()) from = a.cell();
                if (a.is_has_key()) inv.insert(a.key());
            }
            const StepOutcome out = simulate_step(w, {from, inv}, *r.action);
            CHECK_FALSE(out.invalid);
            CHECK(out.next.cell == r.consequent.cell());
        }
    }
}

TEST_CASE("simulate_step basics") {
    const GridWorld w = parse_grid("SaAG");
    auto s = initial_state(w);
    auto out = simulate_step(w, s, Action::West);
    CHECK(out.invalid);
    CHECK(out.next == s);
    out = simulate_step(w, s, Action::East);
    CHECK(out.next.inventory.contains('a'));
    out = simulate_step(w, {{1, 0}, {}}, Action::East);
    CHECK(out.invalid);
    out = simulate_step(w, {{2, 0}, KeySet::from_string("a")}, Action::East);
    CHECK(out.terminal);
    CHECK(out.reward == kGoalReward);
    CHECK(simulate_step(w, s, Action::Pickup).invalid);
}

TEST_CASE("key sets") {
    KeySet k = KeySet::from_string("ca");
    CHECK(k.to_string() == "ac");
    CHECK(k.size() == 2);
    CHECK(KeySet::from_string("a").subset_of(k));
    CHECK_FALSE(k.subset_of(KeySet::from_string("a")));
    CHECK(k.with('b').to_string() == "abc");
}
