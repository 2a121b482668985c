#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "proofplan/grid.hpp"
#include "proofplan/logic.hpp"

namespace support {

using proofplan::Cell;
using proofplan::Proposition;
using proofplan::Rule;

inline std::filesystem::path fixture(const std::string &name) {
    return std::filesystem::path(PROOFPLAN_FIXTURES) / name;
}

inline std::filesystem::path schema(const std::string &name) {
    return std::filesystem::path(PROOFPLAN_SCHEMA_DIR) / name;
}

// Character-level grid model used by the oracles below. It reads the raw rows
// and never touches GridWorld or the compiled rules.
struct RawGrid {
    std::vector<std::string> rows;

    int width() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
    int height() const { return static_cast<int>(rows.size()); }
    char at(int x, int y) const { return rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]; }
    std::string text() const {
        std::string s;
        for (const auto &r : rows) s += r + "\n";
        return s;
    }
    Cell find(char c) const {
        for (int y = 0; y < height(); ++y)
            for (int x = 0; x < width(); ++x)
                if (at(x, y) == c) return {x, y};
        return {-1, -1};
    }
};

struct RawState {
    int x, y;
    std::uint32_t keys;
    auto operator<=>(const RawState &) const = default;
};

inline constexpr int kDx[4] = {0, 1, 0, -1};
inline constexpr int kDy[4] = {-1, 0, 1, 0};

// Result of one move under the character model: nullopt when blocked.
inline std::optional<RawState> raw_step(const RawGrid &g, RawState s, int dir) {
    const int nx = s.x + kDx[dir], ny = s.y + kDy[dir];
    if (nx < 0 || ny < 0 || nx >= g.width() || ny >= g.height()) return std::nullopt;
    const char c = g.at(nx, ny);
    if (c == '#') return std::nullopt;
    if (c >= 'A' && c <= 'Z' && c != 'S' && c != 'G' && !(s.keys & (1U << (c - 'A')))) return std::nullopt;
    RawState n{nx, ny, s.keys};
    if (c >= 'a' && c <= 'z') n.keys |= 1U << (c - 'a');
    return n;
}

inline RawState raw_start(const RawGrid &g) {
    const Cell s = g.find('S');
    RawState st{s.x, s.y, 0};
    return st;
}

inline std::optional<int> reference_bfs(const RawGrid &g) {
    const RawState start = raw_start(g);
    const Cell goal = g.find('G');
    std::map<RawState, int> dist{{start, 0}};
    std::deque<RawState> queue{start};
    while (!queue.empty()) {
        const RawState s = queue.front();
        queue.pop_front();
        if (s.x == goal.x && s.y == goal.y) return dist[s];
        for (int d = 0; d < 4; ++d) {
            auto n = raw_step(g, s, d);
            if (n && !dist.contains(*n)) {
                dist[*n] = dist[s] + 1;
                queue.push_back(*n);
            }
        }
    }
    return std::nullopt;
}

// Exhaustive depth-first enumeration of simple paths over (cell, keys),
// keeping the shortest one that reaches the goal.
inline std::optional<int> exhaustive_dfs(const RawGrid &g) {
    const Cell goal = g.find('G');
    std::set<RawState> on_path;
    std::optional<int> best;
    auto rec = [&](auto &self, RawState s, int depth) -> void {
        if (best && depth >= *best) return;
        if (s.x == goal.x && s.y == goal.y) {
            best = depth;
            return;
        }
        on_path.insert(s);
        for (int d = 0; d < 4; ++d) {
            auto n = raw_step(g, s, d);
            if (n && !on_path.contains(*n)) self(self, *n, depth + 1);
        }
        on_path.erase(s);
    };
    rec(rec, raw_start(g), 0);
    return best;
}

// Random grid with up to `max_pairs` key/door pairs. Keys and doors use the
// first letters of the alphabet.
inline RawGrid random_grid(std::mt19937_64 &rng, int max_side, int max_pairs) {
    std::uniform_int_distribution<int> side(2, max_side);
    const int w = side(rng), h = side(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double density = unit(rng) * 0.35;
    RawGrid g;
    g.rows.assign(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '.'));
    for (auto &row : g.rows)
        for (auto &c : row)
            if (unit(rng) < density) c = '#';

    std::vector<std::pair<int, int>> cells;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) cells.emplace_back(x, y);
    std::shuffle(cells.begin(), cells.end(), rng);
    const int cap = std::max(0, std::min<int>(max_pairs, (static_cast<int>(cells.size()) - 2) / 2));
    const int pairs = std::uniform_int_distribution<int>(0, cap)(rng);
    std::size_t next = 0;
    auto place = [&](char c) {
        auto [x, y] = cells[next++];
        g.rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = c;
    };
    place('S');
    place('G');
    for (int k = 0; k < pairs; ++k) {
        place(static_cast<char>('a' + k));
        place(static_cast<char>('A' + k));
    }
    return g;
}

// Every wall pattern of a w x h template with S top-left and G bottom-right.
inline std::vector<RawGrid> all_wall_configurations(int w, int h) {
    std::vector<Cell> free;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!(x == 0 && y == 0) && !(x == w - 1 && y == h - 1)) free.push_back({x, y});
    std::vector<RawGrid> out;
    for (std::uint32_t mask = 0; mask < (1U << free.size()); ++mask) {
        RawGrid g;
        g.rows.assign(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '.'));
        g.rows[0][0] = 'S';
        g.rows[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(w - 1)] = 'G';
        for (std::size_t i = 0; i < free.size(); ++i)
            if (mask & (1U << i)) g.rows[static_cast<std::size_t>(free[i].y)][static_cast<std::size_t>(free[i].x)] = '#';
        out.push_back(std::move(g));
    }
    return out;
}

// Rule systems over atoms p0..p{n-1}.
struct RuleSystem {
    std::vector<Proposition> gamma0;
    std::vector<Rule> rules;
};

inline Proposition atom_n(int i) { return Proposition::atom("p" + std::to_string(i)); }

inline RuleSystem random_rule_system(std::mt19937_64 &rng, int max_facts) {
    std::uniform_int_distribution<int> facts_dist(2, max_facts);
    const int n = facts_dist(rng);
    std::uniform_int_distribution<int> pick(0, n - 1);
    RuleSystem sys;
    const int seeds = std::uniform_int_distribution<int>(1, std::max(1, n / 5))(rng);
    for (int i = 0; i < seeds; ++i) sys.gamma0.push_back(atom_n(pick(rng)));
    const int rule_count = std::uniform_int_distribution<int>(0, 3 * n)(rng);
    for (int r = 0; r < rule_count; ++r) {
        const int head = pick(rng);
        const int arity = std::uniform_int_distribution<int>(1, 3)(rng);
        std::vector<Proposition> body;
        for (int a = 0; a < arity; ++a) {
            int b = pick(rng);
            if (b == head) b = (b + 1) % n;
            body.push_back(atom_n(b));
        }
        sys.rules.push_back(proofplan::make_rule(static_cast<proofplan::RuleId>(sys.rules.size()), body, atom_n(head)));
    }
    return sys;
}

// Repeated full scans over every rule until nothing changes.
inline std::set<Proposition> naive_closure(const std::vector<Proposition> &gamma0, const std::vector<Rule> &rules) {
    std::set<Proposition> facts(gamma0.begin(), gamma0.end());
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto &r : rules) {
            const bool ready = std::all_of(r.antecedents.begin(), r.antecedents.end(),
                                           [&](const Proposition &p) { return facts.contains(p); });
            if (ready && facts.insert(r.consequent).second) changed = true;
        }
    }
    return facts;
}

// Minimal JSON-schema checker: type (string or list), required, properties,
// additionalProperties:false, items, enum, minimum, pattern-free.
inline void schema_errors(const nlohmann::json &schema, const nlohmann::json &value, const std::string &path,
                          std::vector<std::string> &errors) {
    auto type_ok = [&](const std::string &t) {
        if (t == "object") return value.is_object();
        if (t == "array") return value.is_array();
        if (t == "string") return value.is_string();
        if (t == "boolean") return value.is_boolean();
        if (t == "integer") return value.is_number_integer();
        if (t == "number") return value.is_number();
        if (t == "null") return value.is_null();
        return false;
    };
    if (schema.contains("type")) {
        bool ok = false;
        if (schema["type"].is_array()) {
            for (const auto &t : schema["type"]) ok = ok || type_ok(t.get<std::string>());
        } else {
            ok = type_ok(schema["type"].get<std::string>());
        }
        if (!ok) {
            errors.push_back(path + ": wrong type");
            return;
        }
    }
    if (schema.contains("enum")) {
        const auto &e = schema["enum"];
        if (std::find(e.begin(), e.end(), value) == e.end()) errors.push_back(path + ": not in enum");
    }
    if (schema.contains("minimum") && value.is_number() && value.get<double>() < schema["minimum"].get<double>())
        errors.push_back(path + ": below minimum");
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto &k : schema["required"])
                if (!value.contains(k.get<std::string>())) errors.push_back(path + ": missing " + k.get<std::string>());
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (schema.contains("properties") && schema["properties"].contains(it.key()))
                schema_errors(schema["properties"][it.key()], it.value(), path + "/" + it.key(), errors);
            else if (closed)
                errors.push_back(path + ": unexpected " + it.key());
        }
    }
    if (value.is_array() && schema.contains("items"))
        for (std::size_t i = 0; i < value.size(); ++i)
            schema_errors(schema["items"], value[i], path + "/" + std::to_string(i), errors);
}

}  // namespace support
