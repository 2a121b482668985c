#include "proofplan/grid.hpp"

#include <cstdio>
#include <optional>

namespace proofplan {

std::set<KeyId> GridWorld::key_ids() const {
    std::set<KeyId> ids;
    for (const auto &[cell, k] : keys) ids.insert(k);
    return ids;
}

GridParseError::GridParseError(Kind kind, int line, int column, const std::string &message)
    : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + message : message),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        if (end == text.size()) break;
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

GridWorld parse_grid(std::string_view text) {
    using Kind = GridParseError::Kind;
    const auto rows = split_lines(text);
    if (rows.empty()) throw GridParseError(Kind::Empty, 0, 0, "grid is empty");

    GridWorld world;
    world.height = static_cast<int>(rows.size());
    world.width = static_cast<int>(rows.front().size());
    if (world.width == 0) throw GridParseError(Kind::Empty, 1, 1, "grid row is empty");

    std::optional<Cell> start;
    std::optional<Cell> goal;
    for (int y = 0; y < world.height; ++y) {
        const auto &row = rows[static_cast<std::size_t>(y)];
        if (static_cast<int>(row.size()) != world.width) {
            throw GridParseError(Kind::RaggedRows, y + 1, static_cast<int>(row.size()) + 1,
                                 "row length " + std::to_string(row.size()) + " differs from width " +
                                     std::to_string(world.width));
        }
        for (int x = 0; x < world.width; ++x) {
            const char ch = row[static_cast<std::size_t>(x)];
            const Cell c{x, y};
            if (ch == '.') continue;
            if (ch == '#') {
                world.walls.insert(c);
            } else if (ch == 'S') {
                if (start) throw GridParseError(Kind::DuplicateStart, y + 1, x + 1, "second start cell");
                start = c;
            } else if (ch == 'G') {
                if (goal) throw GridParseError(Kind::DuplicateGoal, y + 1, x + 1, "second goal cell");
                goal = c;
            } else if (ch >= 'a' && ch <= 'z') {
                world.keys[c] = ch;
            } else if (ch >= 'A' && ch <= 'Z') {
                world.doors[c] = static_cast<KeyId>(ch - 'A' + 'a');
            } else if (ch >= '0' && ch <= '9') {
                if (!world.agents.emplace(ch - '0', c).second)
                    throw GridParseError(Kind::DuplicateAgent, y + 1, x + 1, std::string("agent ") + ch + " appears twice");
            } else {
                std::string shown = ch == ' ' ? std::string("space") : std::string("'") + ch + "'";
                throw GridParseError(Kind::UnknownChar, y + 1, x + 1, "unknown grid character " + shown);
            }
        }
    }
    if (!goal) throw GridParseError(Kind::MissingGoal, 0, 0, "grid has no goal cell 'G'");
    if (!start) {
        if (world.agents.empty()) throw GridParseError(Kind::MissingStart, 0, 0, "grid has no start cell 'S'");
        start = world.agents.begin()->second;
    }
    world.start = *start;
    world.goal = *goal;

    const auto ids = world.key_ids();
    std::set<KeyId> warned;
    for (const auto &[cell, k] : world.doors) {
        if (!ids.contains(k) && warned.insert(k).second) {
            world.warnings.push_back(std::string("door ") + static_cast<char>(k - 'a' + 'A') + " has no matching key");
        }
    }
    return world;
}

std::string render_grid(const GridWorld &world) {
    std::string out;
    out.reserve(static_cast<std::size_t>((world.width + 1) * world.height));
    std::map<Cell, char> agent_chars;
    for (const auto &[id, c] : world.agents) agent_chars[c] = static_cast<char>('0' + id);
    const bool implicit_start = !world.agents.empty() && agent_chars.contains(world.start);
    for (int y = 0; y < world.height; ++y) {
        for (int x = 0; x < world.width; ++x) {
            const Cell c{x, y};
            char ch = '.';
            if (world.walls.contains(c)) ch = '#';
            else if (auto k = world.keys.find(c); k != world.keys.end()) ch = k->second;
            else if (auto d = world.doors.find(c); d != world.doors.end()) ch = static_cast<char>(d->second - 'a' + 'A');
            else if (auto a = agent_chars.find(c); a != agent_chars.end()) ch = a->second;
            if (c == world.goal) ch = 'G';
            else if (c == world.start && !implicit_start) ch = 'S';
            out += ch;
        }
        out += '\n';
    }
    return out;
}

std::string normalize_grid_text(std::string_view text) {
    std::string out;
    for (auto line : split_lines(text)) {
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
        out += line;
        out += '\n';
    }
    while (out.size() >= 2 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n') out.pop_back();
    return out;
}

std::string grid_digest(const GridWorld &world) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : render_grid(world)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t CompiledEnv::movement_rule_count() const {
    std::size_t n = 0;
    for (const auto &r : rules) n += r.action && is_move(*r.action);
    return n;
}

std::size_t CompiledEnv::pickup_rule_count() const {
    std::size_t n = 0;
    for (const auto &r : rules) n += r.action == Action::Pickup;
    return n;
}

CompiledEnv compile_rules(const GridWorld &world) {
    CompiledEnv env;
    auto add = [&](std::vector<Proposition> ante, Proposition cons, Action action) {
        const auto id = static_cast<RuleId>(env.rules.size());
        env.rules.push_back(make_rule(id, std::move(ante), std::move(cons), action));
        env.action_map.emplace(id, action);
    };
    for (int y = 0; y < world.height; ++y) {
        for (int x = 0; x < world.width; ++x) {
            const Cell source{x, y};
            if (world.is_wall(source)) continue;
            for (const Action dir : kMoves) {
                const Cell target = step_cell(source, dir);
                if (!world.in_bounds(target) || world.is_wall(target)) continue;
                std::vector<Proposition> ante{Proposition::at(source)};
                if (auto door = world.doors.find(target); door != world.doors.end())
                    ante.push_back(Proposition::has_key(door->second));
                add(std::move(ante), Proposition::at(target), dir);
            }
            if (auto key = world.keys.find(source); key != world.keys.end())
                add({Proposition::at(source)}, Proposition::has_key(key->second), Action::Pickup);
        }
    }
    env.initial.insert(Proposition::at(world.start));
    env.goal_prop = Proposition::at(world.goal);
    return env;
}

}  // namespace proofplan
