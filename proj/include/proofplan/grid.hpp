#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "proofplan/logic.hpp"

namespace proofplan {

struct GridWorld {
    int width = 0;
    int height = 0;
    std::set<Cell> walls;
    std::map<Cell, KeyId> keys;
    std::map<Cell, KeyId> doors;  // door letter stored lowercase, matching its key
    Cell start;
    Cell goal;
    std::map<AgentId, Cell> agents;
    std::vector<std::string> warnings;

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool is_wall(Cell c) const { return walls.contains(c); }
    std::size_t cell_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::set<KeyId> key_ids() const;
};

class GridParseError : public std::runtime_error {
public:
    enum class Kind { Empty, RaggedRows, UnknownChar, MissingStart, MissingGoal, DuplicateStart, DuplicateGoal, DuplicateAgent };

    GridParseError(Kind kind, int line, int column, const std::string &message);

    Kind kind() const { return kind_; }
    int line() const { return line_; }      // 1-based; 0 when not positional
    int column() const { return column_; }  // 1-based; 0 when not positional

private:
    Kind kind_;
    int line_;
    int column_;
};

/// Parses the grid DSL: `#` wall, `.` floor, `S` start, `G` goal, `a`-`z` key,
/// `A`-`Z` door, `0`-`9` agent start. LF and CRLF line endings are accepted and
/// trailing blank lines ignored. Grids with agents but no `S` start at the
/// lowest-numbered agent.
GridWorld parse_grid(std::string_view text);

/// Inverse of parse_grid, one row per line with a trailing newline.
std::string render_grid(const GridWorld &world);

/// Strips CR, trailing whitespace on each line, and trailing blank lines.
std::string normalize_grid_text(std::string_view text);

/// FNV-1a over the normalized rendering, as 16 hex digits.
std::string grid_digest(const GridWorld &world);

struct CompiledEnv {
    std::vector<Rule> rules;  // id == index
    KnowledgeBase initial;
    Proposition goal_prop = Proposition::atom("goal");
    std::map<RuleId, Action> action_map;

    std::size_t movement_rule_count() const;
    std::size_t pickup_rule_count() const;
};

/// Emits, for every non-wall cell in row-major order, one movement rule per
/// cardinal direction (N, E, S, W) into an in-bounds non-wall neighbour. Entry
/// into a door cell also requires the matching HasKey. Key cells additionally
/// get an `At(cell) -> HasKey(k)` pickup rule after their moves.
CompiledEnv compile_rules(const GridWorld &world);

}  // namespace proofplan
