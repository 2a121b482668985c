#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "proofplan/grid.hpp"
#include "proofplan/logic.hpp"
#include "proofplan/qlearning.hpp"

namespace proofplan {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kError = 1;       // usage, parse, or config error
inline constexpr int kNoPlan = 2;      // unsolvable or no plan found
}  // namespace exit_code

struct Console {
    std::ostream &out;
    std::ostream &err;
};

/// `haskey:a,at:8,8,goal` style subgoal list. `goal` names the world's goal cell.
std::vector<Proposition> parse_subgoals(std::string_view flag, const GridWorld &world);

/// Loads hyperparameters from an optional JSON config, then applies the
/// PROOFPLAN_SEED environment override.
Hyperparams load_hyperparams(const std::optional<std::filesystem::path> &config);

int cmd_plan(const std::filesystem::path &grid, const std::filesystem::path &out_dir, Console io);
int cmd_train(const std::filesystem::path &grid, const std::optional<std::filesystem::path> &config,
              const std::filesystem::path &out_dir, Console io);
int cmd_compare(const std::filesystem::path &grid, const std::optional<std::filesystem::path> &config,
                const std::filesystem::path &out_dir, Console io);
int cmd_chain(const std::filesystem::path &grid, std::string_view subgoals, const std::filesystem::path &out_dir,
              Console io);
int cmd_worlds(const std::filesystem::path &worlds_dir, const std::filesystem::path &out_dir, Console io);
int cmd_learn(const std::filesystem::path &grid, std::size_t budget, std::uint64_t seed,
              const std::filesystem::path &out_dir, Console io);
int cmd_multi(const std::filesystem::path &scenario, const std::filesystem::path &out_dir, Console io);

/// Full command line entry point (CLI11).
int run_cli(int argc, char **argv);

}  // namespace proofplan
