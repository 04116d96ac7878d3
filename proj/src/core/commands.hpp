#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/experiments.hpp"

namespace farkasnet {

struct CommandResult {
  // Invariant violations found during the run (uncertified Farkas layers,
  // a born-dead Farkas net, a failed norm bound, a flagged layer in verify).
  std::size_t violations = 0;
  std::string summary;  // JSON text
  std::vector<std::string> files;
};

// Commands: toy2d, born-dead, norm-check, compare, train, verify. Settings
// are read from `cfg` (defaults are filled in). Output files go to
// `out_dir`, together with "<command>_config.txt", the resolved settings.
// verify reads "verify.weights"; its out_dir may be empty.
CommandResult run_command(const std::string& command, Config& cfg, const std::string& out_dir);

const std::vector<std::string>& command_names();

// Helpers shared with the tests.
SgdConfig sgd_from_config(Config& cfg, const SgdConfig& defaults);
FarkasOptions farkas_from_config(Config& cfg, const FarkasOptions& defaults);
InitScheme init_from_config(Config& cfg, const InitScheme& defaults);
DataConfig data_from_config(Config& cfg, const DataConfig& defaults);

// "default" (x0.1 at 50% and 75%), "none", or "epoch:multiplier,...".
std::vector<ScheduleStep> parse_schedule(const std::string& text, std::size_t epochs);

}  // namespace farkasnet
