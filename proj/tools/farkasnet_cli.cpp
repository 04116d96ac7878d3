#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "farkasnet/farkasnet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitError = 2;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> epochs;
  std::optional<double> lr;
  std::optional<unsigned> jobs;
  bool quiet = false;
};

struct Invocation {
  std::string command;
  Common common;
  std::string positional;  // weights file for verify, config file for train
  std::vector<std::pair<std::string, std::string>> flag_sets;
};

class ConfigHandle {
 public:
  ~ConfigHandle() { fk_config_destroy(cfg_); }
  fk_config** out() { return &cfg_; }
  fk_config* get() const { return cfg_; }

 private:
  fk_config* cfg_ = nullptr;
};

int report_error(fk_status s) {
  std::cerr << "error (" << fk_status_name(s) << "): " << fk_last_error() << "\n";
  return kExitError;
}

void add_common(CLI::App* sub, Common& c, bool with_training) {
  sub->add_option("--config", c.config_path, "key = value settings file (e.g. an echoed *_config.txt)");
  sub->add_option("--set", c.sets, "override one setting, key=value (repeatable)");
  sub->add_option("--out", c.out_dir, "output directory (default: $FARKASNET_OUT_DIR or ./farkasnet_out)");
  sub->add_option("--seed", c.seed, "global seed");
  if (with_training) {
    sub->add_option("--epochs", c.epochs, "training epochs");
    sub->add_option("--lr", c.lr, "learning rate");
  }
  sub->add_flag("--quiet", c.quiet, "do not print the JSON summary");
}

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FARKASNET_OUT_DIR"); env && *env) return env;
  return "farkasnet_out";
}

int execute(Invocation& inv) {
  ConfigHandle cfg;
  fk_status s = FK_OK;
  std::string config_path = inv.common.config_path;
  if (inv.command == "train") config_path = inv.positional;
  s = config_path.empty() ? fk_config_create(cfg.out()) : fk_config_load(config_path.c_str(), cfg.out());
  if (s != FK_OK) return report_error(s);

  const Common& c = inv.common;
  if (c.seed) inv.flag_sets.emplace_back("seed", std::to_string(*c.seed));
  if (c.epochs) inv.flag_sets.emplace_back("sgd.epochs", std::to_string(*c.epochs));
  if (c.lr) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *c.lr);
    inv.flag_sets.emplace_back(inv.command == "compare" ? "compare.learning_rates" : "sgd.learning_rate", buf);
  }
  if (c.jobs) inv.flag_sets.emplace_back("jobs", std::to_string(*c.jobs));
  if (inv.command == "verify") inv.flag_sets.emplace_back("verify.weights", inv.positional);
  for (const auto& [k, v] : inv.flag_sets) {
    if ((s = fk_config_set(cfg.get(), k.c_str(), v.c_str())) != FK_OK) return report_error(s);
  }
  for (const auto& a : c.sets) {
    if ((s = fk_config_set_assignment(cfg.get(), a.c_str())) != FK_OK) return report_error(s);
  }

  const std::string out_dir = inv.command == "verify" && c.out_dir.empty() && !std::getenv("FARKASNET_OUT_DIR")
                                  ? std::string()
                                  : resolve_out_dir(c.out_dir);
  fk_run_result* result = nullptr;
  s = fk_run(inv.command.c_str(), cfg.get(), out_dir.empty() ? nullptr : out_dir.c_str(), &result);
  if (s != FK_OK) return report_error(s);

  if (!c.quiet) std::cout << fk_run_summary(result) << "\n";
  for (std::size_t i = 0; i < fk_run_file_count(result); ++i) std::cerr << "wrote " << fk_run_file(result, i) << "\n";
  const std::size_t violations = fk_run_violations(result);
  fk_run_result_destroy(result);
  if (violations > 0) {
    std::cerr << inv.command << ": " << violations << " invariant violation(s)\n";
    return kExitViolation;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Farkas layers: training experiments and LP verification of the active-unit guarantee"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fk_version());

  Invocation inv;
  std::vector<std::uint64_t> depths;
  std::optional<std::uint64_t> width, trials, seeds, depth;

  auto* toy = app.add_subcommand("toy2d", "two clusters, one hidden from an adversarial init: plain vs Farkas");
  add_common(toy, inv.common, true);

  auto* born = app.add_subcommand("born-dead", "fraction of born-dead plain and Farkas stacks per depth");
  add_common(born, inv.common, false);
  born->add_option("--depths", depths, "depths to sample")->delimiter(',');
  born->add_option("--width", width, "units per layer");
  born->add_option("--trials", trials, "networks per depth");
  born->add_option("--jobs", inv.common.jobs, "worker threads");

  auto* norm = app.add_subcommand("norm-check", "l-infinity norm of the aggregated row, mean vs sum");
  add_common(norm, inv.common, false);
  norm->add_option("--trials", trials, "random matrices");

  auto* cmp = app.add_subcommand("compare", "plain / batchnorm / Farkas MLPs on a small dataset");
  add_common(cmp, inv.common, true);
  cmp->add_option("--seeds", seeds, "number of seeds");
  cmp->add_option("--depth", depth, "hidden layers");
  cmp->add_option("--width", width, "units per hidden layer");
  cmp->add_option("--jobs", inv.common.jobs, "worker threads");

  auto* ver = app.add_subcommand("verify", "LP audit of every layer in a weights file");
  ver->add_option("weights", inv.positional, "weights file")->required();
  ver->add_option("--out", inv.common.out_dir, "also write verify_report.json here");
  ver->add_flag("--quiet", inv.common.quiet, "do not print the JSON report");

  auto* tr = app.add_subcommand("train", "train a network described by a config file");
  tr->add_option("config", inv.positional, "settings file")->required();
  tr->add_option("--set", inv.common.sets, "override one setting, key=value (repeatable)");
  tr->add_option("--out", inv.common.out_dir, "output directory (default: $FARKASNET_OUT_DIR or ./farkasnet_out)");
  tr->add_option("--seed", inv.common.seed, "global seed");
  tr->add_option("--epochs", inv.common.epochs, "training epochs");
  tr->add_option("--lr", inv.common.lr, "learning rate");
  tr->add_flag("--quiet", inv.common.quiet, "do not print the JSON summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n";
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    std::cerr << target->help();
    return kExitError;
  }

  inv.command = app.get_subcommands().front()->get_name();
  if (!depths.empty()) {
    std::string list;
    for (auto d : depths) list += (list.empty() ? "" : ",") + std::to_string(d);
    inv.flag_sets.emplace_back("born_dead.depths", list);
  }
  const std::string prefix = inv.command == "born-dead" ? "born_dead." : inv.command == "norm-check" ? "norm_check." : "compare.";
  if (width) inv.flag_sets.emplace_back(prefix + "width", std::to_string(*width));
  if (trials) inv.flag_sets.emplace_back(prefix + "trials", std::to_string(*trials));
  if (seeds) inv.flag_sets.emplace_back("compare.seeds", std::to_string(*seeds));
  if (depth) inv.flag_sets.emplace_back("compare.depth", std::to_string(*depth));
  return execute(inv);
}
