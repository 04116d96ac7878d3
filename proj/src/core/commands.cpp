#include "core/commands.hpp"

#include <charconv>

#include <json.hpp>

#include "core/audit.hpp"
#include "core/error.hpp"
#include "core/report.hpp"
#include "core/weights_io.hpp"

namespace farkasnet {

namespace {

using nlohmann::json;

Point2 point_from(Config& cfg, const std::string& key, Point2 fallback) {
  const auto v = cfg.get_doubles(key, {fallback[0], fallback[1]});
  if (v.size() != 2) throw UsageError("config key '" + key + "' needs two numbers");
  return {v[0], v[1]};
}

// Layers whose weights blew up to inf/nan are reported but not counted.
std::size_t count_farkas_failures(const std::vector<LayerAudit>& audits) {
  std::size_t n = 0;
  for (const auto& a : audits) n += (a.farkas && !a.non_finite && !a.certified) ? 1 : 0;
  return n;
}

void reject_unused(const Config& cfg) {
  const auto unused = cfg.unused_keys();
  if (unused.empty()) return;
  std::string list;
  for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
  throw UsageError("unknown config keys: " + list);
}

struct Output {
  std::string dir;
  CommandResult result;

  void write(const std::string& name, const std::string& text) {
    const std::string path = join_path(dir, name);
    write_text_file(path, text);
    result.files.push_back(path);
  }
};

// ---------------------------------------------------------------------------

void toy2d(Config& cfg, Output& out) {
  Toy2dConfig tc;
  tc.seed = cfg.get_uint("seed", tc.seed);
  tc.n_per_cluster = cfg.get_uint("toy2d.n_per_cluster", tc.n_per_cluster);
  tc.std = cfg.get_double("toy2d.std", tc.std);
  tc.center_a = point_from(cfg, "toy2d.center_a", tc.center_a);
  tc.center_b = point_from(cfg, "toy2d.center_b", tc.center_b);
  tc.swap_labels = cfg.get_bool("toy2d.swap_labels", tc.swap_labels);
  tc.spread_degrees = cfg.get_double("toy2d.spread_degrees", tc.spread_degrees);
  tc.farkas = farkas_from_config(cfg, tc.farkas);
  tc.sgd = sgd_from_config(cfg, tc.sgd);

  reject_unused(cfg);
  const Toy2dReport rep = run_toy2d(tc);
  out.write("toy2d_plain.csv", epoch_csv(rep.plain));
  out.write("toy2d_farkas.csv", epoch_csv(rep.farkas));
  json j;
  j["command"] = "toy2d";
  j["seed"] = tc.seed;
  j["unobserved_at_init"] = rep.unobserved_at_init;
  j["plain_accuracy"] = rep.plain_accuracy;
  j["farkas_accuracy"] = rep.farkas_accuracy;
  j["farkas_first_perfect_epoch"] = rep.farkas_first_perfect_epoch;
  j["plain"] = run_summary_json(rep.plain);
  j["farkas"] = run_summary_json(rep.farkas);
  out.result.violations += count_farkas_failures(rep.farkas.margins);
  out.result.summary = j.dump(2);
  out.write("toy2d_summary.json", out.result.summary + "\n");
}

void born_dead(Config& cfg, Output& out) {
  BornDeadConfig bc;
  bc.seed = cfg.get_uint("seed", bc.seed);
  const auto depths = cfg.get_uints("born_dead.depths", {1, 2, 5, 10, 20, 30});
  bc.depths.assign(depths.begin(), depths.end());
  bc.width = cfg.get_uint("born_dead.width", bc.width);
  bc.input_dim = cfg.get_uint("born_dead.input_dim", bc.input_dim);
  bc.trials = cfg.get_uint("born_dead.trials", bc.trials);
  bc.probes = cfg.get_uint("born_dead.probes", bc.probes);
  bc.init = init_from_config(cfg, bc.init);
  bc.farkas = farkas_from_config(cfg, bc.farkas);
  bc.jobs = static_cast<unsigned>(cfg.get_uint("jobs", 1));

  reject_unused(cfg);
  const auto rows = run_born_dead(bc);
  std::string csv = "depth,trials,plain_dead,plain_fraction,farkas_dead,farkas_fraction,premise_holds,mean_premise_p\n";
  json table = json::array();
  for (const auto& r : rows) {
    csv += std::to_string(r.depth) + "," + std::to_string(r.trials) + "," + std::to_string(r.plain_dead) + "," +
           format_double(r.plain_fraction()) + "," + std::to_string(r.farkas_dead) + "," +
           format_double(r.farkas_fraction()) + "," + std::to_string(r.premise_holds) + "," +
           format_double(r.mean_premise_p) + "\n";
    table.push_back({{"depth", r.depth},
                     {"trials", r.trials},
                     {"plain_fraction", r.plain_fraction()},
                     {"farkas_fraction", r.farkas_fraction()},
                     {"premise_holds", r.premise_holds},
                     {"mean_premise_p", r.mean_premise_p}});
    out.result.violations += r.farkas_dead;
  }
  out.write("born_dead.csv", csv);
  json j{{"command", "born-dead"}, {"seed", bc.seed}, {"width", bc.width}, {"init", to_string(bc.init.kind)},
         {"rows", table}};
  out.result.summary = j.dump(2);
  out.write("born_dead_summary.json", out.result.summary + "\n");
}

void norm_check(Config& cfg, Output& out) {
  NormCheckConfig nc;
  nc.seed = cfg.get_uint("seed", nc.seed);
  nc.trials = cfg.get_uint("norm_check.trials", nc.trials);
  nc.max_rows = cfg.get_uint("norm_check.max_rows", nc.max_rows);
  nc.max_cols = cfg.get_uint("norm_check.max_cols", nc.max_cols);
  reject_unused(cfg);
  const NormCheckReport r = run_norm_stability(nc);
  json j{{"command", "norm-check"},
         {"seed", nc.seed},
         {"trials", r.trials},
         {"mean_weight_ok", r.mean_weight_ok},
         {"mean_bias_ok", r.mean_bias_ok},
         {"sum_weight_increased", r.sum_weight_increased},
         {"worst_mean_ratio", r.worst_mean_ratio},
         {"worst_sum_ratio", r.worst_sum_ratio},
         {"counterexample",
          {{"trainable_norm", r.counterexample_trainable_norm},
           {"sum_norm", r.counterexample_sum_norm},
           {"mean_norm", r.counterexample_mean_norm}}}};
  if (r.mean_weight_ok != r.trials) out.result.violations += r.trials - r.mean_weight_ok;
  if (r.mean_bias_ok != r.trials) out.result.violations += r.trials - r.mean_bias_ok;
  if (!(r.counterexample_sum_norm > r.counterexample_trainable_norm)) ++out.result.violations;
  out.result.summary = j.dump(2);
  out.write("norm_check_summary.json", out.result.summary + "\n");
}

void compare(Config& cfg, Output& out) {
  CompareConfig cc;
  cc.seed = cfg.get_uint("seed", cc.seed);
  cc.num_seeds = cfg.get_uint("compare.seeds", cc.num_seeds);
  cc.depth = cfg.get_uint("compare.depth", cc.depth);
  cc.width = cfg.get_uint("compare.width", cc.width);
  std::vector<std::string> names;
  for (Variant v : cc.variants) names.push_back(to_string(v));
  cc.variants.clear();
  for (const auto& n : cfg.get_strings("compare.variants", names)) cc.variants.push_back(parse_variant(n));
  cc.learning_rates = cfg.get_doubles("compare.learning_rates", cc.learning_rates);
  cc.data = data_from_config(cfg, cc.data);
  cc.init = init_from_config(cfg, cc.init);
  cc.farkas = farkas_from_config(cfg, cc.farkas);
  cc.sgd = sgd_from_config(cfg, cc.sgd);
  cc.jobs = static_cast<unsigned>(cfg.get_uint("jobs", 1));
  if (cc.variants.empty() || cc.learning_rates.empty()) throw UsageError("compare needs variants and learning rates");

  reject_unused(cfg);
  const auto runs = run_small_compare(cc);
  std::string table = "variant,learning_rate,seed,epochs,final_train_loss,final_train_err,final_test_err,diverged,born_dead\n";
  json list = json::array();
  for (const auto& run : runs) {
    const std::string tag = to_string(run.variant) + "_lr" + format_double(run.learning_rate) + "_seed" +
                            std::to_string(run.seed);
    out.write("compare_" + tag + ".csv", epoch_csv(run.report));
    const EpochMetrics& f = run.report.final_metrics();
    table += to_string(run.variant) + "," + format_double(run.learning_rate) + "," + std::to_string(run.seed) + "," +
             std::to_string(run.report.epochs.size()) + "," + format_double(f.train_loss) + "," +
             format_double(f.train_err) + "," + format_double(f.test_err) + "," +
             (run.report.diverged ? "1" : "0") + "," + (run.report.born_dead_at_init ? "1" : "0") + "\n";
    json r = run_summary_json(run.report);
    r["variant"] = to_string(run.variant);
    r["learning_rate"] = run.learning_rate;
    list.push_back(std::move(r));
    out.result.violations += count_farkas_failures(run.report.margins);
  }
  out.write("compare_table.csv", table);
  json j{{"command", "compare"}, {"runs", list}};
  out.result.summary = j.dump(2);
  out.write("compare_summary.json", out.result.summary + "\n");
}

void train(Config& cfg, Output& out) {
  const std::uint64_t seed = cfg.get_uint("seed", 0);
  const DataSplit data = load_data(data_from_config(cfg, DataConfig{}), seed);
  const std::string arch = cfg.get_string("net.arch", "mlp");
  const std::size_t depth = cfg.get_uint("net.depth", 4);
  const std::size_t width = cfg.get_uint("net.width", 16);
  const InitScheme init = init_from_config(cfg, InitScheme::default_uniform());
  const FarkasOptions fo = farkas_from_config(cfg, FarkasOptions{});
  const std::size_t classes = data.train.num_classes;

  NetworkSpec spec;
  if (arch == "mlp") {
    const Variant v = parse_variant(cfg.get_string("net.variant", "farkas"));
    spec = mlp_spec(v, data.train.features(), width, depth, classes, init, fo, seed);
  } else if (arch == "farkas_resnet") {
    spec.init = init;
    spec.seed = seed;
    spec.layers.push_back(FarkasDenseSpec{data.train.features(), width, fo});
    for (std::size_t k = 0; k < depth; ++k) spec.layers.push_back(FarkasResidualSpec{width + k, width, fo});
    spec.layers.push_back(DenseSpec{width + depth, classes, true});
  } else {
    throw UsageError("unknown net.arch '" + arch + "' (mlp, farkas_resnet)");
  }
  const SgdConfig sgd = sgd_from_config(cfg, SgdConfig{});
  const std::string model_name = cfg.get_string("train.model_file", "model.fknw");
  reject_unused(cfg);
  Network net = Network::build(spec);
  const RunReport rep = train_network(net, data.train, data.test, sgd, seed, arch);

  out.write("train.csv", epoch_csv(rep));
  const std::string model = join_path(out.dir, model_name);
  save_weights(net, model);
  out.result.files.push_back(model);
  json j = run_summary_json(rep);
  j["command"] = "train";
  j["parameters"] = net.parameter_count();
  out.result.violations += count_farkas_failures(rep.margins);
  out.result.summary = j.dump(2);
  out.write("train_summary.json", out.result.summary + "\n");
}

void verify(Config& cfg, Output& out) {
  const std::string path = cfg.get_string("verify.weights", "");
  if (path.empty()) throw UsageError("verify needs a weights file");
  reject_unused(cfg);
  const WeightsFile file = load_weights(path);
  const auto audits = audit_network(file.network, &file.lambdas);
  std::size_t flagged = 0;
  json flagged_entries = json::array();
  for (const auto& a : audits) {
    if (!a.certified) {
      ++flagged;
      flagged_entries.push_back(a.entry);
    }
  }
  json j{{"command", "verify"},
         {"weights", path},
         {"layers", audit_json(audits)},
         {"audited", audits.size()},
         {"flagged", flagged_entries}};
  out.result.violations += flagged;
  out.result.summary = j.dump(2);
  if (!out.dir.empty()) out.write("verify_report.json", out.result.summary + "\n");
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"toy2d", "born-dead", "norm-check", "compare", "train", "verify"};
  return names;
}

std::vector<ScheduleStep> parse_schedule(const std::string& text, std::size_t epochs) {
  if (text == "default") return default_schedule(epochs);
  if (text == "none" || text.empty()) return {};
  std::vector<ScheduleStep> steps;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("schedule entry '" + item + "' is not epoch:multiplier");
    ScheduleStep s;
    const char* b = item.data();
    auto r1 = std::from_chars(b, b + colon, s.epoch);
    auto r2 = std::from_chars(b + colon + 1, b + item.size(), s.multiplier);
    if (r1.ec != std::errc() || r1.ptr != b + colon || r2.ec != std::errc() || r2.ptr != b + item.size() ||
        !(s.multiplier > 0.0)) {
      throw UsageError("bad schedule entry '" + item + "'");
    }
    steps.push_back(s);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return steps;
}

SgdConfig sgd_from_config(Config& cfg, const SgdConfig& d) {
  SgdConfig s;
  s.learning_rate = cfg.get_double("sgd.learning_rate", d.learning_rate);
  s.momentum = cfg.get_double("sgd.momentum", d.momentum);
  s.weight_decay = cfg.get_double("sgd.weight_decay", d.weight_decay);
  s.epochs = cfg.get_uint("sgd.epochs", d.epochs);
  s.batch_size = cfg.get_uint("sgd.batch_size", d.batch_size);
  s.schedule = parse_schedule(cfg.get_string("sgd.schedule", "default"), s.epochs);
  validate(s);
  return s;
}

FarkasOptions farkas_from_config(Config& cfg, const FarkasOptions& d) {
  FarkasOptions o;
  o.aggregation = parse_aggregation(cfg.get_string("farkas.aggregation", to_string(d.aggregation)));
  o.cutoff = cfg.get_double("farkas.cutoff", d.cutoff);
  o.epsilon = cfg.get_double("farkas.epsilon", d.epsilon);
  o.activation.kind = parse_activation_kind(cfg.get_string("farkas.activation", to_string(d.activation.kind)));
  o.activation.alpha = cfg.get_double("farkas.activation_alpha", d.activation.alpha);
  if (!(o.epsilon > 0.0)) throw UsageError("farkas.epsilon must be positive");
  return o;
}

InitScheme init_from_config(Config& cfg, const InitScheme& d) {
  InitScheme s;
  s.kind = parse_init_kind(cfg.get_string("init.kind", to_string(d.kind)));
  s.sigma = cfg.get_double("init.sigma", d.sigma);
  s.sigma_w = cfg.get_double("init.sigma_w", d.sigma_w);
  s.bias_value = cfg.get_double("init.bias", d.bias_value);
  return s;
}

DataConfig data_from_config(Config& cfg, const DataConfig& d) {
  DataConfig c;
  c.kind = cfg.get_string("data.kind", d.kind);
  c.n_per_class = cfg.get_uint("data.n_per_class", d.n_per_class);
  c.radii = cfg.get_doubles("data.radii", d.radii);
  c.noise = cfg.get_double("data.noise", d.noise);
  c.train_path = cfg.get_string("data.train", d.train_path);
  c.train_labels_path = cfg.get_string("data.train_labels", d.train_labels_path);
  c.test_path = cfg.get_string("data.test", d.test_path);
  c.test_labels_path = cfg.get_string("data.test_labels", d.test_labels_path);
  c.test_fraction = cfg.get_double("data.test_fraction", d.test_fraction);
  c.standardize = cfg.get_bool("data.standardize", d.standardize);
  return c;
}

CommandResult run_command(const std::string& command, Config& cfg, const std::string& out_dir) {
  Output out{out_dir, {}};
  if (command != "verify" || !out_dir.empty()) {
    if (out_dir.empty()) throw UsageError("an output directory is required");
    ensure_directory(out_dir);
  }
  if (command == "toy2d") {
    toy2d(cfg, out);
  } else if (command == "born-dead") {
    born_dead(cfg, out);
  } else if (command == "norm-check") {
    norm_check(cfg, out);
  } else if (command == "compare") {
    compare(cfg, out);
  } else if (command == "train") {
    train(cfg, out);
  } else if (command == "verify") {
    verify(cfg, out);
  } else {
    throw UsageError("unknown command '" + command + "'");
  }
  if (!out_dir.empty()) {
    const std::string name = command + "_config.txt";
    out.write(name, cfg.to_text());
  }
  return out.result;
}

}  // namespace farkasnet
