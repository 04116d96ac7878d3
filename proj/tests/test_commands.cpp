#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "core/commands.hpp"
#include "core/error.hpp"
#include "core/weights_io.hpp"
#include "support/tempdir.hpp"

using namespace farkasnet;

namespace {

struct Case {
  std::string command;
  std::string settings;
};

const std::vector<Case>& small_cases() {
  static const std::vector<Case> cases{
      {"toy2d", "sgd.epochs = 20\ntoy2d.n_per_cluster = 30\n"},
      {"born-dead", "born_dead.depths = 1, 10\nborn_dead.trials = 20\nborn_dead.probes = 20\n"},
      {"norm-check", "norm_check.trials = 50\n"},
      {"compare", "compare.seeds = 2\ncompare.depth = 3\ncompare.width = 6\nsgd.epochs = 3\n"
                  "data.n_per_class = 30\ncompare.learning_rates = 0.01\n"},
      {"train", "sgd.epochs = 4\nnet.depth = 2\nnet.width = 6\ndata.n_per_class = 30\n"},
      {"train", "sgd.epochs = 2\nnet.arch = farkas_resnet\nnet.depth = 2\nnet.width = 4\n"
                "data.kind = rings\ndata.n_per_class = 20\n"},
  };
  return cases;
}

std::size_t count_lines(const std::string& text) { return std::size_t(std::count(text.begin(), text.end(), '\n')); }

std::string base(const std::string& path) { return std::filesystem::path(path).filename().string(); }

}  // namespace

TEST_CASE("every command writes its outputs and a config echo") {
  for (const auto& c : small_cases()) {
    INFO(c.command);
    fkt::TempDir dir("cmd");
    Config cfg = Config::parse(c.settings);
    const CommandResult r = run_command(c.command, cfg, dir.str());
    CHECK(r.violations == 0);
    CHECK_FALSE(r.summary.empty());
    CHECK_NOTHROW((void)nlohmann::json::parse(r.summary));
    REQUIRE_FALSE(r.files.empty());
    for (const auto& f : r.files) CHECK(std::filesystem::exists(f));
    CHECK(base(r.files.back()) == c.command + "_config.txt");

    // Re-running from the echoed settings gives the same bytes.
    fkt::TempDir again("cmd2");
    Config echo = Config::load(r.files.back());
    const CommandResult r2 = run_command(c.command, echo, again.str());
    REQUIRE(r2.files.size() == r.files.size());
    for (std::size_t i = 0; i < r.files.size(); ++i) {
      INFO(base(r.files[i]));
      CHECK(base(r2.files[i]) == base(r.files[i]));
      CHECK(fkt::read_bytes(r2.files[i]) == fkt::read_bytes(r.files[i]));
    }
  }
}

TEST_CASE("epoch CSVs have a header and one row per epoch") {
  fkt::TempDir dir("csv");
  Config cfg = Config::parse("sgd.epochs = 7\nnet.depth = 2\nnet.width = 5\ndata.n_per_class = 20\n");
  const CommandResult r = run_command("train", cfg, dir.str());
  const std::string csv = fkt::read_text(dir.file("train.csv"));
  CHECK(csv.rfind("epoch,train_loss,train_err,test_err\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 7);
  CHECK(csv.find("time") == std::string::npos);

  Config v;
  v.set("verify.weights", dir.file("model.fknw"));
  const CommandResult vr = run_command("verify", v, "");
  CHECK(vr.violations == 0);
  const auto j = nlohmann::json::parse(vr.summary);
  CHECK(j["flagged"].empty());
  CHECK(j["audited"].get<std::size_t>() == 2);  // hidden layers; the read-out is skipped
}

TEST_CASE("verify flags a dead plain layer") {
  fkt::TempDir dir("verify");
  Network net(std::vector<Layer>{DenseLayer{Tensor::matrix({{-1}}), Tensor::vector({-1}), true},
                                 ActivationLayer{Activation::relu()}});
  save_weights(net, dir.file("dead.fknw"));
  Config cfg;
  cfg.set("verify.weights", dir.file("dead.fknw"));
  const CommandResult r = run_command("verify", cfg, dir.str());
  CHECK(r.violations == 1);
  CHECK(nlohmann::json::parse(r.summary)["flagged"] == nlohmann::json::array({0}));
}

TEST_CASE("usage errors") {
  fkt::TempDir dir("usage");
  Config typo = Config::parse("sgd.epoch = 3\n");
  CHECK_THROWS_AS(run_command("train", typo, dir.str()), UsageError);
  Config empty;
  CHECK_THROWS_AS(run_command("fly", empty, dir.str()), UsageError);
  CHECK_THROWS_AS(run_command("toy2d", empty, ""), UsageError);
  Config none;
  CHECK_THROWS_AS(run_command("verify", none, ""), UsageError);
  Config arch = Config::parse("net.arch = cnn\n");
  CHECK_THROWS_AS(run_command("train", arch, dir.str()), UsageError);
  Config eps = Config::parse("farkas.epsilon = 0\n");
  CHECK_THROWS_AS(run_command("toy2d", eps, dir.str()), UsageError);
  Config missing;
  missing.set("verify.weights", dir.file("nope"));
  CHECK_THROWS_AS(run_command("verify", missing, ""), IoError);
}

TEST_CASE("schedule parsing") {
  CHECK(parse_schedule("none", 10).empty());
  const auto d = parse_schedule("default", 200);
  REQUIRE(d.size() == 2);
  CHECK(d[0].epoch == 100);
  CHECK(d[1].epoch == 150);
  const auto c = parse_schedule("3:0.5,7:0.25", 10);
  REQUIRE(c.size() == 2);
  CHECK(c[1].epoch == 7);
  CHECK(c[1].multiplier == 0.25);
  CHECK_THROWS_AS(parse_schedule("3", 10), UsageError);
  CHECK_THROWS_AS(parse_schedule("3:-1", 10), UsageError);
  CHECK_THROWS_AS(parse_schedule("a:1", 10), UsageError);
}
