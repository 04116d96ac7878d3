#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "core/weights_io.hpp"
#include "support/tempdir.hpp"

using namespace farkasnet;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + FARKASNET_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("toy2d exits cleanly and writes its files") {
  fkt::TempDir dir("cli_toy");
  CHECK(run("toy2d --seed 7 --epochs 200 --quiet --out " + dir.str()) == 0);
  CHECK(std::filesystem::exists(dir.file("toy2d_farkas.csv")));
  CHECK(std::filesystem::exists(dir.file("toy2d_config.txt")));
  // The echoed config alone reproduces the run.
  fkt::TempDir again("cli_toy2");
  CHECK(run("toy2d --quiet --config " + dir.file("toy2d_config.txt") + " --out " + again.str()) == 0);
  CHECK(fkt::read_bytes(dir.file("toy2d_farkas.csv")) == fkt::read_bytes(again.file("toy2d_farkas.csv")));
}

TEST_CASE("usage problems exit 2") {
  fkt::TempDir dir("cli_usage");
  CHECK(run("toy2d --frobnicate --out " + dir.str()) == 2);
  CHECK(run("") == 2);
  CHECK(run("launch") == 2);
  CHECK(run("verify") == 2);
  CHECK(run("verify " + dir.file("missing.fknw")) == 2);
  CHECK(run("toy2d --set sgd.epoch=3 --out " + dir.str()) == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("verify exit codes") {
  fkt::TempDir dir("cli_verify");
  fkt::write_text(dir.file("train.cfg"), "sgd.epochs = 3\nnet.depth = 2\nnet.width = 6\ndata.n_per_class = 20\n");
  REQUIRE(run("train " + dir.file("train.cfg") + " --quiet --out " + dir.str()) == 0);
  CHECK(run("verify " + dir.file("model.fknw")) == 0);
  CHECK(run("verify " + dir.file("model.fknw") + " --out " + dir.str()) == 0);
  CHECK(std::filesystem::exists(dir.file("verify_report.json")));

  Network dead(std::vector<Layer>{DenseLayer{Tensor::matrix({{-1}}), Tensor::vector({-1}), true},
                                  ActivationLayer{Activation::relu()}});
  save_weights(dead, dir.file("dead.fknw"));
  CHECK(run("verify " + dir.file("dead.fknw")) == 1);

  fkt::write_text(dir.file("junk.fknw"), "not a weights file");
  CHECK(run("verify " + dir.file("junk.fknw")) == 2);
}
