#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "cli_harness.hpp"
#include "viat/io.hpp"
#include "viat/toy_suite.hpp"

using namespace viat;
using namespace viat::cli_test;

namespace {

// 8x8 renders keep every command well under a second.
const char* kSmall = R"({
  "render": {"width": 8, "height": 8, "samples": 8},
  "pretrain": {"epochs": 2, "views_per_scene": 6, "holdout_views": 2},
  "attack": {"iterations": 3, "samples": 8, "components": 2, "eval_samples": 50, "grid_views": 4},
  "smoothing": {"n": 60, "n0": 20},
  "train": {"epochs": 2, "initial_iterations": 2, "epoch_iterations": 1, "ratio_clean": 1,
            "clean_per_batch": 4, "batches_per_epoch": 2, "eval_samples": 4, "eval_clean_views": 2}
})";

// Toy suite with 2 classes x 2 objects plus a standard checkpoint.
fs::path fixture(const std::string& name) {
  const fs::path dir = scratch(name);
  write_text(dir / "small.json", kSmall);
  REQUIRE(run("make-toy-suite --classes 2 --objects 2 --out suite", dir).code == 0);
  REQUIRE(run("train --config small.json --mode standard --scenes suite --out std", dir).code == 0);
  return dir;
}

nlohmann::json header_config(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# config: ", 0) == 0) return nlohmann::json::parse(line.substr(10));
  }
  return nullptr;
}

}  // namespace

TEST_CASE("make-toy-suite writes loadable scenes with headers") {
  const fs::path dir = scratch("cli_toy");
  REQUIRE(run("make-toy-suite --out suite --seed 3", dir).code == 0);
  const auto scenes = load_scene_dir(dir / "suite");
  CHECK(scenes.size() == 16);
  for (const auto& [name, text] : tree(dir / "suite")) {
    CHECK(text.rfind("# tool: viat-toolkit", 0) == 0);
    CHECK(text.find("# seed: 3\n") != std::string::npos);
  }
  CHECK(run("make-toy-suite --classes 9 --out bad", dir).code == 2);
}

TEST_CASE("attack writes its artifacts") {
  const fs::path dir = fixture("cli_attack");
  const Result r = run("attack --config small.json --scene suite/class0_rod_obj0.json --checkpoint std/final.ckpt --out a",
                       dir);
  REQUIRE(r.code == 0);
  for (const char* f : {"psi.txt", "trace.csv", "summary.txt", "samples.ppm"}) CHECK(fs::exists(dir / "a" / f));
  const auto trace = csv_rows(dir / "a" / "trace.csv");
  REQUIRE(trace.size() == 5);
  CHECK(trace[0] == std::vector<std::string>{"iter", "loss_mean", "entropy", "max_omega"});
  const double asr = summary_value(dir / "a" / "summary.txt", "attack_success_rate");
  CHECK(asr >= 0.0);
  CHECK(asr <= 1.0);
  // The PPM keeps its binary layout after the comment header.
  const std::string ppm = slurp(dir / "a" / "samples.ppm");
  CHECK(ppm.rfind("P6\n# tool: viat-toolkit", 0) == 0);
}

TEST_CASE("validation failures exit with 2 and name the problem") {
  const fs::path dir = fixture("cli_errors");
  Result r = run("attack --config small.json --scene suite/missing.json --checkpoint std/final.ckpt --out a", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("suite/missing.json") != std::string::npos);

  r = run("certify --config small.json --scenes nowhere --checkpoint std/final.ckpt --out c", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("nowhere") != std::string::npos);

  write_text(dir / "unknown.json", R"({"attack": {"iterationz": 3}})");
  r = run("attack --config unknown.json --planted four-bump --out a", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("attack.iterationz") != std::string::npos);

  write_text(dir / "broken.json", "{ not json");
  CHECK(run("attack --config broken.json --planted four-bump --out a", dir).code == 2);
  CHECK(run("attack --planted four-bump --t 0 --out a", dir).code == 2);
  CHECK(run("attack --planted five-bump --out a", dir).code == 2);
  CHECK(run("attack --scene suite/class0_rod_obj0.json --checkpoint std/final.ckpt --out a", dir).code == 2);
  CHECK(run("frobnicate --out a", dir).code == 2);
  CHECK(run("attack --planted four-bump", dir).code == 2);
  CHECK(run("landscape --planted four-bump --grid 10by10 --out l", dir).code == 2);
  CHECK(run("train --config small.json --scenes suite --mode sideways --out t", dir).code == 2);
}

TEST_CASE("mode coverage on the planted landscape grows with K") {
  const fs::path dir = scratch("cli_coverage");
  REQUIRE(run("attack --planted four-bump --k 1 --out k1", dir).code == 0);
  REQUIRE(run("attack --planted four-bump --k 8 --out k8", dir).code == 0);
  const double c1 = summary_value(dir / "k1" / "summary.txt", "mode_coverage");
  const double c8 = summary_value(dir / "k8" / "summary.txt", "mode_coverage");
  CHECK(c1 == 1.0);
  CHECK(c8 > c1);
}

TEST_CASE("certify defaults and summary consistency") {
  const fs::path dir = fixture("cli_certify");
  REQUIRE(run("certify --config small.json --scenes suite --checkpoint std/final.ckpt --out c", dir).code == 0);
  REQUIRE(run("certify --scenes suite --checkpoint std/final.ckpt --out d --n 1", dir).code == 2);

  // Unconfigured smoothing fields keep the library defaults.
  write_text(dir / "render_only.json", R"({"render": {"width": 8, "height": 8, "samples": 8}})");
  REQUIRE(run("certify --config render_only.json --scenes suite --checkpoint std/final.ckpt --out e", dir).code == 0);
  const auto cfg = header_config(dir / "e" / "certification.csv");
  CHECK(cfg["smoothing"]["sigma_tilde"] == 0.1);
  CHECK(cfg["smoothing"]["n"] == 1000);
  CHECK(cfg["smoothing"]["alpha"] == 0.001);

  const auto rows = csv_rows(dir / "c" / "certification.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"object_id", "class", "predicted", "pA_lower", "radius", "correct",
                                            "clip_fraction"});
  double radius_sum = 0.0, correct = 0.0;
  for (size_t i = 1; i < rows.size(); ++i) {
    const bool ok = rows[i][5] == "1";
    radius_sum += ok ? std::stod(rows[i][4]) : 0.0;
    correct += ok ? 1.0 : 0.0;
  }
  std::istringstream summary(body(dir / "c" / "summary.txt"));
  std::string acr_tag, ca_tag;
  double acr = 0.0, ca = 0.0;
  summary >> acr_tag >> acr >> ca_tag >> ca;
  CHECK(acr_tag == "ACR");
  CHECK(ca_tag == "CA");
  CHECK(acr == doctest::Approx(radius_sum / 4).epsilon(1e-8));
  CHECK(ca == doctest::Approx(correct / 4));
}

TEST_CASE("landscape grids") {
  const fs::path dir = scratch("cli_landscape");
  REQUIRE(run("landscape --planted four-bump --grid 10x10 --out small", dir).code == 0);
  const auto small = csv_rows(dir / "small" / "landscape.csv");
  CHECK(small.size() == 101);
  CHECK(small[0] == std::vector<std::string>{"psi", "phi", "loss"});

  SUBCASE("constant classifier gives a constant grid") {
    const auto scenes = make_toy_suite(2, 1);
    save_scene(scenes[0], dir / "scene.json");
    save_classifier(ClassifierParams::zeros(default_architecture(2, 8, 8)), dir / "flat.ckpt");
    write_text(dir / "r.json", R"({"render": {"width": 8, "height": 8, "samples": 4}})");
    REQUIRE(run("landscape --config r.json --scene scene.json --checkpoint flat.ckpt --grid 6x4 --out flat", dir).code == 0);
    const auto rows = csv_rows(dir / "flat" / "landscape.csv");
    REQUIRE(rows.size() == 25);
    for (size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][2]) == doctest::Approx(std::log(2.0)));
  }

  SUBCASE("planted maxima sit on the bump centers") {
    REQUIRE(run("landscape --planted four-bump --out grid", dir).code == 0);
    const auto rows = csv_rows(dir / "grid" / "landscape.csv");
    const PlantedLandscape land = four_bump_landscape();
    const double cell_psi = 360.0 / 36, cell_phi = 140.0 / 14;
    for (const PlantedBump& b : land.bumps) {
      double best = -1.0, bx = 0.0, by = 0.0;
      for (size_t i = 1; i < rows.size(); ++i) {
        const double x = std::stod(rows[i][0]), y = std::stod(rows[i][1]), l = std::stod(rows[i][2]);
        const double a = (x - b.center[kPsi]) / b.width[kPsi], c = (y - b.center[kPhi]) / b.width[kPhi];
        if (a * a + c * c <= land.membership_radius * land.membership_radius && l > best) {
          best = l;
          bx = x;
          by = y;
        }
      }
      CHECK(std::abs(bx - b.center[kPsi]) <= cell_psi);
      CHECK(std::abs(by - b.center[kPhi]) <= cell_phi);
    }
  }

  SUBCASE("other axes") {
    REQUIRE(run("landscape --planted four-bump --axes psi,theta --grid 3x2 --out pt", dir).code == 0);
    CHECK(csv_rows(dir / "pt" / "landscape.csv")[0] == std::vector<std::string>{"psi", "theta", "loss"});
    CHECK(run("landscape --planted four-bump --axes psi,psi --out bad", dir).code == 2);
    CHECK(run("landscape --planted four-bump --axes psi,roll --out bad", dir).code == 2);
  }
}

TEST_CASE("train writes per-epoch metrics and resumes byte-for-byte") {
  const fs::path dir = fixture("cli_train");
  const std::string base = "train --config small.json --scenes suite --checkpoint std/final.ckpt ";
  REQUIRE(run(base + "--out full", dir).code == 0);
  const auto metrics = csv_rows(dir / "full" / "metrics.csv");
  REQUIRE(metrics.size() == 4);
  CHECK(metrics[0] == std::vector<std::string>{"epoch", "clean_acc", "adv_acc", "mean_pool_entropy"});
  for (const char* e : {"epoch_000", "epoch_001", "epoch_002"}) {
    for (const char* f : {"classifier.ckpt", "pool.json", "metrics.csv"}) {
      CHECK(fs::exists(dir / "full" / "epochs" / e / f));
    }
  }

  // Copy the uninterrupted run up to epoch 1, then resume into it.
  fs::create_directories(dir / "resumed" / "epochs");
  for (const char* e : {"epoch_000", "epoch_001"}) {
    fs::copy(dir / "full" / "epochs" / e, dir / "resumed" / "epochs" / e, fs::copy_options::recursive);
  }
  REQUIRE(run(base + "--resume resumed/epochs/epoch_001 --out resumed", dir).code == 0);
  CHECK(tree(dir / "resumed") == tree(dir / "full"));

  CHECK(run(base + "--resume suite --out bad", dir).code == 2);
  REQUIRE(run("train --scenes suite --checkpoint std/final.ckpt --out mismatch", dir).code == 2);
}

TEST_CASE("thread count does not change outputs") {
  const fs::path dir = fixture("cli_threads");
  const std::string cmd = "certify --config small.json --scenes suite --checkpoint std/final.ckpt --out ";
  REQUIRE(run(cmd + "one", dir, "VIAT_THREADS=1").code == 0);
  REQUIRE(run(cmd + "three", dir, "VIAT_THREADS=3").code == 0);
  CHECK(tree(dir / "one") == tree(dir / "three"));
}
