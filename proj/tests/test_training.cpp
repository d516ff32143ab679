#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "viat/toy_suite.hpp"
#include "viat/training.hpp"

using namespace viat;

namespace {

RenderConfig tiny_render() {
  RenderConfig rc;
  rc.width = rc.height = 8;
  rc.samples = 8;
  return rc;
}

AttackConfig tiny_attack() {
  AttackConfig ac;
  ac.samples = 6;
  ac.components = 2;
  ac.entropy_samples = 16;
  ac.seed = 5;
  return ac;
}

ClassifierParams tiny_classifier(int classes) { return ClassifierParams::random(default_architecture(classes, 8, 8), 3); }

// Pool without running any attack; entries differ only in their means.
DistPool synthetic_pool(int classes, int per_class) {
  DistPool pool;
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < per_class; ++j) {
      PoolEntry e;
      e.class_id = c;
      e.object_id = j;
      e.scene_index = c * per_class + j;
      e.params = MixtureParams::initial(2, 1);
      e.params.mu.setConstant(0.01 * e.scene_index);
      e.iterations = 50;
      pool.entries.push_back(e);
    }
  }
  return pool;
}

}  // namespace

TEST_CASE("pool initialization runs the initial budget for every object") {
  const auto scenes = make_toy_suite(2, 2);
  const TrainingWorld world{scenes, ViewBounds::standard(), tiny_render(), NaturalSampler{}};
  const DistPool pool = init_dist_pool(world, tiny_classifier(2), tiny_attack(), 3);
  REQUIRE(pool.entries.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    const PoolEntry& e = pool.entries[i];
    CHECK(e.iterations == 3);
    CHECK(e.scene_index == static_cast<int>(i));
    CHECK(e.class_id == scenes[i].label);
    CHECK(e.object_id == static_cast<int>(i % 2));
    CHECK_NOTHROW(e.params.validate(world.bounds));
  }
  CHECK(pool.class_members(1) == std::vector<int>{2, 3});
  CHECK(parse_pool(dump_pool(pool)) == pool);
}

TEST_CASE("pool parse errors") {
  CHECK_THROWS_AS(parse_pool("{"), ParseError);
  CHECK_THROWS_AS(parse_pool(R"({"entries":[{"class":0}]})"), ParseError);
  CHECK_THROWS_AS(parse_pool(R"({"entries":[{"class":0,"object":0,"scene":0,"iterations":1,"K":2,)"
                             R"("omega":[1],"mu":[[0,0,0,0,0,0]],"sigma":[[1,1,1,1,1,1]]}]})"),
                  ValidationError);
}

TEST_CASE("stochastic inner update") {
  const auto scenes = make_toy_suite(2, 10);
  const TrainingWorld world{scenes, ViewBounds::standard(), tiny_render(), NaturalSampler{}};
  const DistPool pool = synthetic_pool(2, 10);
  const ClassifierParams clf = tiny_classifier(2);

  SUBCASE("half of each class") {
    std::vector<int> updated;
    const DistPool next = stochastic_inner_update(pool, world, clf, tiny_attack(), 99, 0.5, 1, &updated);
    CHECK(updated.size() == 10);
    int per_class[2] = {0, 0};
    for (int idx : updated) ++per_class[pool.entries[static_cast<size_t>(idx)].class_id];
    CHECK(per_class[0] == 5);
    CHECK(per_class[1] == 5);
    for (size_t i = 0; i < pool.entries.size(); ++i) {
      const bool was_updated = std::find(updated.begin(), updated.end(), static_cast<int>(i)) != updated.end();
      DistPool a, b;
      a.entries = {pool.entries[i]};
      b.entries = {next.entries[i]};
      if (was_updated) {
        CHECK(next.entries[i].iterations == 51);
        CHECK_FALSE(next.entries[i].params == pool.entries[i].params);
      } else {
        CHECK(dump_pool(a) == dump_pool(b));
      }
    }
  }
  SUBCASE("full fraction updates everything") {
    std::vector<int> updated;
    stochastic_inner_update(pool, world, clf, tiny_attack(), 99, 1.0, 1, &updated);
    CHECK(updated.size() == 20);
  }
  SUBCASE("same seed, same selection") {
    std::vector<int> a, b, c;
    stochastic_inner_update(pool, world, clf, tiny_attack(), 7, 0.5, 1, &a);
    stochastic_inner_update(pool, world, clf, tiny_attack(), 7, 0.5, 1, &b);
    stochastic_inner_update(pool, world, clf, tiny_attack(), 8, 0.5, 1, &c);
    CHECK(a == b);
    CHECK(a != c);
  }
  SUBCASE("fraction outside (0, 1] throws") {
    CHECK_THROWS_AS(stochastic_inner_update(pool, world, clf, tiny_attack(), 1, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(stochastic_inner_update(pool, world, clf, tiny_attack(), 1, 1.5, 1), InvalidArgument);
  }
}

TEST_CASE("distribution sharing") {
  const DistPool pool = synthetic_pool(2, 3);
  std::mt19937_64 rng(1);
  int chosen = -1;

  SUBCASE("pi = 1 always keeps the own distribution") {
    for (int i = 0; i < 200; ++i) {
      const MixtureParams p = choose_shared_dist(pool, 1, 2, 1.0, rng, &chosen);
      CHECK(chosen == 5);
      CHECK(p == pool.entries[5].params);
    }
  }
  SUBCASE("pi = 0 always takes another object of the same class") {
    for (int i = 0; i < 200; ++i) {
      choose_shared_dist(pool, 1, 2, 0.0, rng, &chosen);
      CHECK((chosen == 3 || chosen == 4));
    }
  }
  SUBCASE("pi = 0.5 frequencies") {
    const int n = 100000;
    int counts[6] = {};
    for (int i = 0; i < n; ++i) {
      choose_shared_dist(pool, 0, 1, 0.5, rng, &chosen);
      ++counts[chosen];
    }
    // Own with probability 0.5, each of the two others with 0.25.
    const double p_own = counts[1] / double(n), p0 = counts[0] / double(n), p2 = counts[2] / double(n);
    CHECK(std::abs(p_own - 0.5) < 4 * std::sqrt(0.25 / n));
    CHECK(std::abs(p0 - 0.25) < 4 * std::sqrt(0.1875 / n));
    CHECK(std::abs(p2 - 0.25) < 4 * std::sqrt(0.1875 / n));
    CHECK(counts[3] + counts[4] + counts[5] == 0);
  }
  SUBCASE("single-object class falls back to itself") {
    const DistPool lone = synthetic_pool(1, 1);
    choose_shared_dist(lone, 0, 0, 0.0, rng, &chosen);
    CHECK(chosen == 0);
  }
  SUBCASE("unknown class or object throws") {
    CHECK_THROWS_AS(choose_shared_dist(pool, 5, 0, 0.5, rng), InvalidArgument);
    CHECK_THROWS_AS(choose_shared_dist(pool, 0, 9, 0.5, rng), InvalidArgument);
  }
}

TEST_CASE("minibatch composition") {
  const auto scenes = make_toy_suite(2, 3);
  const TrainingWorld world{scenes, ViewBounds::standard(), tiny_render(), NaturalSampler{}};
  const DistPool pool = synthetic_pool(2, 3);
  std::mt19937_64 rng(4);

  auto count_adv = [](const std::vector<MinibatchItem>& batch) {
    int n = 0;
    for (const auto& item : batch) n += item.adversarial ? 1 : 0;
    return n;
  };

  const auto small = assemble_minibatch(pool, world, 1, 32, 32, 0.5, rng);
  CHECK(small.size() == 33);
  CHECK(count_adv(small) == 1);

  const auto even = assemble_minibatch(pool, world, 1, 1, 4, 0.5, rng);
  CHECK(even.size() == 8);
  CHECK(count_adv(even) == 4);

  for (const auto& item : even) {
    CHECK(world.bounds.contains(item.view));
    CHECK(item.image.pixels.size() == 8 * 8 * 3);
    CHECK(item.image.label >= 0);
    CHECK(item.image.label < 2);
  }
  CHECK_THROWS_AS(assemble_minibatch(DistPool{}, world, 1, 1, 4, 0.5, rng), InvalidArgument);
}

TEST_CASE("zero epochs returns the pretrained classifier") {
  const auto scenes = make_toy_suite(2, 1);
  const TrainingWorld world{scenes, ViewBounds::standard(), tiny_render(), NaturalSampler{}};
  TrainConfig tc;
  tc.epochs = 0;
  const ClassifierParams clf = tiny_classifier(2);
  const TrainResult r = viat_train(world, clf, tc, tiny_attack());
  CHECK(r.classifier == clf);
  CHECK(r.metrics.empty());
}

TEST_CASE("training is reproducible and resumable") {
  const auto scenes = make_toy_suite(2, 2);
  const TrainingWorld world{scenes, ViewBounds::standard(), tiny_render(), NaturalSampler{}};
  TrainConfig tc;
  tc.epochs = 2;
  tc.initial_iterations = 2;
  tc.epoch_iterations = 1;
  tc.clean_per_batch = 4;
  tc.ratio_clean = 1;
  tc.batches_per_epoch = 2;
  tc.eval_samples = 4;
  tc.eval_clean_views = 2;
  const ClassifierParams clf = tiny_classifier(2);

  const TrainResult a = viat_train(world, clf, tc, tiny_attack());
  const TrainResult b = viat_train(world, clf, tc, tiny_attack());
  REQUIRE(a.metrics.size() == 3);
  CHECK(a.classifier == b.classifier);
  CHECK(a.pool == b.pool);
  for (size_t i = 0; i < a.metrics.size(); ++i) CHECK(metrics_csv_row(a.metrics[i]) == metrics_csv_row(b.metrics[i]));

  // Stop after one epoch and continue: same end state.
  TrainConfig first = tc;
  first.epochs = 1;
  TrainState s = init_training(world, clf, first, tiny_attack());
  train_epochs(s, world, first, tiny_attack());
  train_epochs(s, world, tc, tiny_attack());
  CHECK(s.classifier == a.classifier);
  CHECK(s.pool == a.pool);
}

TEST_CASE("metrics csv") {
  CHECK(metrics_csv_header() == "epoch,clean_acc,adv_acc,mean_pool_entropy\n");
  CHECK(metrics_csv_row({3, 0.5, 0.25, -1.5}) == "3,0.5,0.25,-1.5\n");
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  CHECK_NOTHROW(tc.validate());
  tc.update_fraction = 0.0;
  CHECK_THROWS_AS(tc.validate(), InvalidArgument);
  tc = {};
  tc.share_prob = 1.5;
  CHECK_THROWS_AS(tc.validate(), InvalidArgument);
  tc = {};
  tc.ratio_clean = 0;
  CHECK_THROWS_AS(tc.validate(), InvalidArgument);
  tc = {};
  tc.epochs = -1;
  CHECK_THROWS_AS(tc.validate(), InvalidArgument);
}

TEST_CASE("object split") {
  const auto ten = make_toy_suite(2, 10);
  const SceneSplit s = split_scenes(ten);
  CHECK(s.train.size() == 18);
  CHECK(s.validation == std::vector<int>{9, 19});

  const auto four = make_toy_suite(4, 4);
  const SceneSplit t = split_scenes(four);
  CHECK(t.train.size() == 16);
  CHECK(t.validation.empty());
}
