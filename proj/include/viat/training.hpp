#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "viat/gmvfool.hpp"

namespace viat {

struct PoolEntry {
  int class_id = 0;
  int object_id = 0;    // index within its class
  int scene_index = 0;  // index into the scene list
  MixtureParams params;
  int iterations = 0;   // cumulative inner iterations
};

/// One adversarial viewpoint distribution per training object.
struct DistPool {
  std::vector<PoolEntry> entries;

  /// Entry indices of class c, ordered by object id.
  std::vector<int> class_members(int class_id) const;
  int num_classes() const;

  friend bool operator==(const DistPool& a, const DistPool& b);
};

std::string dump_pool(const DistPool& pool);
DistPool parse_pool(const std::string& text);

struct TrainConfig {
  int epochs = 60;
  int initial_iterations = 50;
  int epoch_iterations = 10;
  double update_fraction = 0.5;
  double share_prob = 0.5;
  int ratio_adversarial = 1;
  int ratio_clean = 32;
  /// Clean images per minibatch; the adversarial count follows from the ratio.
  int clean_per_batch = 32;
  int batches_per_epoch = 16;
  double eta = 0.005;
  int eval_samples = 32;
  int eval_clean_views = 8;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Shared dependencies of the training loop. References must outlive it.
struct TrainingWorld {
  std::span<const Scene> scenes;
  ViewBounds bounds = ViewBounds::standard();
  RenderConfig render;
  NaturalSampler natural;
};

/// Runs the attack for every object with the initial iteration budget.
DistPool init_dist_pool(const TrainingWorld& world, const ClassifierParams& classifier, const AttackConfig& attack,
                        int initial_iterations);

/// Advances round(fraction * n_c) randomly chosen objects per class by
/// `iterations` warm-started attack steps against `classifier`; all other
/// entries are left untouched.
DistPool stochastic_inner_update(const DistPool& pool, const TrainingWorld& world,
                                 const ClassifierParams& classifier, const AttackConfig& attack,
                                 std::uint64_t epoch_seed, double fraction, int iterations,
                                 std::vector<int>* updated = nullptr);

/// Own distribution with probability pi, otherwise a uniformly chosen other
/// object of the same class.
MixtureParams choose_shared_dist(const DistPool& pool, int class_id, int object_id, double pi,
                                 std::mt19937_64& rng, int* chosen_entry = nullptr);

struct MinibatchItem {
  LabeledImage image;
  bool adversarial = false;
  Viewpoint view;
};

/// clean_count natural renders plus clean_count * adv / clean adversarial renders.
std::vector<MinibatchItem> assemble_minibatch(const DistPool& pool, const TrainingWorld& world, int ratio_adversarial,
                                              int ratio_clean, int clean_count, double pi, std::mt19937_64& rng);

struct EpochMetrics {
  int epoch = 0;
  double clean_acc = 0.0;
  double adv_acc = 0.0;
  double mean_pool_entropy = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

struct TrainState {
  ClassifierParams classifier;
  DistPool pool;
  int epoch = 0;
  std::vector<EpochMetrics> metrics;
};

EpochMetrics evaluate_epoch(const TrainState& state, const TrainingWorld& world, const TrainConfig& config);

/// Pool initialization plus the epoch-0 metrics row.
TrainState init_training(const TrainingWorld& world, const ClassifierParams& pretrained,
                         const TrainConfig& config, const AttackConfig& attack);

/// Runs epochs state.epoch + 1 .. config.epochs. Each epoch: stochastic inner
/// update, minibatch SGD on mixed clean/adversarial data, evaluation.
void train_epochs(TrainState& state, const TrainingWorld& world, const TrainConfig& config,
                  const AttackConfig& attack, const std::function<void(const TrainState&)>& on_epoch = {});

struct TrainResult {
  ClassifierParams classifier;
  std::vector<EpochMetrics> metrics;
  DistPool pool;
};

TrainResult viat_train(const TrainingWorld& world, const ClassifierParams& pretrained, const TrainConfig& config,
                       const AttackConfig& attack);

/// Per-class object split; the last ceil(n_c / (ratio + 1)) objects of a
/// class go to validation when the class has more than `ratio` objects.
struct SceneSplit {
  std::vector<int> train;
  std::vector<int> validation;
};
SceneSplit split_scenes(std::span<const Scene> scenes, int ratio = 9);

}  // namespace viat
