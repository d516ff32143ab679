#include "viat/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <json.hpp>

namespace viat {

std::vector<int> DistPool::class_members(int class_id) const {
  std::vector<int> idx;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].class_id == class_id) idx.push_back(static_cast<int>(i));
  }
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return entries[static_cast<size_t>(a)].object_id < entries[static_cast<size_t>(b)].object_id;
  });
  return idx;
}

int DistPool::num_classes() const {
  int c = 0;
  for (const auto& e : entries) c = std::max(c, e.class_id + 1);
  return c;
}

bool operator==(const DistPool& a, const DistPool& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto& x = a.entries[i];
    const auto& y = b.entries[i];
    if (x.class_id != y.class_id || x.object_id != y.object_id || x.scene_index != y.scene_index ||
        x.iterations != y.iterations || !(x.params == y.params)) {
      return false;
    }
  }
  return true;
}

std::string dump_pool(const DistPool& pool) {
  using nlohmann::json;
  json entries = json::array();
  for (const auto& e : pool.entries) {
    const int k = e.params.components();
    json mu = json::array(), sigma = json::array();
    for (int c = 0; c < k; ++c) {
      mu.push_back(std::vector<double>(e.params.mu.row(c).data(), e.params.mu.row(c).data() + 6));
      sigma.push_back(std::vector<double>(e.params.sigma.row(c).data(), e.params.sigma.row(c).data() + 6));
    }
    entries.push_back({{"class", e.class_id},
                       {"object", e.object_id},
                       {"scene", e.scene_index},
                       {"iterations", e.iterations},
                       {"K", k},
                       {"omega", std::vector<double>(e.params.omega.data(), e.params.omega.data() + k)},
                       {"mu", mu},
                       {"sigma", sigma}});
  }
  return json{{"entries", entries}}.dump(1);
}

DistPool parse_pool(const std::string& text) {
  using nlohmann::json;
  DistPool pool;
  try {
    const json j = json::parse(text);
    for (const json& ej : j.at("entries")) {
      PoolEntry e;
      e.class_id = ej.at("class").get<int>();
      e.object_id = ej.at("object").get<int>();
      e.scene_index = ej.at("scene").get<int>();
      e.iterations = ej.at("iterations").get<int>();
      const int k = ej.at("K").get<int>();
      const auto omega = ej.at("omega").get<std::vector<double>>();
      const auto mu = ej.at("mu").get<std::vector<std::vector<double>>>();
      const auto sigma = ej.at("sigma").get<std::vector<std::vector<double>>>();
      if (k < 1 || omega.size() != static_cast<size_t>(k) || mu.size() != omega.size() || sigma.size() != omega.size()) {
        throw ValidationError("entries.K", "inconsistent component count");
      }
      e.params.omega = Eigen::Map<const VectorXd>(omega.data(), k);
      e.params.mu.resize(k, 6);
      e.params.sigma.resize(k, 6);
      for (int c = 0; c < k; ++c) {
        if (mu[static_cast<size_t>(c)].size() != 6 || sigma[static_cast<size_t>(c)].size() != 6) {
          throw ValidationError("entries.mu", "rows must have 6 entries");
        }
        for (int i = 0; i < 6; ++i) {
          e.params.mu(c, i) = mu[static_cast<size_t>(c)][static_cast<size_t>(i)];
          e.params.sigma(c, i) = sigma[static_cast<size_t>(c)][static_cast<size_t>(i)];
        }
      }
      pool.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("distribution pool: ") + e.what());
  }
  return pool;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("TrainConfig: epochs must be >= 0");
  if (initial_iterations < 1 || epoch_iterations < 1) throw InvalidArgument("TrainConfig: inner iterations must be >= 1");
  if (!(update_fraction > 0.0 && update_fraction <= 1.0)) throw InvalidArgument("TrainConfig: update fraction must lie in (0, 1]");
  if (!(share_prob >= 0.0 && share_prob <= 1.0)) throw InvalidArgument("TrainConfig: pi must lie in [0, 1]");
  if (ratio_adversarial < 1 || ratio_clean < 1) throw InvalidArgument("TrainConfig: ratio terms must be >= 1");
  if (clean_per_batch < 1 || batches_per_epoch < 1) throw InvalidArgument("TrainConfig: batch sizes must be >= 1");
  if (!(eta >= 0.0)) throw InvalidArgument("TrainConfig: eta must be >= 0");
}

namespace {

AttackConfig attack_for(const AttackConfig& base, std::uint64_t stream, int iterations) {
  AttackConfig cfg = base;
  cfg.seed = derive_seed(base.seed, stream);
  cfg.iterations = iterations;
  return cfg;
}

}  // namespace

DistPool init_dist_pool(const TrainingWorld& world, const ClassifierParams& classifier, const AttackConfig& attack,
                        int initial_iterations) {
  DistPool pool;
  std::vector<int> per_class;
  for (size_t s = 0; s < world.scenes.size(); ++s) {
    const Scene& scene = world.scenes[s];
    if (static_cast<size_t>(scene.label) >= per_class.size()) per_class.resize(static_cast<size_t>(scene.label) + 1, 0);
    PoolEntry e;
    e.class_id = scene.label;
    e.object_id = per_class[static_cast<size_t>(scene.label)]++;
    e.scene_index = static_cast<int>(s);
    const AttackConfig cfg = attack_for(attack, s, initial_iterations);
    e.params = run_attack(classifier, scene, scene.label, world.bounds, world.render, cfg).params;
    e.iterations = initial_iterations;
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

DistPool stochastic_inner_update(const DistPool& pool, const TrainingWorld& world,
                                 const ClassifierParams& classifier, const AttackConfig& attack,
                                 std::uint64_t epoch_seed, double fraction, int iterations,
                                 std::vector<int>* updated) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("stochastic_inner_update: fraction must lie in (0, 1]");
  DistPool next = pool;
  std::mt19937_64 rng(epoch_seed);
  std::vector<int> selected;
  for (int c = 0; c < pool.num_classes(); ++c) {
    std::vector<int> members = pool.class_members(c);
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<size_t>(
        std::clamp<long>(std::lround(fraction * static_cast<double>(members.size())), 1L, static_cast<long>(members.size())));
    selected.insert(selected.end(), members.begin(), members.begin() + static_cast<long>(take));
  }
  std::sort(selected.begin(), selected.end());
  for (int idx : selected) {
    PoolEntry& e = next.entries[static_cast<size_t>(idx)];
    const Scene& scene = world.scenes[static_cast<size_t>(e.scene_index)];
    const AttackConfig cfg = attack_for(attack, derive_seed(epoch_seed, static_cast<std::uint64_t>(idx)), iterations);
    e.params = run_attack(classifier, scene, scene.label, world.bounds, world.render, cfg, &e.params).params;
    e.iterations += iterations;
  }
  if (updated) *updated = selected;
  return next;
}

MixtureParams choose_shared_dist(const DistPool& pool, int class_id, int object_id, double pi,
                                 std::mt19937_64& rng, int* chosen_entry) {
  const std::vector<int> members = pool.class_members(class_id);
  if (members.empty()) throw InvalidArgument("choose_shared_dist: class has no objects");
  int own = -1;
  for (int m : members) {
    if (pool.entries[static_cast<size_t>(m)].object_id == object_id) own = m;
  }
  if (own < 0) throw InvalidArgument("choose_shared_dist: unknown object");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int chosen = own;
  if (unit(rng) > pi) {
    if (members.size() == 1) {
      std::clog << "viat: class " << class_id << " has a single object; sharing falls back to its own distribution\n";
    } else {
      std::uniform_int_distribution<size_t> pick(0, members.size() - 2);
      size_t slot = pick(rng);
      std::vector<int> others;
      for (int m : members)
        if (m != own) others.push_back(m);
      chosen = others[slot];
    }
  }
  if (chosen_entry) *chosen_entry = chosen;
  return pool.entries[static_cast<size_t>(chosen)].params;
}

std::vector<MinibatchItem> assemble_minibatch(const DistPool& pool, const TrainingWorld& world, int ratio_adversarial,
                                              int ratio_clean, int clean_count, double pi, std::mt19937_64& rng) {
  if (pool.entries.empty()) throw InvalidArgument("assemble_minibatch: empty pool");
  if (ratio_adversarial < 1 || ratio_clean < 1 || clean_count < 0) throw InvalidArgument("assemble_minibatch: bad ratio");
  const int adv_count = clean_count * ratio_adversarial / ratio_clean;

  std::vector<MinibatchItem> batch;
  batch.reserve(static_cast<size_t>(clean_count + adv_count));
  std::uniform_int_distribution<size_t> pick_scene(0, world.scenes.size() - 1);
  for (int i = 0; i < clean_count; ++i) {
    const Scene& scene = world.scenes[pick_scene(rng)];
    MinibatchItem item;
    item.view = world.natural.sample(scene.label, rng);
    item.image = {render_image(scene, item.view, world.render).pixels, scene.label};
    batch.push_back(std::move(item));
  }
  std::uniform_int_distribution<size_t> pick_entry(0, pool.entries.size() - 1);
  for (int i = 0; i < adv_count; ++i) {
    const PoolEntry& e = pool.entries[pick_entry(rng)];
    const MixtureParams shared = choose_shared_dist(pool, e.class_id, e.object_id, pi, rng);
    const auto draw = sample_mixture(shared, world.bounds, 1, rng());
    const Scene& scene = world.scenes[static_cast<size_t>(e.scene_index)];
    MinibatchItem item;
    item.adversarial = true;
    item.view = draw.front().v;
    item.image = {render_image(scene, item.view, world.render).pixels, scene.label};
    batch.push_back(std::move(item));
  }
  return batch;
}

std::string metrics_csv_header() { return "epoch,clean_acc,adv_acc,mean_pool_entropy\n"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", m.epoch, m.clean_acc, m.adv_acc, m.mean_pool_entropy);
  return buf;
}

EpochMetrics evaluate_epoch(const TrainState& state, const TrainingWorld& world, const TrainConfig& config) {
  EpochMetrics m;
  m.epoch = state.epoch;
  const auto clean = render_natural_set(world.scenes, world.natural, world.render, config.eval_clean_views,
                                        derive_seed(config.seed, 0xC1EA));
  m.clean_acc = accuracy(state.classifier, clean);

  std::vector<LabeledImage> adv;
  double entropy = 0.0;
  for (size_t i = 0; i < state.pool.entries.size(); ++i) {
    const PoolEntry& e = state.pool.entries[i];
    const Scene& scene = world.scenes[static_cast<size_t>(e.scene_index)];
    for (const DrawRecord& d : sample_mixture(e.params, world.bounds, config.eval_samples, derive_seed(config.seed, 0xADF00 + i))) {
      adv.push_back({render_image(scene, d.v, world.render).pixels, scene.label});
    }
    entropy += entropy_estimate(e.params, world.bounds, 256, derive_seed(config.seed, 0xE1700 + i)).value;
  }
  m.adv_acc = accuracy(state.classifier, adv);
  m.mean_pool_entropy = state.pool.entries.empty() ? 0.0 : entropy / static_cast<double>(state.pool.entries.size());
  return m;
}

TrainState init_training(const TrainingWorld& world, const ClassifierParams& pretrained, const TrainConfig& config,
                         const AttackConfig& attack) {
  config.validate();
  TrainState state;
  state.classifier = pretrained;
  state.pool = init_dist_pool(world, pretrained, attack, config.initial_iterations);
  state.epoch = 0;
  state.metrics.push_back(evaluate_epoch(state, world, config));
  return state;
}

void train_epochs(TrainState& state, const TrainingWorld& world, const TrainConfig& config, const AttackConfig& attack,
                  const std::function<void(const TrainState&)>& on_epoch) {
  config.validate();
  while (state.epoch < config.epochs) {
    const int epoch = state.epoch + 1;
    const std::uint64_t epoch_seed = derive_seed(config.seed, 0x100000 + static_cast<std::uint64_t>(epoch));
    state.pool = stochastic_inner_update(state.pool, world, state.classifier, attack, epoch_seed,
                                         config.update_fraction, config.epoch_iterations);
    std::mt19937_64 rng(derive_seed(epoch_seed, 0xBA7C4));
    for (int b = 0; b < config.batches_per_epoch; ++b) {
      const auto items = assemble_minibatch(state.pool, world, config.ratio_adversarial, config.ratio_clean,
                                            config.clean_per_batch, config.share_prob, rng);
      std::vector<LabeledImage> batch;
      batch.reserve(items.size());
      for (const auto& item : items) batch.push_back(item.image);
      state.classifier = backward_update(state.classifier, batch, config.eta).params;
    }
    state.epoch = epoch;
    state.metrics.push_back(evaluate_epoch(state, world, config));
    if (on_epoch) on_epoch(state);
  }
}

TrainResult viat_train(const TrainingWorld& world, const ClassifierParams& pretrained, const TrainConfig& config,
                       const AttackConfig& attack) {
  config.validate();
  if (config.epochs == 0) return {pretrained, {}, {}};
  TrainState state = init_training(world, pretrained, config, attack);
  train_epochs(state, world, config, attack);
  return {state.classifier, state.metrics, state.pool};
}

SceneSplit split_scenes(std::span<const Scene> scenes, int ratio) {
  SceneSplit split;
  int classes = 0;
  for (const Scene& s : scenes) classes = std::max(classes, s.label + 1);
  for (int c = 0; c < classes; ++c) {
    std::vector<int> members;
    for (size_t i = 0; i < scenes.size(); ++i)
      if (scenes[i].label == c) members.push_back(static_cast<int>(i));
    const int n = static_cast<int>(members.size());
    const int n_val = n > ratio ? (n + ratio) / (ratio + 1) : 0;
    for (int i = 0; i < n; ++i) (i < n - n_val ? split.train : split.validation).push_back(members[static_cast<size_t>(i)]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

}  // namespace viat
