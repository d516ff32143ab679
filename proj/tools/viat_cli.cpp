// viat: command-line driver for attack, train, certify, landscape and
// make-toy-suite. Exit codes: 0 success, 1 runtime failure, 2 bad config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "viat/io.hpp"
#include "viat/toy_suite.hpp"
#include "viat/training.hpp"
#include "viat/viewrs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace viat;

namespace {

constexpr const char* kAxisNames[6] = {"psi", "theta", "phi", "dx", "dy", "dz"};

// Path fields default to null; "bounds": null means the standard box (or
// psi x phi for planted landscapes).
json default_config() {
  const SmoothingConfig sm;
  const AttackConfig at;
  const TrainConfig tr;
  const PretrainConfig pre;
  const RenderConfig rc;
  return {
      {"seed", 0},
      {"scene", nullptr},
      {"scenes", nullptr},
      {"checkpoint", nullptr},
      {"planted", nullptr},
      {"label", nullptr},
      {"bounds", nullptr},
      {"natural", "toy"},
      {"render", {{"width", rc.width}, {"height", rc.height}, {"fov", rc.fov}, {"samples", rc.samples}}},
      {"attack",
       {{"iterations", at.iterations},
        {"samples", at.samples},
        {"eta", at.eta},
        {"components", at.components},
        {"lambda", at.lambda},
        {"center_losses", at.center_losses},
        {"form", "euclidean"},
        {"eval_samples", 500},
        {"mode_samples", 10000},
        {"grid_views", 16}}},
      {"train",
       {{"mode", "viat"},
        {"epochs", tr.epochs},
        {"initial_iterations", tr.initial_iterations},
        {"epoch_iterations", tr.epoch_iterations},
        {"update_fraction", tr.update_fraction},
        {"share_prob", tr.share_prob},
        {"ratio_adversarial", tr.ratio_adversarial},
        {"ratio_clean", tr.ratio_clean},
        {"clean_per_batch", tr.clean_per_batch},
        {"batches_per_epoch", tr.batches_per_epoch},
        {"eta", tr.eta},
        {"eval_samples", tr.eval_samples},
        {"eval_clean_views", tr.eval_clean_views}}},
      {"pretrain",
       {{"epochs", pre.epochs},
        {"eta", pre.eta},
        {"batch_size", pre.batch_size},
        {"views_per_scene", pre.views_per_scene},
        {"holdout_views", pre.holdout_views}}},
      {"smoothing",
       {{"sigma_tilde", sm.sigma_tilde},
        {"n", sm.n},
        {"n0", sm.n0},
        {"alpha", sm.alpha},
        {"v0", std::vector<double>(sm.v0.params.data(), sm.v0.params.data() + 6)}}},
      {"landscape", {{"axes", {"psi", "phi"}}, {"nx", 36}, {"ny", 14}}},
      {"toy", {{"classes", 4}, {"objects", 4}}},
  };
}

// Overlays `user` on `base`; keys absent from the defaults are rejected.
void merge_config(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw ValidationError(where.empty() ? "config" : where, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ValidationError(key, "unknown config key");
    json& slot = base[it.key()];
    if (slot.is_object() && !it.value().is_null()) {
      merge_config(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get_field(const json& j, const std::string& section, const std::string& key) {
  const json& v = section.empty() ? j.at(key) : j.at(section).at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(section.empty() ? key : section + "." + key, "wrong type");
  }
}

std::optional<std::string> get_path(const json& j, const std::string& key) {
  if (j.at(key).is_null()) return std::nullopt;
  return get_field<std::string>(j, "", key);
}

fs::path require_path(const json& j, const std::string& key) {
  const auto p = get_path(j, key);
  if (!p) throw ValidationError(key, "required");
  if (!fs::exists(*p)) throw ValidationError(key, "path does not exist: " + *p);
  return *p;
}

RenderConfig render_config(const json& j) {
  RenderConfig rc;
  rc.width = get_field<int>(j, "render", "width");
  rc.height = get_field<int>(j, "render", "height");
  rc.fov = get_field<double>(j, "render", "fov");
  rc.samples = get_field<int>(j, "render", "samples");
  if (rc.width < 1 || rc.height < 1 || rc.samples < 1) throw ValidationError("render", "sizes must be >= 1");
  if (!(rc.fov > 0.0 && rc.fov < 180.0)) throw ValidationError("render.fov", "must lie in (0, 180)");
  return rc;
}

ViewBounds bounds_config(const json& j, bool planted) {
  const json& b = j.at("bounds");
  if (b.is_null()) return planted ? psi_phi_bounds() : ViewBounds::standard();
  const auto lo = get_field<std::vector<double>>(b, "", "lo");
  const auto hi = get_field<std::vector<double>>(b, "", "hi");
  if (lo.size() != 6 || hi.size() != 6) throw ValidationError("bounds", "lo and hi need 6 entries");
  try {
    return {Eigen::Map<const Vector6d>(lo.data()), Eigen::Map<const Vector6d>(hi.data())};
  } catch (const std::exception& e) {
    throw ValidationError("bounds", e.what());
  }
}

AttackConfig attack_config(const json& j, std::uint64_t seed) {
  AttackConfig ac;
  ac.iterations = get_field<int>(j, "attack", "iterations");
  ac.samples = get_field<int>(j, "attack", "samples");
  ac.eta = get_field<double>(j, "attack", "eta");
  ac.components = get_field<int>(j, "attack", "components");
  ac.lambda = get_field<double>(j, "attack", "lambda");
  ac.center_losses = get_field<bool>(j, "attack", "center_losses");
  const auto form = get_field<std::string>(j, "attack", "form");
  if (form == "euclidean") {
    ac.form = NesForm::kEuclidean;
  } else if (form == "natural") {
    ac.form = NesForm::kNatural;
  } else {
    throw ValidationError("attack.form", "expected euclidean or natural");
  }
  ac.seed = seed;
  try {
    ac.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError("attack", e.what());
  }
  return ac;
}

TrainConfig train_config(const json& j, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = get_field<int>(j, "train", "epochs");
  tc.initial_iterations = get_field<int>(j, "train", "initial_iterations");
  tc.epoch_iterations = get_field<int>(j, "train", "epoch_iterations");
  tc.update_fraction = get_field<double>(j, "train", "update_fraction");
  tc.share_prob = get_field<double>(j, "train", "share_prob");
  tc.ratio_adversarial = get_field<int>(j, "train", "ratio_adversarial");
  tc.ratio_clean = get_field<int>(j, "train", "ratio_clean");
  tc.clean_per_batch = get_field<int>(j, "train", "clean_per_batch");
  tc.batches_per_epoch = get_field<int>(j, "train", "batches_per_epoch");
  tc.eta = get_field<double>(j, "train", "eta");
  tc.eval_samples = get_field<int>(j, "train", "eval_samples");
  tc.eval_clean_views = get_field<int>(j, "train", "eval_clean_views");
  tc.seed = seed;
  try {
    tc.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError("train", e.what());
  }
  return tc;
}

PretrainConfig pretrain_config(const json& j, std::uint64_t seed) {
  PretrainConfig pc;
  pc.epochs = get_field<int>(j, "pretrain", "epochs");
  pc.eta = get_field<double>(j, "pretrain", "eta");
  pc.batch_size = get_field<int>(j, "pretrain", "batch_size");
  pc.views_per_scene = get_field<int>(j, "pretrain", "views_per_scene");
  pc.holdout_views = get_field<int>(j, "pretrain", "holdout_views");
  pc.seed = seed;
  if (pc.epochs < 0 || pc.batch_size < 1 || pc.views_per_scene < 1 || pc.holdout_views < 0) {
    throw ValidationError("pretrain", "counts out of range");
  }
  return pc;
}

SmoothingConfig smoothing_config(const json& j) {
  SmoothingConfig sc;
  sc.sigma_tilde = get_field<double>(j, "smoothing", "sigma_tilde");
  sc.n = get_field<int>(j, "smoothing", "n");
  sc.n0 = get_field<int>(j, "smoothing", "n0");
  sc.alpha = get_field<double>(j, "smoothing", "alpha");
  const auto v0 = get_field<std::vector<double>>(j, "smoothing", "v0");
  if (v0.size() != 6) throw ValidationError("smoothing.v0", "needs 6 entries");
  sc.v0 = Viewpoint(Eigen::Map<const Vector6d>(v0.data()));
  try {
    sc.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError("smoothing", e.what());
  }
  return sc;
}

NaturalSampler natural_sampler(const json& j, int classes) {
  const auto kind = get_field<std::string>(j, "", "natural");
  if (kind == "toy") return toy_natural_sampler(classes);
  if (kind == "nominal") return NaturalSampler{};
  throw ValidationError("natural", "expected toy or nominal");
}

std::optional<PlantedLandscape> planted_config(const json& j) {
  const auto name = get_path(j, "planted");
  if (!name) return std::nullopt;
  if (*name == "four-bump") return four_bump_landscape();
  if (*name == "single-bump") return single_bump_landscape();
  throw ValidationError("planted", "expected four-bump or single-bump");
}

int axis_index(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kAxisNames[i]) return i;
  throw ValidationError("landscape.axes", "unknown axis " + name);
}

int num_classes(std::span<const Scene> scenes) {
  int c = 0;
  for (const Scene& s : scenes) c = std::max(c, s.label + 1);
  return c;
}

// The checkpoint must have been trained at the configured render size.
ClassifierParams load_checkpoint(const json& j, const RenderConfig& rc) {
  ClassifierParams clf = load_classifier(require_path(j, "checkpoint"));
  if (clf.input_size() != rc.width * rc.height * 3) {
    throw ValidationError("checkpoint", "input size does not match render.width x render.height");
  }
  return clf;
}

std::vector<Scene> load_scenes(const json& j) {
  auto scenes = load_scene_dir(require_path(j, "scenes"));
  for (const Scene& s : scenes) validate_scene(s);
  return scenes;
}

struct Run {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  fs::path out;

  std::string header() const { return artifact_header(command, config.dump(), seed); }
  void write(const std::string& name, const std::string& body) const { write_text(out / name, header() + body); }
};

// ---------------------------------------------------------------- attack

int cmd_attack(const Run& run) {
  const json& j = run.config;
  const auto planted = planted_config(j);
  const ViewBounds bounds = bounds_config(j, planted.has_value());
  const RenderConfig rc = render_config(j);
  const AttackConfig ac = attack_config(j, derive_seed(run.seed, 0xA77AC));
  const int eval_n = get_field<int>(j, "attack", "eval_samples");
  const int mode_n = get_field<int>(j, "attack", "mode_samples");
  const int grid_views = get_field<int>(j, "attack", "grid_views");
  if (eval_n < 1 || mode_n < 1 || grid_views < 0) throw ValidationError("attack", "sample counts out of range");

  std::optional<Scene> scene;
  std::optional<ClassifierParams> clf;
  int label = 0;
  ViewModel model;
  ViewLoss loss;
  if (planted) {
    model = [&](const Viewpoint& v) { return planted->probabilities(v); };
    loss = [&](const Viewpoint& v) { return planted->loss(v); };
  } else {
    scene = load_scene(require_path(j, "scene"));
    validate_scene(*scene);
    clf = load_checkpoint(j, rc);
    label = j.at("label").is_null() ? scene->label : get_field<int>(j, "", "label");
    if (label < 0 || label >= clf->num_classes()) throw ValidationError("label", "out of range for the classifier");
    model = render_model(*clf, *scene, rc);
    loss = cross_entropy_loss(model, label);
  }

  const AttackResult res = run_attack(loss, bounds, ac);
  const double asr = attack_success_rate(model, label, res.params, bounds, eval_n, derive_seed(run.seed, 0xE7A1));
  const double rs = random_search_success_rate(model, label, bounds, eval_n, derive_seed(run.seed, 0x5EA2C));

  std::ostringstream summary;
  summary << "components: " << res.params.components() << "\n"
          << "final_loss_mean: " << format_double(res.trace.back().loss_mean) << "\n"
          << "final_entropy: " << format_double(res.trace.back().entropy) << "\n"
          << "attack_success_rate: " << format_double(asr) << "\n"
          << "random_search_success_rate: " << format_double(rs) << "\n";
  if (planted) {
    const auto mass = bump_mass(*planted, res.params, bounds, mode_n, derive_seed(run.seed, 0xB0B));
    summary << "bump_mass:";
    for (double m : mass) summary << " " << format_double(m);
    summary << "\nmode_coverage: " << mode_coverage(mass) << "\n";
  }

  run.write("psi.txt", dump_mixture(res.params, bounds) + "\n");
  run.write("trace.csv", trace_csv(res.trace));
  run.write("summary.txt", summary.str());
  if (scene && grid_views > 0) {
    std::vector<RenderedImage> tiles;
    for (const DrawRecord& d : sample_mixture(res.params, bounds, grid_views, derive_seed(run.seed, 0x6A1D))) {
      tiles.push_back(render_image(*scene, d.v, rc));
    }
    write_ppm(tile_images(tiles, 4), run.out / "samples.ppm", run.header());
  }
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------- train

std::vector<EpochMetrics> parse_metrics(const std::string& text) {
  std::vector<EpochMetrics> rows;
  std::istringstream in(strip_header(text));
  std::string line;
  std::getline(in, line);
  if (line + "\n" != metrics_csv_header()) throw ParseError("metrics csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &m.epoch, &m.clean_acc, &m.adv_acc, &m.mean_pool_entropy) != 4) {
      throw ParseError("metrics csv: bad row " + line);
    }
    rows.push_back(m);
  }
  return rows;
}

std::string metrics_body(const std::vector<EpochMetrics>& rows) {
  std::string out = metrics_csv_header();
  for (const EpochMetrics& m : rows) out += metrics_csv_row(m);
  return out;
}

void write_train_state(const Run& run, const fs::path& dir, const TrainState& s) {
  fs::create_directories(dir);
  const std::string h = run.header();
  save_classifier(s.classifier, dir / "classifier.ckpt", h);
  write_text(dir / "pool.json", h + dump_pool(s.pool) + "\n");
  write_text(dir / "metrics.csv", h + metrics_body(s.metrics));
}

int cmd_train(const Run& run, const std::optional<std::string>& resume) {
  const json& j = run.config;
  const auto scenes = load_scenes(j);
  const int classes = num_classes(scenes);
  const RenderConfig rc = render_config(j);
  const ViewBounds bounds = bounds_config(j, false);
  const NaturalSampler natural = natural_sampler(j, classes);
  const auto mode = get_field<std::string>(j, "train", "mode");

  if (mode == "standard") {
    const PretrainConfig pc = pretrain_config(j, derive_seed(run.seed, 0x57D));
    const PretrainResult r = pretrain_clean(scenes, natural, rc, pc);
    save_classifier(r.params, run.out / "final.ckpt", run.header());
    run.write("summary.txt", "train_accuracy: " + format_double(r.train_accuracy) +
                                 "\nholdout_accuracy: " + format_double(r.holdout_accuracy) + "\n");
    std::cout << "holdout_accuracy: " << format_double(r.holdout_accuracy) << "\n";
    return 0;
  }
  if (mode != "viat") throw ValidationError("train.mode", "expected viat or standard");

  const TrainConfig tc = train_config(j, derive_seed(run.seed, 0x7A1));
  const AttackConfig ac = attack_config(j, derive_seed(run.seed, 0xA77AC));
  const TrainingWorld world{scenes, bounds, rc, natural};

  TrainState state;
  if (resume) {
    const fs::path dir = *resume;
    for (const char* f : {"classifier.ckpt", "pool.json", "metrics.csv"}) {
      if (!fs::exists(dir / f)) throw ValidationError("resume", "missing " + (dir / f).string());
    }
    state.classifier = load_classifier(dir / "classifier.ckpt");
    state.pool = parse_pool(strip_header(read_text(dir / "pool.json")));
    state.metrics = parse_metrics(read_text(dir / "metrics.csv"));
    if (state.metrics.empty()) throw ParseError("resume: metrics csv has no rows");
    state.epoch = state.metrics.back().epoch;
  } else {
    const ClassifierParams pretrained = load_checkpoint(j, rc);
    if (pretrained.num_classes() != classes) throw ValidationError("checkpoint", "class count does not match the scenes");
    state = init_training(world, pretrained, tc, ac);
    write_train_state(run, run.out / "epochs" / "epoch_000", state);
  }

  train_epochs(state, world, tc, ac, [&](const TrainState& s) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d", s.epoch);
    write_train_state(run, run.out / "epochs" / name, s);
    const EpochMetrics& m = s.metrics.back();
    std::cout << "epoch " << m.epoch << " clean " << format_double(m.clean_acc) << " adv " << format_double(m.adv_acc)
              << std::endl;
  });
  save_classifier(state.classifier, run.out / "final.ckpt", run.header());
  run.write("pool.json", dump_pool(state.pool) + "\n");
  run.write("metrics.csv", metrics_body(state.metrics));
  return 0;
}

// ---------------------------------------------------------------- certify

int cmd_certify(const Run& run) {
  const json& j = run.config;
  const auto scenes = load_scenes(j);
  const RenderConfig rc = render_config(j);
  const ClassifierParams clf = load_checkpoint(j, rc);
  const ViewBounds bounds = bounds_config(j, false);
  SmoothingConfig sc = smoothing_config(j);
  if (num_classes(scenes) > clf.num_classes()) throw ValidationError("checkpoint", "fewer classes than the scenes");

  std::vector<CertificationRecord> records;
  std::string csv = "object_id,class,predicted,pA_lower,radius,correct,clip_fraction\n";
  for (size_t i = 0; i < scenes.size(); ++i) {
    sc.seed = derive_seed(run.seed, i);
    const CertificationRecord r = certify(render_model(clf, scenes[i], rc), clf.num_classes(), scenes[i].label, bounds, sc);
    records.push_back(r);
    csv += scenes[i].name + "," + std::to_string(scenes[i].label) + "," + std::to_string(r.predicted) + "," +
           format_double(r.pA_lower) + "," + format_double(r.radius) + "," + (r.correct ? "1" : "0") + "," +
           format_double(r.clip_fraction) + "\n";
  }
  const AcrCa agg = aggregate_acr_ca(records);
  const std::string line = "ACR " + format_double(agg.acr) + " CA " + format_double(agg.ca) + "\n";
  run.write("certification.csv", csv);
  run.write("summary.txt", line);
  std::cout << line;
  return 0;
}

// ---------------------------------------------------------------- landscape

int cmd_landscape(const Run& run) {
  const json& j = run.config;
  const auto planted = planted_config(j);
  const ViewBounds bounds = bounds_config(j, planted.has_value());
  const RenderConfig rc = render_config(j);
  const auto axes = get_field<std::vector<std::string>>(j, "landscape", "axes");
  if (axes.size() != 2) throw ValidationError("landscape.axes", "need exactly two axes");
  const int ax = axis_index(axes[0]), ay = axis_index(axes[1]);
  if (ax == ay) throw ValidationError("landscape.axes", "axes must differ");
  const int nx = get_field<int>(j, "landscape", "nx"), ny = get_field<int>(j, "landscape", "ny");
  if (nx < 1 || ny < 1) throw ValidationError("landscape", "grid must be at least 1x1");

  std::optional<Scene> scene;
  std::optional<ClassifierParams> clf;
  ViewLoss loss;
  if (planted) {
    loss = [&](const Viewpoint& v) { return planted->loss(v); };
  } else {
    scene = load_scene(require_path(j, "scene"));
    validate_scene(*scene);
    clf = load_checkpoint(j, rc);
    const int label = j.at("label").is_null() ? scene->label : get_field<int>(j, "", "label");
    if (label < 0 || label >= clf->num_classes()) throw ValidationError("label", "out of range for the classifier");
    loss = cross_entropy_loss(render_model(*clf, *scene, rc), label);
  }

  std::string csv = std::string(kAxisNames[ax]) + "," + kAxisNames[ay] + ",loss\n";
  for (const LandscapePoint& p : sweep_landscape(loss, bounds, ax, ay, nx, ny)) {
    csv += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.loss) + "\n";
  }
  run.write("landscape.csv", csv);
  return 0;
}

// ---------------------------------------------------------------- make-toy-suite

int cmd_make_toy_suite(const Run& run) {
  const int classes = get_field<int>(run.config, "toy", "classes");
  const int objects = get_field<int>(run.config, "toy", "objects");
  std::vector<Scene> scenes;
  try {
    scenes = make_toy_suite(classes, objects, run.seed);
  } catch (const InvalidArgument& e) {
    throw ValidationError("toy", e.what());
  }
  for (const Scene& s : scenes) run.write(s.name + ".json", dump_scene(s) + "\n");
  std::cout << scenes.size() << " scenes\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viewpoint attack, adversarial training and certification toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scene, scenes, checkpoint, planted, resume, mode, axes, grid;
  std::optional<int> label, k, t, q, epochs, n, classes, objects, eval_n;
  std::optional<double> eta, lambda, sigma, alpha;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "master seed");
  };

  CLI::App* attack = app.add_subcommand("attack", "fit an adversarial viewpoint distribution");
  common(attack);
  attack->add_option("--scene", scene, "scene JSON");
  attack->add_option("--checkpoint", checkpoint, "classifier checkpoint");
  attack->add_option("--planted", planted, "four-bump or single-bump synthetic landscape");
  attack->add_option("--label", label, "true label (default: the scene's)");
  attack->add_option("--k", k, "mixture components");
  attack->add_option("--t", t, "iterations");
  attack->add_option("--q", q, "samples per iteration");
  attack->add_option("--eta", eta, "learning rate");
  attack->add_option("--lambda", lambda, "entropy weight");
  attack->add_option("--eval-n", eval_n, "samples for the success rate");

  CLI::App* train = app.add_subcommand("train", "standard or adversarial training");
  common(train);
  train->add_option("--scenes", scenes, "scene directory");
  train->add_option("--checkpoint", checkpoint, "pretrained classifier (viat mode)");
  train->add_option("--mode", mode, "viat or standard");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--resume", resume, "epoch directory to resume from")->check(CLI::ExistingDirectory);

  CLI::App* cert = app.add_subcommand("certify", "randomized-smoothing certification");
  common(cert);
  cert->add_option("--scenes", scenes, "scene directory");
  cert->add_option("--checkpoint", checkpoint, "classifier checkpoint");
  cert->add_option("--sigma", sigma, "smoothing sigma on normalized parameters");
  cert->add_option("--n", n, "Monte Carlo samples");
  cert->add_option("--alpha", alpha, "failure probability");

  CLI::App* land = app.add_subcommand("landscape", "loss over a 2-axis viewpoint grid");
  common(land);
  land->add_option("--scene", scene, "scene JSON");
  land->add_option("--checkpoint", checkpoint, "classifier checkpoint");
  land->add_option("--planted", planted, "four-bump or single-bump synthetic landscape");
  land->add_option("--label", label, "true label (default: the scene's)");
  land->add_option("--axes", axes, "two axis names, e.g. psi,phi");
  land->add_option("--grid", grid, "NXxNY, e.g. 36x14");

  CLI::App* toy = app.add_subcommand("make-toy-suite", "write the bundled toy scenes");
  common(toy);
  toy->add_option("--classes", classes, "number of classes (1-4)");
  toy->add_option("--objects", objects, "objects per class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();

  Run run;
  run.command = sub->get_name();
  try {
    run.config = default_config();
    if (!config_path.empty()) {
      json user;
      try {
        user = json::parse(strip_header(read_text(config_path)));
      } catch (const json::parse_error& e) {
        throw ParseError(config_path + ": " + e.what());
      }
      merge_config(run.config, user, "");
    }
    json& c = run.config;
    if (seed) c["seed"] = *seed;
    if (scene) c["scene"] = *scene;
    if (scenes) c["scenes"] = *scenes;
    if (checkpoint) c["checkpoint"] = *checkpoint;
    if (planted) c["planted"] = *planted;
    if (label) c["label"] = *label;
    if (k) c["attack"]["components"] = *k;
    if (t) c["attack"]["iterations"] = *t;
    if (q) c["attack"]["samples"] = *q;
    if (eta) c["attack"]["eta"] = *eta;
    if (lambda) c["attack"]["lambda"] = *lambda;
    if (eval_n) c["attack"]["eval_samples"] = *eval_n;
    if (mode) c["train"]["mode"] = *mode;
    if (epochs) c["train"]["epochs"] = *epochs;
    if (sigma) c["smoothing"]["sigma_tilde"] = *sigma;
    if (n) c["smoothing"]["n"] = *n;
    if (alpha) c["smoothing"]["alpha"] = *alpha;
    if (classes) c["toy"]["classes"] = *classes;
    if (objects) c["toy"]["objects"] = *objects;
    if (axes) {
      const auto comma = axes->find(',');
      if (comma == std::string::npos) throw ValidationError("axes", "expected two comma-separated names");
      c["landscape"]["axes"] = {axes->substr(0, comma), axes->substr(comma + 1)};
    }
    if (grid) {
      int gx = 0, gy = 0;
      if (std::sscanf(grid->c_str(), "%dx%d", &gx, &gy) != 2) throw ValidationError("grid", "expected NXxNY");
      c["landscape"]["nx"] = gx;
      c["landscape"]["ny"] = gy;
    }
    run.seed = get_field<std::uint64_t>(c, "", "seed");
    run.out = out_dir;
    fs::create_directories(run.out);

    if (run.command == "attack") return cmd_attack(run);
    if (run.command == "train") return cmd_train(run, resume);
    if (run.command == "certify") return cmd_certify(run);
    if (run.command == "landscape") return cmd_landscape(run);
    return cmd_make_toy_suite(run);
  } catch (const ValidationError& e) {
    std::cerr << "viat: invalid config: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "viat: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "viat: error: " << e.what() << "\n";
    return 1;
  }
}
