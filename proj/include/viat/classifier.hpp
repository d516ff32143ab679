#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "viat/render.hpp"

namespace viat {

/// Fully connected softmax classifier with tanh hidden layers.
struct ClassifierParams {
  std::vector<MatrixXd> weights;  // layer l: out x in
  std::vector<VectorXd> biases;

  int input_size() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int num_classes() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
  std::vector<int> layer_sizes() const;

  /// Glorot-uniform weights, zero biases.
  static ClassifierParams random(const std::vector<int>& sizes, std::uint64_t seed);
  static ClassifierParams zeros(const std::vector<int>& sizes);

  friend bool operator==(const ClassifierParams& a, const ClassifierParams& b) {
    return a.weights == b.weights && a.biases == b.biases;
  }
};

/// input 32*32*3 -> 128 -> 64 -> classes
std::vector<int> default_architecture(int num_classes, int width = 32, int height = 32);

struct LabeledImage {
  VectorXd pixels;
  int label = 0;
};

/// Class probabilities for one flattened image.
VectorXd forward(const ClassifierParams& params, const VectorXd& image);
/// Probabilities for a batch, one image per column.
MatrixXd forward_batch(const ClassifierParams& params, const MatrixXd& images);

int predict(const ClassifierParams& params, const VectorXd& image);

/// -log softmax probability of `label`.
double cross_entropy(const VectorXd& probabilities, int label);
double classification_loss(const ClassifierParams& params, const VectorXd& image, int label);

struct ClassifierGradient {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;
  double loss = 0.0;  // summed cross-entropy over the batch
};

/// Exact gradient of the summed cross-entropy via backpropagation.
ClassifierGradient loss_gradient(const ClassifierParams& params, std::span<const LabeledImage> batch);

struct UpdateResult {
  ClassifierParams params;
  double loss = 0.0;
};

/// One SGD step W <- W - eta * sum_batch grad CE.
UpdateResult backward_update(const ClassifierParams& params, std::span<const LabeledImage> batch, double eta);

double accuracy(const ClassifierParams& params, std::span<const LabeledImage> data);

/// Nominal viewpoint plus uniform jitter (+-10 deg angles, +-0.05 translation).
struct NaturalSampler {
  Viewpoint nominal{0.0, 0.0, 65.0, 0.0, 0.0, 0.0};
  double angle_jitter = 10.0;
  double translation_jitter = 0.05;
  /// Optional per-class nominal viewpoints; falls back to `nominal`.
  std::vector<Viewpoint> class_nominal;

  Viewpoint sample(int label, std::mt19937_64& rng) const;
};

/// Render `views_per_scene` natural views of each scene.
std::vector<LabeledImage> render_natural_set(std::span<const Scene> scenes, const NaturalSampler& sampler,
                                             const RenderConfig& render, int views_per_scene,
                                             std::uint64_t seed);

struct PretrainConfig {
  int epochs = 30;
  double eta = 0.01;
  int batch_size = 32;
  int views_per_scene = 24;
  int holdout_views = 16;
  std::uint64_t seed = 1;
};

struct PretrainResult {
  ClassifierParams params;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

/// Trains a fresh classifier on natural-viewpoint renders only.
PretrainResult pretrain_clean(std::span<const Scene> scenes, const NaturalSampler& sampler,
                              const RenderConfig& render, const PretrainConfig& config);

/// Versioned binary checkpoint; `header` is free-form metadata text.
void save_classifier(const ClassifierParams& params, const std::filesystem::path& path,
                     const std::string& header = {});
ClassifierParams load_classifier(const std::filesystem::path& path, std::string* header = nullptr);

}  // namespace viat
