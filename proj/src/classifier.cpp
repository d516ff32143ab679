#include "viat/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace viat {
namespace {

constexpr char kMagic[8] = {'V', 'I', 'A', 'T', 'C', 'L', 'F', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

void softmax_columns(MatrixXd& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("classifier checkpoint: truncated file");
  return value;
}

}  // namespace

std::vector<int> ClassifierParams::layer_sizes() const {
  std::vector<int> sizes;
  if (weights.empty()) return sizes;
  sizes.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& w : weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

ClassifierParams ClassifierParams::random(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw InvalidArgument("classifier needs at least input and output layers");
  ClassifierParams p;
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> unif(-limit, limit);
    MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = unif(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(VectorXd::Zero(sizes[l + 1]));
  }
  return p;
}

ClassifierParams ClassifierParams::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InvalidArgument("classifier needs at least input and output layers");
  ClassifierParams p;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.weights.push_back(MatrixXd::Zero(sizes[l + 1], sizes[l]));
    p.biases.push_back(VectorXd::Zero(sizes[l + 1]));
  }
  return p;
}

std::vector<int> default_architecture(int num_classes, int width, int height) {
  return {width * height * 3, 128, 64, num_classes};
}

MatrixXd forward_batch(const ClassifierParams& params, const MatrixXd& images) {
  if (params.weights.empty()) throw InvalidArgument("forward: empty classifier");
  if (images.rows() != params.input_size()) throw InvalidArgument("forward: image size does not match input layer");
  MatrixXd h = images;
  const size_t layers = params.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    MatrixXd z = params.weights[l] * h;
    z.colwise() += params.biases[l];
    h = (l + 1 < layers) ? MatrixXd(z.array().tanh()) : std::move(z);
  }
  softmax_columns(h);
  return h;
}

VectorXd forward(const ClassifierParams& params, const VectorXd& image) {
  return forward_batch(params, image);
}

int predict(const ClassifierParams& params, const VectorXd& image) {
  Eigen::Index best;
  forward(params, image).maxCoeff(&best);
  return static_cast<int>(best);
}

double cross_entropy(const VectorXd& probabilities, int label) {
  if (label < 0 || label >= probabilities.size()) throw InvalidArgument("cross_entropy: label out of range");
  return -std::log(std::max(probabilities[label], 1e-300));
}

double classification_loss(const ClassifierParams& params, const VectorXd& image, int label) {
  if (label < 0 || label >= params.num_classes()) throw InvalidArgument("classification_loss: label out of range");
  return cross_entropy(forward(params, image), label);
}

ClassifierGradient loss_gradient(const ClassifierParams& params, std::span<const LabeledImage> batch) {
  if (batch.empty()) throw InvalidArgument("loss_gradient: empty batch");
  const int n = static_cast<int>(batch.size());
  const size_t layers = params.weights.size();

  MatrixXd x(params.input_size(), n);
  for (int i = 0; i < n; ++i) {
    if (batch[static_cast<size_t>(i)].pixels.size() != params.input_size()) {
      throw InvalidArgument("loss_gradient: image size does not match input layer");
    }
    if (batch[static_cast<size_t>(i)].label < 0 || batch[static_cast<size_t>(i)].label >= params.num_classes()) {
      throw InvalidArgument("loss_gradient: label out of range");
    }
    x.col(i) = batch[static_cast<size_t>(i)].pixels;
  }

  // activations[l] is the input of layer l
  std::vector<MatrixXd> activations;
  activations.reserve(layers + 1);
  activations.push_back(std::move(x));
  for (size_t l = 0; l < layers; ++l) {
    MatrixXd z = params.weights[l] * activations.back();
    z.colwise() += params.biases[l];
    if (l + 1 < layers) z = z.array().tanh().matrix();
    activations.push_back(std::move(z));
  }
  MatrixXd probs = activations.back();
  softmax_columns(probs);

  ClassifierGradient g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  MatrixXd delta = probs;
  for (int i = 0; i < n; ++i) {
    const int y = batch[static_cast<size_t>(i)].label;
    g.loss -= std::log(std::max(probs(y, i), 1e-300));
    delta(y, i) -= 1.0;
  }
  for (size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (params.weights[l].transpose() * delta).array() * (1.0 - activations[l].array().square());
    }
  }
  return g;
}

UpdateResult backward_update(const ClassifierParams& params, std::span<const LabeledImage> batch, double eta) {
  const ClassifierGradient g = loss_gradient(params, batch);
  UpdateResult r{params, g.loss};
  for (size_t l = 0; l < params.weights.size(); ++l) {
    r.params.weights[l] -= eta * g.weights[l];
    r.params.biases[l] -= eta * g.biases[l];
  }
  return r;
}

double accuracy(const ClassifierParams& params, std::span<const LabeledImage> data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& item : data) correct += predict(params, item.pixels) == item.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Viewpoint NaturalSampler::sample(int label, std::mt19937_64& rng) const {
  Viewpoint v = (label >= 0 && static_cast<size_t>(label) < class_nominal.size())
                    ? class_nominal[static_cast<size_t>(label)]
                    : nominal;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 3; ++i) v[i] += angle_jitter * unit(rng);
  for (int i = 3; i < 6; ++i) v[i] += translation_jitter * unit(rng);
  return v;
}

std::vector<LabeledImage> render_natural_set(std::span<const Scene> scenes, const NaturalSampler& sampler,
                                             const RenderConfig& render, int views_per_scene,
                                             std::uint64_t seed) {
  std::vector<LabeledImage> out;
  out.reserve(scenes.size() * static_cast<size_t>(std::max(views_per_scene, 0)));
  for (size_t s = 0; s < scenes.size(); ++s) {
    std::mt19937_64 rng(derive_seed(seed, s));
    for (int i = 0; i < views_per_scene; ++i) {
      const Viewpoint v = sampler.sample(scenes[s].label, rng);
      out.push_back({render_image(scenes[s], v, render).pixels, scenes[s].label});
    }
  }
  return out;
}

PretrainResult pretrain_clean(std::span<const Scene> scenes, const NaturalSampler& sampler,
                              const RenderConfig& render, const PretrainConfig& config) {
  int num_classes = 0;
  for (const Scene& s : scenes) num_classes = std::max(num_classes, s.label + 1);
  if (num_classes < 2) throw InvalidArgument("pretrain_clean: need at least two classes");
  std::vector<int> per_class(static_cast<size_t>(num_classes), 0);
  for (const Scene& s : scenes) ++per_class[static_cast<size_t>(s.label)];
  if (std::find(per_class.begin(), per_class.end(), 0) != per_class.end()) {
    throw InvalidArgument("pretrain_clean: every class needs at least one scene");
  }

  PretrainResult result;
  result.params = ClassifierParams::random(default_architecture(num_classes, render.width, render.height),
                                           derive_seed(config.seed, 0xC1A55));
  std::vector<LabeledImage> data;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    data = render_natural_set(scenes, sampler, render, config.views_per_scene,
                              derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::mt19937_64 rng(derive_seed(config.seed, 5000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(data.begin(), data.end(), rng);
    for (size_t start = 0; start < data.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t len = std::min(static_cast<size_t>(config.batch_size), data.size() - start);
      result.params = backward_update(result.params, std::span(data).subspan(start, len), config.eta).params;
    }
  }
  if (!data.empty()) result.train_accuracy = accuracy(result.params, data);
  const auto holdout =
      render_natural_set(scenes, sampler, render, config.holdout_views, derive_seed(config.seed, 0x401D));
  result.holdout_accuracy = accuracy(result.params, holdout);
  return result;
}

void save_classifier(const ClassifierParams& params, const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_pod(out, static_cast<std::uint32_t>(params.weights.size()));
  for (size_t l = 0; l < params.weights.size(); ++l) {
    const MatrixXd& w = params.weights[l];
    write_pod(out, static_cast<std::uint32_t>(w.rows()));
    write_pod(out, static_cast<std::uint32_t>(w.cols()));
    out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * w.size()));
    out.write(reinterpret_cast<const char*>(params.biases[l].data()),
              static_cast<std::streamsize>(sizeof(double) * params.biases[l].size()));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ClassifierParams load_classifier(const std::filesystem::path& path, std::string* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ParseError("not a classifier checkpoint: " + path.string());
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = read_pod<std::uint32_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (header) *header = text;

  ClassifierParams p;
  const auto layers = read_pod<std::uint32_t>(in);
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto rows = read_pod<std::uint32_t>(in);
    const auto cols = read_pod<std::uint32_t>(in);
    MatrixXd w(rows, cols);
    VectorXd b(rows);
    in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * w.size()));
    in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(sizeof(double) * b.size()));
    if (!in) throw ParseError("classifier checkpoint: truncated file");
    if (l > 0 && cols != p.weights.back().rows()) throw ParseError("classifier checkpoint: inconsistent layer sizes");
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (p.weights.empty()) throw ParseError("classifier checkpoint: no layers");
  return p;
}

}  // namespace viat
