#include "hsnas/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hsnas/error.hpp"

namespace hsnas {

// TrainingConfig --------------------------------------------------------------

Json TrainingConfig::to_json() const {
  return Json{{"hidden_dims", hidden_dims}, {"batch_size", batch_size},
              {"learning_rate", learning_rate}, {"steps", steps},
              {"optimizer", "adam"},           {"beta1", beta1},
              {"beta2", beta2},                {"epsilon", epsilon},
              {"activation", "relu"}};
}

TrainingConfig TrainingConfig::from_json(const Json& j) {
  TrainingConfig c;
  c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.steps = j.value("steps", c.steps);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  if (c.batch_size < 1 || c.steps < 0 || !(c.learning_rate > 0.0)) {
    throw ConfigError("training config needs batch_size >= 1, steps >= 0, learning_rate > 0");
  }
  for (int h : c.hidden_dims) {
    if (h < 1) throw ConfigError("hidden layer dimensions must be positive");
  }
  return c;
}

// Dataset ---------------------------------------------------------------------

namespace {

constexpr std::size_t kLabelChunk = 64;

Json dataset_row(const EncodedArchitecture& f, double label) {
  return Json{{"features", std::vector<double>(f.data(), f.data() + f.size())}, {"label", label}};
}

}  // namespace

void save_dataset(const DistillDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write dataset {}", path.string()));
  out << Json{{"format_version", kDatasetFormatVersion},
              {"teacher", data.teacher},
              {"seed", data.seed},
              {"rows", data.size()}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << dataset_row(data.features[i], data.labels[i]).dump() << '\n';
  }
}

DistillDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open dataset {}", path.string()));
  DistillDataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (j.contains("format_version")) {
        if (j.at("format_version").get<int>() != kDatasetFormatVersion) {
          throw FormatError(fmt::format("{}: dataset format_version {} (expected {})",
                                        path.string(), j.at("format_version").dump(),
                                        kDatasetFormatVersion));
        }
        data.teacher = j.value("teacher", "");
        data.seed = j.value("seed", std::uint64_t{0});
        continue;
      }
      const auto f = j.at("features").get<std::vector<double>>();
      if (f.size() != kEncodingSize) {
        throw InputError(fmt::format("{}:{}: expected {} features, got {}", path.string(), line_no,
                                     kEncodingSize, f.size()));
      }
      const double label = j.at("label").get<double>();
      if (!std::isfinite(label)) {
        throw InputError(fmt::format("{}:{}: non-finite label", path.string(), line_no));
      }
      data.features.emplace_back(Eigen::Map<const EncodedArchitecture>(f.data()));
      data.labels.push_back(label);
    } catch (const Json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return data;
}

DistillDataset build_distill_dataset(const SearchSpace& space, const Predictor& teacher,
                                     std::size_t n, std::uint64_t seed,
                                     const std::filesystem::path* progress_path) {
  if (n < 1) throw PreconditionError("distillation dataset needs n >= 1");
  Rng rng(seed);
  std::unordered_set<std::string> seen;
  std::vector<Architecture> archs;
  archs.reserve(n);
  const std::size_t max_draws = 100 * n;
  for (std::size_t draws = 0; archs.size() < n && draws < max_draws; ++draws) {
    Architecture a = sample(space, rng);
    if (seen.insert(canonical_string(a)).second) archs.push_back(std::move(a));
  }
  if (archs.size() < n) {
    throw InputError(fmt::format("only {} distinct architectures found in {} draws (wanted {})",
                                 archs.size(), max_draws, n));
  }

  DistillDataset data;
  data.teacher = teacher.name();
  data.seed = seed;
  for (std::size_t begin = 0; begin < n; begin += kLabelChunk) {
    const std::size_t end = std::min(n, begin + kLabelChunk);
    std::span<const Architecture> chunk(archs.data() + begin, end - begin);
    std::vector<double> labels;
    try {
      labels = teacher.predict_batch(chunk);
    } catch (...) {
      if (progress_path != nullptr) save_dataset(data, *progress_path);
      throw;
    }
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (!std::isfinite(labels[i])) {
        if (progress_path != nullptr) save_dataset(data, *progress_path);
        throw InputError(fmt::format("teacher {} returned a non-finite label", teacher.name()));
      }
      data.features.push_back(encode(space, chunk[i]));
      data.labels.push_back(labels[i]);
    }
    if (progress_path != nullptr) save_dataset(data, *progress_path);
  }
  return data;
}

// Regressor -------------------------------------------------------------------

FeatureNormalization FeatureNormalization::from_space(const SearchSpace& space) {
  const FeatureBounds b = feature_bounds(space);
  return {b.min, b.max};
}

template <typename Scalar>
MlpRegressorT<Scalar>::MlpRegressorT(Net net, FeatureNormalization features,
                                     LabelNormalization labels, TrainingConfig config)
    : net_(std::move(net)),
      features_(std::move(features)),
      labels_(labels),
      config_(std::move(config)) {}

template <typename Scalar>
typename MlpRegressorT<Scalar>::Net::Matrix MlpRegressorT<Scalar>::normalize(
    std::span<const EncodedArchitecture> encoded) const {
  typename Net::Matrix x(kEncodingSize, static_cast<Eigen::Index>(encoded.size()));
  std::uint64_t clamped = 0;
  for (std::size_t c = 0; c < encoded.size(); ++c) {
    for (int i = 0; i < kEncodingSize; ++i) {
      const double range = features_.max[i] - features_.min[i];
      double v = range > 0.0 ? (encoded[c][i] - features_.min[i]) / range : 0.0;
      if (v < 0.0 || v > 1.0) {
        ++clamped;
        v = std::clamp(v, 0.0, 1.0);
      }
      x(i, static_cast<Eigen::Index>(c)) = static_cast<Scalar>(v);
    }
  }
  if (clamped > 0) *clamped_ += clamped;
  return x;
}

template <typename Scalar>
std::vector<double> MlpRegressorT<Scalar>::predict_batch(
    std::span<const EncodedArchitecture> encoded) const {
  if (!trained()) throw StateError("regressor is not trained");
  const auto x = normalize(encoded);
  std::vector<double> result(encoded.size());
  // Column by column so batched and single predictions take the same
  // floating-point path.
  for (std::size_t c = 0; c < encoded.size(); ++c) {
    const auto out = net_.forward(x.col(static_cast<Eigen::Index>(c)));
    result[c] = static_cast<double>(out(0, 0)) * labels_.std + labels_.mean;
  }
  return result;
}

template <typename Scalar>
double MlpRegressorT<Scalar>::predict(const EncodedArchitecture& encoded) const {
  return predict_batch(std::span<const EncodedArchitecture>(&encoded, 1)).front();
}

template <typename Scalar>
MlpRegressorT<Scalar> train_regressor(const DistillDataset& data,
                                      const FeatureNormalization& normalization,
                                      const TrainingConfig& cfg, std::uint64_t seed) {
  if (data.size() < 2) throw PreconditionError("training needs at least 2 rows");
  using Net = Mlp<Scalar>;
  using Matrix = typename Net::Matrix;

  const std::size_t n = data.size();
  LabelNormalization labels;
  labels.mean = std::accumulate(data.labels.begin(), data.labels.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double y : data.labels) var += (y - labels.mean) * (y - labels.mean);
  labels.std = std::sqrt(var / static_cast<double>(n));
  std::vector<std::string> warnings;
  if (!(labels.std > 0.0)) {
    warnings.emplace_back("labels have zero standard deviation; using std = 1");
    spdlog::warn("distillation labels are constant; using std = 1");
    labels.std = 1.0;
  }

  std::vector<int> dims{kEncodingSize};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(1);
  Net net(dims);
  Rng rng(seed);
  net.initialize(rng);
  // Zero output layer: training starts from the label mean.
  net.weights().back().setZero();

  MlpRegressorT<Scalar> model(net, normalization, labels, cfg);
  const Matrix x = model.normalize(data.features);
  Matrix y(1, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y(0, static_cast<Eigen::Index>(i)) = static_cast<Scalar>((data.labels[i] - labels.mean) / labels.std);
  }
  auto full_loss = [&](const Net& m) {
    return static_cast<double>((m.forward(x) - y).squaredNorm()) / static_cast<double>(n);
  };

  const double initial = full_loss(net);
  AdamOptimizer<Scalar> adam(net, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  const auto batch = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.batch_size, n));
  Matrix xb(kEncodingSize, batch), yb(1, batch);
  typename Net::Gradients grads;
  for (int step = 0; step < cfg.steps; ++step) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      if (cursor == n) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      xb.col(b) = x.col(order[cursor]);
      yb(0, b) = y(0, order[cursor]);
      ++cursor;
    }
    net.loss_and_gradients(xb, yb, grads);
    adam.step(net, grads);
  }

  MlpRegressorT<Scalar> trained(std::move(net), normalization, labels, cfg);
  trained.initial_loss = initial;
  trained.final_loss = full_loss(trained.net());
  trained.warnings = std::move(warnings);
  return trained;
}

template class MlpRegressorT<float>;
template class MlpRegressorT<double>;
template MlpRegressorT<float> train_regressor<float>(const DistillDataset&,
                                                     const FeatureNormalization&,
                                                     const TrainingConfig&, std::uint64_t);
template MlpRegressorT<double> train_regressor<double>(const DistillDataset&,
                                                       const FeatureNormalization&,
                                                       const TrainingConfig&, std::uint64_t);

// Persistence -----------------------------------------------------------------

Json to_json(const MlpRegressor& model) {
  if (!model.trained()) throw StateError("cannot save an untrained regressor");
  Json weights = Json::array(), biases = Json::array();
  const auto& net = model.net();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weights()[l];
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    const auto& b = net.biases()[l];
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  const auto& fn = model.feature_normalization();
  return Json{
      {"format_version", kModelFormatVersion},
      {"scalar", "float32"},
      {"layer_dims", net.layer_dims()},
      {"weights", std::move(weights)},
      {"biases", std::move(biases)},
      {"feature_norm",
       {{"min", std::vector<double>(fn.min.data(), fn.min.data() + kEncodingSize)},
        {"max", std::vector<double>(fn.max.data(), fn.max.data() + kEncodingSize)}}},
      {"label_norm",
       {{"mean", model.label_normalization().mean}, {"std", model.label_normalization().std}}},
      {"training_config", model.training_config().to_json()},
      {"initial_loss", model.initial_loss},
      {"final_loss", model.final_loss},
  };
}

MlpRegressor regressor_from_json(const Json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError(fmt::format("model format_version {} is not supported (expected {})",
                                    version, kModelFormatVersion));
    }
    const auto dims = j.at("layer_dims").get<std::vector<int>>();
    if (dims.size() < 2 || dims.front() != kEncodingSize || dims.back() != 1) {
      throw FormatError("model layer_dims must start at 10 inputs and end at 1 output");
    }
    MlpRegressor::Net net(dims);
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1) {
      throw FormatError("model weight/bias count does not match layer_dims");
    }
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      auto& w = net.weights()[l];
      if (weights[l].size() != static_cast<std::size_t>(w.rows())) {
        throw FormatError(fmt::format("layer {} weight rows mismatch", l));
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = weights[l][static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(w.cols())) {
          throw FormatError(fmt::format("layer {} weight columns mismatch", l));
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<float>(row[static_cast<std::size_t>(c)]);
      }
      const auto b = biases[l].get<std::vector<double>>();
      if (b.size() != static_cast<std::size_t>(net.biases()[l].size())) {
        throw FormatError(fmt::format("layer {} bias size mismatch", l));
      }
      for (std::size_t i = 0; i < b.size(); ++i) net.biases()[l][static_cast<Eigen::Index>(i)] = static_cast<float>(b[i]);
    }
    FeatureNormalization fn;
    const auto mn = j.at("feature_norm").at("min").get<std::vector<double>>();
    const auto mx = j.at("feature_norm").at("max").get<std::vector<double>>();
    if (mn.size() != kEncodingSize || mx.size() != kEncodingSize) {
      throw FormatError("feature_norm must hold 10 values each");
    }
    fn.min = Eigen::Map<const EncodedArchitecture>(mn.data());
    fn.max = Eigen::Map<const EncodedArchitecture>(mx.data());
    LabelNormalization ln{j.at("label_norm").at("mean").get<double>(),
                          j.at("label_norm").at("std").get<double>()};
    if (!std::isfinite(ln.mean) || !(ln.std > 0.0) || !fn.min.allFinite() || !fn.max.allFinite()) {
      throw FormatError("model normalization statistics are not finite");
    }
    MlpRegressor model(std::move(net), fn, ln, TrainingConfig::from_json(j.at("training_config")));
    model.initial_loss = j.value("initial_loss", 0.0);
    model.final_loss = j.value("final_loss", 0.0);
    return model;
  } catch (const Json::exception& e) {
    throw FormatError(fmt::format("malformed model file: {}", e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("malformed model file: {}", e.what()));
  }
}

void save_model(const MlpRegressor& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write model {}", path.string()));
  out << to_json(model).dump() << '\n';
}

MlpRegressor load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open model {}", path.string()));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return regressor_from_json(j);
}

// MlpPredictor ----------------------------------------------------------------

MlpPredictor::MlpPredictor(SearchSpace space, MlpRegressor model, std::string name)
    : space_(std::move(space)), model_(std::move(model)), name_(std::move(name)) {
  if (!model_.trained()) throw StateError("MlpPredictor needs a trained regressor");
}

double MlpPredictor::predict(const Architecture& arch) const {
  return model_.predict(encode(space_, arch));
}

std::vector<double> MlpPredictor::predict_batch(std::span<const Architecture> archs) const {
  std::vector<EncodedArchitecture> encoded;
  encoded.reserve(archs.size());
  for (const auto& a : archs) encoded.push_back(encode(space_, a));
  return model_.predict_batch(encoded);
}

}  // namespace hsnas
