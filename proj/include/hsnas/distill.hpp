#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hsnas/json.hpp"
#include "hsnas/mlp.hpp"
#include "hsnas/predictor.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kDatasetFormatVersion = 1;

struct TrainingConfig {
  std::vector<int> hidden_dims{400, 400, 400};
  int batch_size = 128;
  double learning_rate = 1e-5;
  int steps = 5000;
  // Adam moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  Json to_json() const;
  static TrainingConfig from_json(const Json& j);
};

struct DistillDataset {
  std::vector<EncodedArchitecture> features;
  std::vector<double> labels;
  std::string teacher;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Samples `n` distinct architectures (duplicates are redrawn, at most
/// 100*n draws in total) and labels each with `teacher`. Labels are
/// requested in chunks; when `progress_path` is set the rows labelled so far
/// are written there after every chunk and left in place if the teacher
/// throws.
DistillDataset build_distill_dataset(const SearchSpace& space, const Predictor& teacher,
                                     std::size_t n, std::uint64_t seed,
                                     const std::filesystem::path* progress_path = nullptr);

/// JSONL: one header line {"format_version", "teacher", "seed", "rows"}
/// followed by one {"features": [10 reals], "label": real} per row.
void save_dataset(const DistillDataset& data, const std::filesystem::path& path);
DistillDataset load_dataset(const std::filesystem::path& path);

/// Min-max scaling of each feature to [0, 1]; features with max == min map to 0.
struct FeatureNormalization {
  EncodedArchitecture min = EncodedArchitecture::Zero();
  EncodedArchitecture max = EncodedArchitecture::Zero();

  static FeatureNormalization from_space(const SearchSpace& space);
};

struct LabelNormalization {
  double mean = 0.0;
  double std = 1.0;
};

/// LLM-Distill-PP regressor: 10 -> hidden... -> 1 ReLU network over
/// normalized encodings, predicting a z-scored label.
template <typename Scalar>
class MlpRegressorT {
 public:
  using Net = Mlp<Scalar>;

  MlpRegressorT() = default;
  MlpRegressorT(Net net, FeatureNormalization features, LabelNormalization labels,
                TrainingConfig config);

  bool trained() const noexcept { return net_.num_layers() > 0; }

  /// Throws StateError when untrained. Features outside the normalization
  /// range are clamped to [0, 1] and counted in clamped_features().
  double predict(const EncodedArchitecture& encoded) const;
  std::vector<double> predict_batch(std::span<const EncodedArchitecture> encoded) const;

  /// Scaled features as a 10 x n batch.
  typename Net::Matrix normalize(std::span<const EncodedArchitecture> encoded) const;

  const Net& net() const noexcept { return net_; }
  Net& net() noexcept { return net_; }
  const FeatureNormalization& feature_normalization() const noexcept { return features_; }
  const LabelNormalization& label_normalization() const noexcept { return labels_; }
  const TrainingConfig& training_config() const noexcept { return config_; }

  double initial_loss = 0.0;  // full-data normalized MSE before the first step
  double final_loss = 0.0;    // ... and after the last step
  std::vector<std::string> warnings;

  std::uint64_t clamped_features() const noexcept { return clamped_->load(); }

 private:
  Net net_;
  FeatureNormalization features_;
  LabelNormalization labels_;
  TrainingConfig config_;
  std::shared_ptr<std::atomic<std::uint64_t>> clamped_ =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

using MlpRegressor = MlpRegressorT<float>;

/// Trains for exactly cfg.steps minibatch Adam steps on the MSE of z-scored
/// labels. Hidden layers start He-uniform and the output layer at zero. Minibatches walk a seeded permutation that is reshuffled every
/// epoch. A zero label std is replaced by 1 and recorded in `warnings`.
template <typename Scalar = float>
MlpRegressorT<Scalar> train_regressor(const DistillDataset& data,
                                      const FeatureNormalization& normalization,
                                      const TrainingConfig& cfg, std::uint64_t seed);

template <typename Scalar>
double regressor_predict(const MlpRegressorT<Scalar>& model, const EncodedArchitecture& encoded) {
  return model.predict(encoded);
}

Json to_json(const MlpRegressor& model);
MlpRegressor regressor_from_json(const Json& j);
void save_model(const MlpRegressor& model, const std::filesystem::path& path);
MlpRegressor load_model(const std::filesystem::path& path);

/// Predictor backed by a trained regressor.
class MlpPredictor final : public Predictor {
 public:
  MlpPredictor(SearchSpace space, MlpRegressor model, std::string name = "llm-distill-pp");

  std::string name() const override { return name_; }
  double predict(const Architecture& arch) const override;
  std::vector<double> predict_batch(std::span<const Architecture> archs) const override;

  const MlpRegressor& model() const noexcept { return model_; }

 private:
  SearchSpace space_;
  MlpRegressor model_;
  std::string name_;
};

}  // namespace hsnas
