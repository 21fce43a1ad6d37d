#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualitagger/corpus.hpp"
#include "qualitagger/features.hpp"
#include "qualitagger/quality.hpp"

namespace qtag::classify {

inline constexpr std::string_view kModelVersionTag = "QTAG1";

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 10;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  int batch_size = 32;

  bool operator==(const TrainConfig&) const = default;
};

// Throws UsageError on a non-positive learning rate, epochs or batch size, or
// a negative weight decay.
void validate(const TrainConfig& config);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Hashed bag-of-words logistic regression for one quality.
struct BinaryModel {
  Quality quality = Quality::Maintainability;
  std::uint32_t feature_dim = kDefaultFeatureDim;
  std::vector<float> weights;
  double bias = 0.0;
  TrainConfig train_config;
  std::string version_tag{kModelVersionTag};

  double logit(const SparseVector& x) const;

  bool operator==(const BinaryModel&) const = default;
};

// All-zero model: scores every text 0.5.
BinaryModel zero_model(Quality quality, std::uint32_t feature_dim = kDefaultFeatureDim);

double sigmoid(double z);

// sigmoid(w . featurize(tokenize(text)) + b)
double predict_score(const BinaryModel& model, std::string_view text);

// Mini-batch gradient descent on the summed logistic loss plus
// weight_decay / 2 * |w|^2, with a seeded shuffle each epoch. Deterministic.
// All examples must share one quality and both labels must be present. When
// epoch_objective is given it receives the regularized objective divided by
// the example count after each epoch.
BinaryModel train_binary(std::span<const corpus::LabeledExample> examples,
                         const TrainConfig& config,
                         std::uint32_t feature_dim = kDefaultFeatureDim,
                         std::vector<double>* epoch_objective = nullptr);

// "QTAG1\n" followed by one JSON object; weights are base64 little-endian
// float32.
std::string serialize(const BinaryModel& model);
BinaryModel deserialize_binary_model(std::string_view bytes);

void save(const BinaryModel& model, const std::filesystem::path& path);
BinaryModel load_binary_model(const std::filesystem::path& path);

// Shared by the model file formats.
std::string encode_floats(std::span<const float> values);
std::vector<float> decode_floats(std::string_view base64);
// Splits "QTAG1\n{...}" into its JSON payload; DataError on a wrong header.
nlohmann::json parse_model_container(std::string_view bytes);

}  // namespace qtag::classify
