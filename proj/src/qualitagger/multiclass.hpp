#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qualitagger/binary_model.hpp"

namespace qtag::classify {

using ClassWeights = std::array<double, kQualityCount>;

// w_c = N / (K * n_c) where N is the total count and K the number of classes
// in `counts`. Classes missing from `counts` get the neutral weight 1.0.
// Throws DataError for a zero count or an empty map.
ClassWeights class_weights(const std::map<Quality, std::size_t>& counts);

struct MulticlassExample {
  std::string text;
  Quality quality = Quality::Maintainability;
};

// Single training label for an issue carrying several qualities: the first
// one in canonical order.
std::optional<Quality> multiclass_label(QualitySet qualities);

// Softmax regression over the seven qualities; rows follow canonical order.
struct MulticlassModel {
  std::uint32_t feature_dim = kDefaultFeatureDim;
  std::vector<float> weights;  // kQualityCount x feature_dim, row-major
  std::array<double, kQualityCount> bias{};
  ClassWeights class_weights{1, 1, 1, 1, 1, 1, 1};
  TrainConfig train_config;
  std::string version_tag{kModelVersionTag};

  bool operator==(const MulticlassModel&) const = default;
};

MulticlassModel zero_multiclass_model(std::uint32_t feature_dim = kDefaultFeatureDim);

struct MulticlassPrediction {
  Quality quality;  // argmax, canonical-order-first on ties
  std::array<double, kQualityCount> probabilities;
};

std::array<double, kQualityCount> softmax(const std::array<double, kQualityCount>& logits);

MulticlassPrediction predict_multiclass(const MulticlassModel& model, std::string_view text);

// Class-weighted softmax cross-entropy summed over examples plus
// weight_decay / 2 * |W|^2, mini-batch gradient descent. Needs at least two classes;
// with require_all_classes every one of the seven must be present.
MulticlassModel train_multiclass(std::span<const MulticlassExample> examples,
                                 const TrainConfig& config,
                                 std::uint32_t feature_dim = kDefaultFeatureDim,
                                 bool require_all_classes = false);

std::string serialize(const MulticlassModel& model);
MulticlassModel deserialize_multiclass_model(std::string_view bytes);
void save(const MulticlassModel& model, const std::filesystem::path& path);
MulticlassModel load_multiclass_model(const std::filesystem::path& path);

}  // namespace qtag::classify
