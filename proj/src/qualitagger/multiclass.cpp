#include "qualitagger/multiclass.hpp"

#include <cmath>
#include <numeric>

#include "qualitagger/error.hpp"
#include "qualitagger/util.hpp"

namespace qtag::classify {

using nlohmann::json;

ClassWeights class_weights(const std::map<Quality, std::size_t>& counts) {
  if (counts.empty()) throw DataError("class weights need at least one class");
  std::size_t total = 0;
  for (const auto& [q, n] : counts) {
    if (n == 0) {
      throw DataError("class '" + std::string(to_string(q)) + "' has zero examples");
    }
    total += n;
  }
  const double k = static_cast<double>(counts.size());
  ClassWeights w;
  w.fill(1.0);
  for (const auto& [q, n] : counts) {
    w[index_of(q)] = static_cast<double>(total) / (k * static_cast<double>(n));
  }
  return w;
}

std::optional<Quality> multiclass_label(QualitySet qualities) {
  for (Quality q : kAllQualities) {
    if (qualities.contains(q)) return q;
  }
  return std::nullopt;
}

MulticlassModel zero_multiclass_model(std::uint32_t feature_dim) {
  MulticlassModel m;
  m.feature_dim = feature_dim;
  m.weights.assign(static_cast<std::size_t>(feature_dim) * kQualityCount, 0.0f);
  return m;
}

std::array<double, kQualityCount> softmax(const std::array<double, kQualityCount>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::array<double, kQualityCount> p;
  double sum = 0.0;
  for (std::size_t c = 0; c < kQualityCount; ++c) {
    p[c] = std::exp(logits[c] - top);
    sum += p[c];
  }
  for (double& x : p) x /= sum;
  return p;
}

MulticlassPrediction predict_multiclass(const MulticlassModel& model, std::string_view text) {
  const SparseVector x = featurize_text(text, model.feature_dim);
  std::array<double, kQualityCount> logits = model.bias;
  for (std::size_t c = 0; c < kQualityCount; ++c) {
    const float* row = model.weights.data() + c * model.feature_dim;
    for (const auto& [i, v] : x) logits[c] += static_cast<double>(row[i]) * v;
  }
  MulticlassPrediction out{Quality::Maintainability, softmax(logits)};
  std::size_t best = 0;
  for (std::size_t c = 1; c < kQualityCount; ++c) {
    if (out.probabilities[c] > out.probabilities[best]) best = c;
  }
  out.quality = kAllQualities[best];
  return out;
}

MulticlassModel train_multiclass(std::span<const MulticlassExample> examples,
                                 const TrainConfig& config, std::uint32_t feature_dim,
                                 bool require_all_classes) {
  validate(config);
  if (!is_power_of_two(feature_dim)) throw UsageError("feature_dim must be a power of two");
  std::map<Quality, std::size_t> counts;
  for (const auto& ex : examples) ++counts[ex.quality];
  if (require_all_classes) {
    for (Quality q : kAllQualities) {
      if (!counts.contains(q)) {
        throw DataError("class '" + std::string(to_string(q)) + "' has zero examples");
      }
    }
  }
  if (counts.size() < 2) throw DataError("multiclass training needs at least two classes");
  const ClassWeights cw = class_weights(counts);

  const std::size_t n = examples.size();
  const std::size_t dim = feature_dim;
  std::vector<SparseVector> features;
  features.reserve(n);
  for (const auto& ex : examples) features.push_back(featurize_text(ex.text, feature_dim));

  std::vector<double> v(dim * kQualityCount, 0.0);
  double scale = 1.0;
  std::array<double, kQualityCount> bias{};
  auto probabilities = [&](const SparseVector& x) {
    std::array<double, kQualityCount> logits;
    for (std::size_t c = 0; c < kQualityCount; ++c) {
      const double* row = v.data() + c * dim;
      double dot = 0.0;
      for (const auto& [i, val] : x) dot += row[i] * val;
      logits[c] = scale * dot + bias[c];
    }
    return softmax(logits);
  };

  const double lr = config.learning_rate;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(config.seed);
  std::vector<std::array<double, kQualityCount>> residual;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      residual.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const std::size_t y = index_of(examples[i].quality);
        const double wy = cw[y];
        auto p = probabilities(features[i]);
        for (std::size_t c = 0; c < kQualityCount; ++c) {
          p[c] = wy * (p[c] - (c == y ? 1.0 : 0.0));
        }
        residual.push_back(p);
      }
      scale *= 1.0 - lr * config.weight_decay * static_cast<double>(end - start) /
                         static_cast<double>(n);
      std::array<double, kQualityCount> bias_grad{};
      for (std::size_t k = start; k < end; ++k) {
        const auto& g = residual[k - start];
        for (std::size_t c = 0; c < kQualityCount; ++c) {
          bias_grad[c] += g[c];
          const double step = lr * g[c] / scale;
          double* row = v.data() + c * dim;
          for (const auto& [j, val] : features[order[k]]) row[j] -= step * val;
        }
      }
      for (std::size_t c = 0; c < kQualityCount; ++c) bias[c] -= lr * bias_grad[c];
      if (scale < 1e-6) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }
  }

  MulticlassModel model;
  model.feature_dim = feature_dim;
  model.weights.resize(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) model.weights[j] = static_cast<float>(scale * v[j]);
  model.bias = bias;
  model.class_weights = cw;
  model.train_config = config;
  return model;
}

std::string serialize(const MulticlassModel& model) {
  json j = {
      {"kind", "multiclass"},
      {"classes", to_strings(QualitySet::all())},
      {"feature_dim", model.feature_dim},
      {"bias", model.bias},
      {"class_weights", model.class_weights},
      {"weights", encode_floats(model.weights)},
      {"train_config", to_json(model.train_config)},
  };
  return std::string(kModelVersionTag) + "\n" + j.dump() + "\n";
}

MulticlassModel deserialize_multiclass_model(std::string_view bytes) {
  const json j = parse_model_container(bytes);
  MulticlassModel m;
  try {
    if (j.value("kind", "") != "multiclass") throw DataError("not a multiclass model");
    if (j.at("classes").get<std::vector<std::string>>() != to_strings(QualitySet::all())) {
      throw DataError("multiclass model rows are not in canonical quality order");
    }
    m.feature_dim = j.at("feature_dim").get<std::uint32_t>();
    m.bias = j.at("bias").get<std::array<double, kQualityCount>>();
    m.class_weights = j.at("class_weights").get<ClassWeights>();
    m.weights = decode_floats(j.at("weights").get<std::string>());
    m.train_config = train_config_from_json(j.at("train_config"));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt model payload: ") + e.what());
  }
  if (!is_power_of_two(m.feature_dim) ||
      m.weights.size() != static_cast<std::size_t>(m.feature_dim) * kQualityCount) {
    throw DataError("model weight count does not match feature_dim");
  }
  for (double w : m.class_weights) {
    if (!(w > 0.0)) throw DataError("class weights must be positive");
  }
  return m;
}

void save(const MulticlassModel& model, const std::filesystem::path& path) {
  write_file(path, serialize(model));
}

MulticlassModel load_multiclass_model(const std::filesystem::path& path) {
  try {
    return deserialize_multiclass_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace qtag::classify
