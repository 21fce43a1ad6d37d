#include "qualitagger/binary_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "qualitagger/error.hpp"
#include "qualitagger/util.hpp"

namespace qtag::classify {

using nlohmann::json;

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw UsageError("learning_rate must be > 0");
  }
  if (config.epochs < 1) throw UsageError("epochs must be >= 1");
  if (!(config.weight_decay >= 0.0) || !std::isfinite(config.weight_decay)) {
    throw UsageError("weight_decay must be >= 0");
  }
  if (config.batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (config.learning_rate * config.weight_decay >= 1.0) {
    throw UsageError("learning_rate * weight_decay must be < 1");
  }
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"weight_decay", c.weight_decay},   {"seed", c.seed},
          {"batch_size", c.batch_size}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.batch_size = j.at("batch_size").get<int>();
  return c;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double BinaryModel::logit(const SparseVector& x) const {
  double z = bias;
  for (const auto& [i, v] : x) z += static_cast<double>(weights[i]) * v;
  return z;
}

BinaryModel zero_model(Quality quality, std::uint32_t feature_dim) {
  BinaryModel m;
  m.quality = quality;
  m.feature_dim = feature_dim;
  m.weights.assign(feature_dim, 0.0f);
  return m;
}

double predict_score(const BinaryModel& model, std::string_view text) {
  return sigmoid(model.logit(featurize_text(text, model.feature_dim)));
}

namespace {

// log(1 + exp(-m)) without overflow.
double logistic_loss(double margin) {
  return std::log1p(std::exp(-std::abs(margin))) + std::max(0.0, -margin);
}

}  // namespace

BinaryModel train_binary(std::span<const corpus::LabeledExample> examples,
                         const TrainConfig& config, std::uint32_t feature_dim,
                         std::vector<double>* epoch_objective) {
  validate(config);
  if (!is_power_of_two(feature_dim)) throw UsageError("feature_dim must be a power of two");
  if (examples.empty()) throw DataError("cannot train on an empty dataset");
  const Quality quality = examples.front().quality;
  std::size_t positives = 0;
  for (const auto& ex : examples) {
    if (ex.quality != quality) throw DataError("training examples mix several qualities");
    positives += ex.label == 1 ? 1 : 0;
  }
  if (positives == 0 || positives == examples.size()) {
    throw DataError("training data for '" + std::string(to_string(quality)) +
                    "' must contain both positive and negative examples");
  }

  const std::size_t n = examples.size();
  std::vector<SparseVector> features;
  features.reserve(n);
  for (const auto& ex : examples) features.push_back(featurize_text(ex.text, feature_dim));

  // Objective: sum of logistic losses + weight_decay / 2 * |w|^2. A batch of
  // size B takes the fraction B / n of the penalty. Weights are held as
  // scale * v so the per-step decay is O(1).
  std::vector<double> v(feature_dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;
  auto logit = [&](const SparseVector& x) {
    double dot = 0.0;
    for (const auto& [i, val] : x) dot += v[i] * val;
    return scale * dot + bias;
  };

  const double lr = config.learning_rate;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(config.seed);
  std::vector<double> residual;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      residual.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        residual.push_back(sigmoid(logit(features[i])) - examples[i].label);
      }
      scale *= 1.0 - lr * config.weight_decay * static_cast<double>(end - start) /
                         static_cast<double>(n);
      double bias_grad = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const double g = residual[k - start];
        bias_grad += g;
        const double step = lr * g / scale;
        for (const auto& [j, val] : features[order[k]]) v[j] -= step * val;
      }
      bias -= lr * bias_grad;
      if (scale < 1e-6) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }
    if (epoch_objective) {
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = examples[i].label == 1 ? 1.0 : -1.0;
        loss += logistic_loss(y * logit(features[i]));
      }
      double sq = 0.0;
      for (double w : v) sq += w * w;
      epoch_objective->push_back(
          (loss + 0.5 * config.weight_decay * scale * scale * sq) / static_cast<double>(n));
    }
  }

  BinaryModel model;
  model.quality = quality;
  model.feature_dim = feature_dim;
  model.weights.resize(feature_dim);
  for (std::size_t j = 0; j < feature_dim; ++j) {
    model.weights[j] = static_cast<float>(scale * v[j]);
  }
  model.bias = bias;
  model.train_config = config;
  return model;
}

std::string encode_floats(std::span<const float> values) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(values.data());
  return base64_encode({bytes, values.size() * sizeof(float)});
}

std::vector<float> decode_floats(std::string_view base64) {
  const std::vector<std::uint8_t> bytes = base64_decode(base64);
  if (bytes.size() % sizeof(float) != 0) throw DataError("weight payload is not float32-aligned");
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json parse_model_container(std::string_view bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string_view::npos || bytes.substr(0, nl) != kModelVersionTag) {
    throw DataError("not a QTAG1 model file");
  }
  try {
    return json::parse(bytes.substr(nl + 1));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt model payload: ") + e.what());
  }
}

std::string serialize(const BinaryModel& model) {
  json j = {
      {"quality", to_string(model.quality)},
      {"feature_dim", model.feature_dim},
      {"bias", model.bias},
      {"weights", encode_floats(model.weights)},
      {"train_config", to_json(model.train_config)},
  };
  return std::string(kModelVersionTag) + "\n" + j.dump() + "\n";
}

BinaryModel deserialize_binary_model(std::string_view bytes) {
  const json j = parse_model_container(bytes);
  BinaryModel m;
  try {
    const std::string q = j.at("quality").get<std::string>();
    auto quality = parse_quality(q);
    if (!quality) throw DataError("unknown quality '" + q + "'");
    m.quality = *quality;
    m.feature_dim = j.at("feature_dim").get<std::uint32_t>();
    m.bias = j.at("bias").get<double>();
    m.weights = decode_floats(j.at("weights").get<std::string>());
    m.train_config = train_config_from_json(j.at("train_config"));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt model payload: ") + e.what());
  }
  if (!is_power_of_two(m.feature_dim) || m.weights.size() != m.feature_dim) {
    throw DataError("model weight count does not match feature_dim");
  }
  for (float w : m.weights) {
    if (!std::isfinite(w)) throw DataError("model contains non-finite weights");
  }
  if (!std::isfinite(m.bias)) throw DataError("model contains a non-finite bias");
  return m;
}

void save(const BinaryModel& model, const std::filesystem::path& path) {
  write_file(path, serialize(model));
}

BinaryModel load_binary_model(const std::filesystem::path& path) {
  try {
    return deserialize_binary_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace qtag::classify
