#include "qualitagger/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "qualitagger/error.hpp"
#include "qualitagger/util.hpp"

namespace qtag::classify {

bool is_power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> unigrams;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) unigrams.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current += c;
    } else {
      flush();
    }
  }
  flush();

  std::vector<std::string> tokens = unigrams;
  for (std::size_t i = 0; i + 1 < unigrams.size(); ++i) {
    tokens.push_back(unigrams[i] + "_" + unigrams[i + 1]);
  }
  return tokens;
}

std::uint32_t feature_index(std::string_view token, std::uint32_t feature_dim) {
  return static_cast<std::uint32_t>(fnv1a64(token) & (feature_dim - 1));
}

SparseVector featurize(std::span<const std::string> tokens, std::uint32_t feature_dim) {
  if (!is_power_of_two(feature_dim)) throw UsageError("feature_dim must be a power of two");
  std::vector<std::uint32_t> idx;
  idx.reserve(tokens.size());
  for (const auto& t : tokens) idx.push_back(feature_index(t, feature_dim));
  std::sort(idx.begin(), idx.end());

  SparseVector v;
  for (std::uint32_t i : idx) {
    if (!v.empty() && v.back().first == i) {
      v.back().second += 1.0;
    } else {
      v.emplace_back(i, 1.0);
    }
  }
  double norm = 0.0;
  for (const auto& [i, x] : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& [i, x] : v) x /= norm;
  return v;
}

}  // namespace qtag::classify
