#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qtag::classify {

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 18;

// (index, value) pairs sorted by index, no duplicate indices.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

// Alphanumeric runs of length >= 2, followed by the bigrams of adjacent kept
// tokens joined with '_'.
std::vector<std::string> tokenize(std::string_view text);

// FNV-1a bucket of a token; feature_dim must be a power of two.
std::uint32_t feature_index(std::string_view token, std::uint32_t feature_dim);

// Hashed term counts, L2-normalized. No tokens gives the zero vector.
SparseVector featurize(std::span<const std::string> tokens, std::uint32_t feature_dim);

inline SparseVector featurize_text(std::string_view text, std::uint32_t feature_dim) {
  return featurize(tokenize(text), feature_dim);
}

bool is_power_of_two(std::uint32_t v);

}  // namespace qtag::classify
