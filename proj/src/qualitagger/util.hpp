#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtag {

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (seed, stream) pairs, e.g. one per bootstrap
// iteration, so results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 1));
}

// Seeded generator with portable sampling helpers. std::uniform_int_distribution
// and std::shuffle are implementation-defined, so they are not used for
// anything that ends up in an output file.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct elements chosen uniformly; the result keeps the input order.
  template <typename T>
  std::vector<T> sample(const std::vector<T>& v, std::size_t k) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    k = std::min(k, v.size());
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + below(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<T> out;
    out.reserve(k);
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 instant: YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM). Fractional
// seconds are truncated. Throws DataError when the text is not a valid instant.
Timestamp parse_timestamp(std::string_view text);
// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

// Whole file; transparently gunzips content that starts with the gzip magic.
std::string read_file(const std::filesystem::path& path);
std::string gunzip_if_needed(std::string bytes);
void write_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\n', drops a trailing '\r' and blank lines.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace qtag
