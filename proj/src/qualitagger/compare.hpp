#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qtag::evalstat {

// Discordant-pair total at or below which McNemar uses the exact binomial
// test; above it, chi-square with continuity correction.
inline constexpr std::uint64_t kMcNemarExactLimit = 25;

// Two-sided McNemar test on discordant counts b and c. p = 1 when b + c = 0.
double mcnemar_exact(std::uint64_t b, std::uint64_t c);

struct DiscordantPairs {
  std::uint64_t b = 0;  // model A right, model B wrong
  std::uint64_t c = 0;  // model A wrong, model B right
};

DiscordantPairs discordant_pairs(std::span<const int> preds_a, std::span<const int> preds_b,
                                 std::span<const int> truths);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double x) const { return low <= x && x <= high; }
};

// Linear-interpolation percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

inline constexpr std::size_t kDefaultBootstrapIterations = 10000;

struct BootstrapResult {
  Interval ci_a;
  Interval ci_b;
  Interval ci_diff;  // F1(A) - F1(B)
  bool significant = false;  // ci_diff excludes 0
  std::vector<double> f1_a;  // per-resample F1, in iteration order
  std::vector<double> f1_b;
};

// Resamples instances with replacement; iteration i draws from a stream
// derived from (seed, i), so the result does not depend on threading.
// 95% percentile intervals.
BootstrapResult bootstrap_f1(std::span<const int> preds_a, std::span<const int> preds_b,
                             std::span<const int> truths, std::size_t iterations,
                             std::uint64_t seed);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Welch's unequal-variance two-sample t-test, two-sided.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

enum class Magnitude { Negligible, Small, Medium, Large };

// |d| < 0.147 negligible, < 0.33 small, < 0.474 medium, otherwise large.
Magnitude magnitude(double delta);
std::string_view to_string(Magnitude m);
char letter(Magnitude m);  // 'N', 'S', 'M', 'L'

struct CliffsDelta {
  double delta = 0.0;
  Magnitude magnitude = Magnitude::Negligible;
};

// (#(x > y) - #(x < y)) / (|xs| |ys|) over all pairs.
CliffsDelta cliffs_delta(std::span<const double> xs, std::span<const double> ys);

struct ComparisonReport {
  std::size_t n = 0;
  double f1_a = 0.0;
  double f1_b = 0.0;
  DiscordantPairs discordant;
  double mcnemar_p = 1.0;
  BootstrapResult bootstrap;
  double t_stat = 0.0;
  double t_p = 1.0;
  double cliffs_delta = 0.0;
  Magnitude magnitude = Magnitude::Negligible;
};

// Paired comparison of two binary classifiers on the same instances. The
// t-test and Cliff's delta run on the bootstrap F1 samples.
ComparisonReport compare_models(std::span<const int> preds_a, std::span<const int> preds_b,
                                std::span<const int> truths, std::size_t iterations,
                                std::uint64_t seed);

}  // namespace qtag::evalstat
