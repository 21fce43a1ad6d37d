#include "qualitagger/compare.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "qualitagger/error.hpp"
#include "qualitagger/metrics.hpp"
#include "qualitagger/util.hpp"

namespace qtag::evalstat {

double mcnemar_exact(std::uint64_t b, std::uint64_t c) {
  const std::uint64_t n = b + c;
  if (n == 0) return 1.0;
  if (n > kMcNemarExactLimit) {
    const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    const double stat = std::max(diff, 0.0) * std::max(diff, 0.0) / static_cast<double>(n);
    return std::min(1.0, boost::math::cdf(boost::math::complement(
                             boost::math::chi_squared_distribution<double>(1.0), stat)));
  }
  // n <= 25: binomial coefficients and 2^n are exact in a double.
  const std::uint64_t k = std::min(b, c);
  double coeff = 1.0;
  double tail = 0.0;
  for (std::uint64_t i = 0; i <= k; ++i) {
    tail += coeff;
    coeff = coeff * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
}

DiscordantPairs discordant_pairs(std::span<const int> preds_a, std::span<const int> preds_b,
                                 std::span<const int> truths) {
  if (preds_a.size() != truths.size() || preds_b.size() != truths.size()) {
    throw DataError("prediction vectors must align with the truth vector");
  }
  DiscordantPairs d;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const bool a_right = (preds_a[i] != 0) == (truths[i] != 0);
    const bool b_right = (preds_b[i] != 0) == (truths[i] != 0);
    d.b += a_right && !b_right;
    d.c += !a_right && b_right;
  }
  return d;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

BootstrapResult bootstrap_f1(std::span<const int> preds_a, std::span<const int> preds_b,
                             std::span<const int> truths, std::size_t iterations,
                             std::uint64_t seed) {
  if (preds_a.size() != truths.size() || preds_b.size() != truths.size()) {
    throw DataError("prediction vectors must align with the truth vector");
  }
  if (truths.empty()) throw DataError("bootstrap needs at least one instance");
  if (iterations == 0) throw UsageError("bootstrap needs at least one iteration");

  const std::size_t n = truths.size();
  BootstrapResult r;
  r.f1_a.assign(iterations, 0.0);
  r.f1_b.assign(iterations, 0.0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t it = begin; it < end; ++it) {
      SeededRng rng(derive_seed(seed, it));
      ConfusionCounts ca, cb;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = rng.below(n);
        const bool t = truths[i] != 0;
        const bool pa = preds_a[i] != 0;
        const bool pb = preds_b[i] != 0;
        ca.tp += pa && t;
        ca.fp += pa && !t;
        ca.fn += !pa && t;
        cb.tp += pb && t;
        cb.fp += pb && !t;
        cb.fn += !pb && t;
      }
      r.f1_a[it] = f1(ca).value;
      r.f1_b[it] = f1(cb).value;
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  if (workers == 1 || iterations < 256) {
    run_range(0, iterations);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (iterations + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(iterations, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  std::vector<double> diff(iterations);
  for (std::size_t i = 0; i < iterations; ++i) diff[i] = r.f1_a[i] - r.f1_b[i];
  r.ci_a = {percentile(r.f1_a, 2.5), percentile(r.f1_a, 97.5)};
  r.ci_b = {percentile(r.f1_b, 2.5), percentile(r.f1_b, 97.5)};
  r.ci_diff = {percentile(diff, 2.5), percentile(diff, 97.5)};
  r.significant = !r.ci_diff.contains(0.0);
  return r;
}

namespace {

void mean_var(std::span<const double> xs, double& mean, double& var) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("t-test needs at least 2 samples per group");
  double ma, va, mb, vb;
  mean_var(a, ma, va);
  mean_var(b, mb, vb);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;

  TTestResult r;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 1.0, na + nb - 2.0};
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.df = na + nb - 2.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  // Two-sided tail of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
  const double x = r.df / (r.df + r.t * r.t);
  r.p = std::clamp(boost::math::ibeta(r.df / 2.0, 0.5, x), 0.0, 1.0);
  return r;
}

Magnitude magnitude(double delta) {
  const double d = std::abs(delta);
  if (d < 0.147) return Magnitude::Negligible;
  if (d < 0.33) return Magnitude::Small;
  if (d < 0.474) return Magnitude::Medium;
  return Magnitude::Large;
}

std::string_view to_string(Magnitude m) {
  switch (m) {
    case Magnitude::Negligible: return "negligible";
    case Magnitude::Small: return "small";
    case Magnitude::Medium: return "medium";
    case Magnitude::Large: return "large";
  }
  return "negligible";
}

char letter(Magnitude m) {
  switch (m) {
    case Magnitude::Negligible: return 'N';
    case Magnitude::Small: return 'S';
    case Magnitude::Medium: return 'M';
    case Magnitude::Large: return 'L';
  }
  return 'N';
}

CliffsDelta cliffs_delta(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw DataError("Cliff's delta needs two non-empty samples");
  std::vector<double> sorted_y(ys.begin(), ys.end());
  std::sort(sorted_y.begin(), sorted_y.end());
  // For each x: #(y < x) - #(y > x), via binary search.
  long double dominance = 0;
  for (double x : xs) {
    const auto below = std::lower_bound(sorted_y.begin(), sorted_y.end(), x) - sorted_y.begin();
    const auto above = sorted_y.end() - std::upper_bound(sorted_y.begin(), sorted_y.end(), x);
    dominance += static_cast<long double>(below - above);
  }
  CliffsDelta out;
  out.delta = static_cast<double>(dominance / (static_cast<long double>(xs.size()) *
                                               static_cast<long double>(ys.size())));
  out.magnitude = magnitude(out.delta);
  return out;
}

ComparisonReport compare_models(std::span<const int> preds_a, std::span<const int> preds_b,
                                std::span<const int> truths, std::size_t iterations,
                                std::uint64_t seed) {
  ComparisonReport r;
  r.n = truths.size();
  r.discordant = discordant_pairs(preds_a, preds_b, truths);
  r.mcnemar_p = mcnemar_exact(r.discordant.b, r.discordant.c);
  r.f1_a = f1(confusion_from_predictions(preds_a, truths)).value;
  r.f1_b = f1(confusion_from_predictions(preds_b, truths)).value;
  r.bootstrap = bootstrap_f1(preds_a, preds_b, truths, iterations, seed);
  if (iterations >= 2) {
    const TTestResult t = welch_t_test(r.bootstrap.f1_a, r.bootstrap.f1_b);
    r.t_stat = t.t;
    r.t_p = t.p;
  }
  const CliffsDelta d = cliffs_delta(r.bootstrap.f1_a, r.bootstrap.f1_b);
  r.cliffs_delta = d.delta;
  r.magnitude = d.magnitude;
  return r;
}

}  // namespace qtag::evalstat
