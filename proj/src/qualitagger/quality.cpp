#include "qualitagger/quality.hpp"

#include <algorithm>
#include <cctype>

namespace qtag {

namespace {

constexpr std::array<std::string_view, kQualityCount> kWireNames = {
    "maintainability", "security",    "reliability", "usability",
    "compatibility",   "performance", "portability",
};

constexpr std::array<std::string_view, kQualityCount> kDisplayNames = {
    "Maintainability", "Security",    "Reliability", "Usability",
    "Compatibility",   "Performance", "Portability",
};

}  // namespace

std::string_view to_string(Quality q) { return kWireNames[index_of(q)]; }

std::string_view display_name(Quality q) { return kDisplayNames[index_of(q)]; }

std::optional<Quality> parse_quality(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Quality q : kAllQualities) {
    if (kWireNames[index_of(q)] == lowered) return q;
  }
  return std::nullopt;
}

std::vector<Quality> QualitySet::members() const {
  std::vector<Quality> out;
  for (Quality q : kAllQualities) {
    if (contains(q)) out.push_back(q);
  }
  return out;
}

std::vector<std::string> to_strings(QualitySet s) {
  std::vector<std::string> out;
  for (Quality q : s.members()) out.emplace_back(to_string(q));
  return out;
}

}  // namespace qtag
