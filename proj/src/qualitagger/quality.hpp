#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtag {

// The seven system qualities. Enumerator order is the canonical order used
// for serialization, model rows, and tie-breaking.
enum class Quality : std::uint8_t {
  Maintainability = 0,
  Security,
  Reliability,
  Usability,
  Compatibility,
  Performance,
  Portability,
};

inline constexpr std::size_t kQualityCount = 7;

inline constexpr std::array<Quality, kQualityCount> kAllQualities = {
    Quality::Maintainability, Quality::Security,    Quality::Reliability,
    Quality::Usability,       Quality::Compatibility, Quality::Performance,
    Quality::Portability,
};

constexpr std::size_t index_of(Quality q) { return static_cast<std::size_t>(q); }

// Lowercase wire name ("security").
std::string_view to_string(Quality q);
// Capitalized display name ("Security").
std::string_view display_name(Quality q);
// Case-insensitive; accepts the wire and display names.
std::optional<Quality> parse_quality(std::string_view name);

// Small value-type set over the seven qualities, iterated in canonical order.
class QualitySet {
 public:
  constexpr QualitySet() = default;
  QualitySet(std::initializer_list<Quality> qs) {
    for (Quality q : qs) insert(q);
  }

  static constexpr QualitySet from_bits(std::uint8_t bits) {
    QualitySet s;
    s.bits_ = bits & kMask;
    return s;
  }
  static constexpr QualitySet all() { return from_bits(kMask); }

  constexpr void insert(Quality q) { bits_ |= bit(q); }
  constexpr void erase(Quality q) { bits_ &= static_cast<std::uint8_t>(~bit(q)); }
  constexpr bool contains(Quality q) const { return (bits_ & bit(q)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  int size() const { return __builtin_popcount(bits_); }

  std::vector<Quality> members() const;

  constexpr QualitySet operator|(QualitySet o) const { return from_bits(bits_ | o.bits_); }
  constexpr QualitySet operator&(QualitySet o) const { return from_bits(bits_ & o.bits_); }
  constexpr QualitySet operator^(QualitySet o) const { return from_bits(bits_ ^ o.bits_); }
  QualitySet& operator|=(QualitySet o) {
    bits_ |= o.bits_;
    return *this;
  }
  constexpr bool operator==(const QualitySet&) const = default;

 private:
  static constexpr std::uint8_t kMask = 0x7F;
  static constexpr std::uint8_t bit(Quality q) {
    return static_cast<std::uint8_t>(1u << index_of(q));
  }
  std::uint8_t bits_ = 0;
};

// Wire names in canonical order.
std::vector<std::string> to_strings(QualitySet s);

}  // namespace qtag
