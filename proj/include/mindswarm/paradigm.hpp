#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "mindswarm/error.hpp"

namespace mindswarm {

/// Endogenous imagery paradigm: motor, visual, or speech imagery.
enum class Paradigm { MI, VI, SI };

inline constexpr std::array<std::string_view, 4> kMiLabels{"left", "right", "up", "down"};
inline constexpr std::array<std::string_view, 3> kViLabels{"fall_in", "spread_out", "split"};
inline constexpr std::array<std::string_view, 4> kSiLabels{"go", "stop", "follow_me", "return"};

constexpr std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::MI: return "MI";
    case Paradigm::VI: return "VI";
    case Paradigm::SI: return "SI";
  }
  return "?";
}

inline std::optional<Paradigm> parse_paradigm(std::string_view s) {
  if (s == "MI") return Paradigm::MI;
  if (s == "VI") return Paradigm::VI;
  if (s == "SI") return Paradigm::SI;
  return std::nullopt;
}

inline Paradigm paradigm_from_string(std::string_view s) {
  auto p = parse_paradigm(s);
  if (!p) fail(Errc::invalid_argument, "unknown paradigm '" + std::string(s) + "' (expected MI, VI or SI)");
  return *p;
}

constexpr std::span<const std::string_view> labels_of(Paradigm p) {
  switch (p) {
    case Paradigm::MI: return kMiLabels;
    case Paradigm::VI: return kViLabels;
    case Paradigm::SI: return kSiLabels;
  }
  return {};
}

inline bool is_legal_label(Paradigm p, std::string_view label) {
  auto set = labels_of(p);
  return std::find(set.begin(), set.end(), label) != set.end();
}

inline std::optional<Paradigm> paradigm_of_label(std::string_view label) {
  for (auto p : {Paradigm::MI, Paradigm::VI, Paradigm::SI})
    if (is_legal_label(p, label)) return p;
  return std::nullopt;
}

/// Decoder output crossing the wire to the swarm.
struct Command {
  Paradigm paradigm = Paradigm::SI;
  std::string label;
  double confidence = 1.0;
  std::uint64_t ts = 0;  // ms since session start
  std::uint64_t seq = 0;

  bool operator==(const Command&) const = default;
};

}  // namespace mindswarm
