#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mindswarm/error.hpp"

namespace mindswarm::eeg {

/// Ordered 10/20 channel labels plus reference and ground electrodes.
struct ChannelLayout {
  std::vector<std::string> names;
  std::string reference = "FCz";
  std::string ground = "FPz";

  std::size_t size() const noexcept { return names.size(); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    auto it = std::find(names.begin(), names.end(), label);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  }

  void validate() const {
    require(!names.empty(), Errc::invalid_argument, "channel layout is empty");
    std::set<std::string> seen;
    for (const auto& n : names) {
      require(!n.empty(), Errc::invalid_argument, "empty channel label");
      require(seen.insert(n).second, Errc::invalid_argument, "duplicate channel label '" + n + "'");
    }
    require(!seen.count(reference), Errc::invalid_argument, "reference '" + reference + "' listed as a channel");
    require(!seen.count(ground), Errc::invalid_argument, "ground '" + ground + "' listed as a channel");
  }

  bool operator==(const ChannelLayout&) const = default;
};

// 64-channel actiCAP arrangement: FCz reference, FPz ground.
inline ChannelLayout default_layout() {
  return ChannelLayout{
      {"Fp1", "Fz",  "F3",  "F7",  "FT9", "FC5", "FC1", "C3",  "T7",  "TP9", "CP5", "CP1", "Pz",
       "P3",  "P7",  "O1",  "Oz",  "O2",  "P4",  "P8",  "TP10", "CP6", "CP2", "Cz",  "C4",  "T8",
       "FT10", "FC6", "FC2", "F4",  "F8",  "Fp2", "AF7", "AF3", "AFz", "F1",  "F5",  "FT7", "FC3",
       "C1",  "C5",  "TP7", "CP3", "P1",  "P5",  "PO7", "PO3", "POz", "PO4", "PO8", "P6",  "P2",
       "CPz", "CP4", "TP8", "C6",  "C2",  "FC4", "FT8", "F6",  "AF8", "AF4", "F2",  "Iz"},
      "FCz",
      "FPz"};
}

/// Subset of the default layout, keeping the given labels in the given order.
inline ChannelLayout subset_layout(const std::vector<std::string>& labels) {
  ChannelLayout layout{labels, "FCz", "FPz"};
  layout.validate();
  return layout;
}

struct ScalpPoint {
  double x = 0.0;  // left (-) to right (+)
  double y = 0.0;  // posterior (-) to anterior (+)
};

/// Approximate flattened scalp position derived from the 10/20 label alone.
/// Good enough to place smooth synthetic source patterns; not a montage.
inline ScalpPoint scalp_position(std::string_view label) {
  std::size_t split = 0;
  while (split < label.size() && std::isalpha(static_cast<unsigned char>(label[split])) &&
         label[split] != 'z')
    ++split;
  std::string prefix(label.substr(0, split));
  std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  std::string_view suffix = label.substr(split);

  ScalpPoint p;
  if (prefix == "FP") p.y = 0.95;
  else if (prefix == "AF") p.y = 0.75;
  else if (prefix == "F") p.y = 0.55;
  else if (prefix == "FC" || prefix == "FT") p.y = 0.28;
  else if (prefix == "C" || prefix == "T") p.y = 0.0;
  else if (prefix == "CP" || prefix == "TP") p.y = -0.28;
  else if (prefix == "P") p.y = -0.55;
  else if (prefix == "PO") p.y = -0.75;
  else if (prefix == "O") p.y = -0.95;
  else if (prefix == "I") p.y = -1.1;

  if (suffix.empty() || suffix == "z" || suffix == "Z") return p;
  int n = 0;
  for (char c : suffix) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return p;
    n = n * 10 + (c - '0');
  }
  if (n <= 0) return p;
  const double side = (n % 2 == 1) ? -1.0 : 1.0;
  const int ring = (n + 1) / 2;  // 1,2 -> 1; 3,4 -> 2; ...
  p.x = side * std::min(0.18 * ring, 1.0);
  return p;
}

inline double scalp_distance(ScalpPoint a, ScalpPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace mindswarm::eeg
