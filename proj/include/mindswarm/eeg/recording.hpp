#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "mindswarm/eeg/layout.hpp"
#include "mindswarm/error.hpp"
#include "mindswarm/paradigm.hpp"

namespace mindswarm::eeg {

/// Channels x time, each channel contiguous in memory.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EventMarker {
  std::int64_t sample_index = 0;
  Paradigm paradigm = Paradigm::MI;
  std::string label;

  bool operator==(const EventMarker&) const = default;
};

/// Continuous multichannel recording in microvolts.
struct Recording {
  ChannelLayout layout;
  double sample_rate = 1000.0;
  SampleMatrix samples;  // layout.size() x n_samples
  std::vector<EventMarker> events;

  std::int64_t n_samples() const noexcept { return samples.cols(); }
  std::size_t n_channels() const noexcept { return static_cast<std::size_t>(samples.rows()); }

  void validate() const {
    layout.validate();
    require(sample_rate > 0.0, Errc::invalid_argument, "sample rate must be positive");
    require(static_cast<std::size_t>(samples.rows()) == layout.size(), Errc::dimension_mismatch,
            "sample rows (" + std::to_string(samples.rows()) + ") differ from layout size (" +
                std::to_string(layout.size()) + ")");
    std::int64_t prev = 0;
    for (const auto& e : events) {
      require(e.sample_index >= 0 && e.sample_index < n_samples(), Errc::invalid_argument,
              "event index " + std::to_string(e.sample_index) + " outside recording");
      require(e.sample_index >= prev, Errc::invalid_argument, "events not sorted by sample index");
      require(is_legal_label(e.paradigm, e.label), Errc::invalid_argument,
              "label '" + e.label + "' not legal for " + std::string(to_string(e.paradigm)));
      prev = e.sample_index;
    }
  }

  bool operator==(const Recording& o) const {
    return layout == o.layout && sample_rate == o.sample_rate && samples.rows() == o.samples.rows() &&
           samples.cols() == o.samples.cols() && samples == o.samples && events == o.events;
  }
};

inline std::vector<EventMarker> events_of(const Recording& rec, Paradigm paradigm) {
  std::vector<EventMarker> out;
  for (const auto& e : rec.events)
    if (e.paradigm == paradigm) out.push_back(e);
  return out;
}

}  // namespace mindswarm::eeg
