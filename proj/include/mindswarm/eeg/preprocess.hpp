#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mindswarm/eeg/filter.hpp"
#include "mindswarm/eeg/recording.hpp"

namespace mindswarm::eeg {

/// Runs the filter over every channel. Zero-phase unless the spec says otherwise.
inline Recording apply_filter(Recording rec, const FilterSpec& spec) {
  const auto coeffs = design_filter(spec, rec.sample_rate);
  const std::vector<std::array<double, 2>> zero(coeffs.sections.size(), {0.0, 0.0});
  for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch) {
    std::span<double> row(rec.samples.row(ch).data(), static_cast<std::size_t>(rec.samples.cols()));
    if (spec.zero_phase) filtfilt_inplace(coeffs, row);
    else sosfilt_inplace(coeffs, row, zero);
  }
  return rec;
}

inline Recording apply_notch(Recording rec, double center_hz, double quality = 30.0) {
  return apply_filter(std::move(rec), FilterSpec::notch(center_hz, quality));
}

inline Recording apply_bandpass(Recording rec, double low_hz, double high_hz, int order = 2) {
  return apply_filter(std::move(rec), FilterSpec::bandpass(order, low_hz, high_hz));
}

struct DownsampleOptions {
  double cutoff_ratio = 0.4;  // anti-alias cutoff as a fraction of the target rate
  int order = 4;
};

/// Anti-alias lowpass then keep every factor-th sample. Event indices are
/// floor-divided by the factor.
inline Recording downsample(Recording rec, double target_fs, DownsampleOptions opt = {}) {
  require(target_fs > 0.0, Errc::invalid_argument, "target rate must be positive");
  const double ratio = rec.sample_rate / target_fs;
  const auto factor = static_cast<std::int64_t>(std::llround(ratio));
  require(factor >= 1 && std::abs(ratio - static_cast<double>(factor)) < 1e-9, Errc::invalid_argument,
          "source rate " + std::to_string(rec.sample_rate) + " is not an integer multiple of " +
              std::to_string(target_fs));
  if (factor == 1) return rec;

  rec = apply_filter(std::move(rec), FilterSpec::lowpass(opt.order, opt.cutoff_ratio * target_fs));
  const std::int64_t n_out = (rec.n_samples() + factor - 1) / factor;
  SampleMatrix out(rec.samples.rows(), n_out);
  for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch)
    for (std::int64_t t = 0; t < n_out; ++t) out(ch, t) = rec.samples(ch, t * factor);
  rec.samples = std::move(out);
  for (auto& e : rec.events) e.sample_index /= factor;
  rec.sample_rate = target_fs;
  return rec;
}

/// Rows reordered to `names`; every name must be present.
inline Recording pick_channels(Recording rec, const std::vector<std::string>& names) {
  if (names.empty() || names == rec.layout.names) return rec;
  SampleMatrix picked(static_cast<Eigen::Index>(names.size()), rec.n_samples());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto idx = rec.layout.index_of(names[i]);
    require(idx.has_value(), Errc::missing_channel, "recording lacks channel '" + names[i] + "'");
    picked.row(static_cast<Eigen::Index>(i)) = rec.samples.row(static_cast<Eigen::Index>(*idx));
  }
  rec.samples = std::move(picked);
  rec.layout.names = names;
  return rec;
}

struct EpochWindow {
  double start_s = 0.0;
  double end_s = 4.0;

  bool operator==(const EpochWindow&) const = default;
};

/// Default imagery windows, measured from imagery onset.
inline EpochWindow default_window(Paradigm p) {
  switch (p) {
    case Paradigm::MI: return {0.0, 4.0};
    case Paradigm::VI: return {0.0, 3.0};
    case Paradigm::SI: return {0.0, 2.0};
  }
  return {};
}

struct EpochSet {
  std::vector<SampleMatrix> trials;  // each channels x time
  std::vector<std::string> labels;
  Paradigm paradigm = Paradigm::MI;
  EpochWindow window;
  double sample_rate = 100.0;
  std::vector<std::int64_t> onsets;  // marker sample index per trial
  std::vector<std::int64_t> excluded;  // markers that did not fit the window

  std::size_t size() const noexcept { return trials.size(); }
  Eigen::Index n_channels() const { return trials.empty() ? 0 : trials.front().rows(); }
  Eigen::Index n_times() const { return trials.empty() ? 0 : trials.front().cols(); }

  /// Present classes in paradigm label order.
  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    for (auto l : labels_of(paradigm))
      for (const auto& have : labels)
        if (have == l) {
          out.emplace_back(l);
          break;
        }
    return out;
  }

  std::map<std::string, std::size_t> class_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : labels) ++counts[l];
    return counts;
  }

  EpochSet subset(const std::vector<std::size_t>& indices) const {
    EpochSet out;
    out.paradigm = paradigm;
    out.window = window;
    out.sample_rate = sample_rate;
    for (auto i : indices) {
      out.trials.push_back(trials.at(i));
      out.labels.push_back(labels.at(i));
      if (i < onsets.size()) out.onsets.push_back(onsets[i]);
    }
    return out;
  }
};

inline std::pair<std::int64_t, std::int64_t> window_offsets(const EpochWindow& w, double fs) {
  return {std::llround(w.start_s * fs), std::llround(w.end_s * fs)};
}

/// One trial per marker of `paradigm`; trial covers [marker + start*fs, marker + end*fs).
inline EpochSet epoch(const Recording& rec, EpochWindow window, Paradigm paradigm) {
  const auto [lo, hi] = window_offsets(window, rec.sample_rate);
  require(hi > lo, Errc::empty_window, "epoch window must have positive length");
  EpochSet out;
  out.paradigm = paradigm;
  out.window = window;
  out.sample_rate = rec.sample_rate;
  for (const auto& e : rec.events) {
    if (e.paradigm != paradigm) continue;
    const std::int64_t a = e.sample_index + lo;
    const std::int64_t b = e.sample_index + hi;
    if (a < 0 || b > rec.n_samples()) {
      out.excluded.push_back(e.sample_index);
      continue;
    }
    out.trials.emplace_back(rec.samples.middleCols(a, b - a));
    out.labels.push_back(e.label);
    out.onsets.push_back(e.sample_index);
  }
  return out;
}

}  // namespace mindswarm::eeg
