#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mindswarm/eeg/container.hpp"
#include "mindswarm/eeg/filter.hpp"
#include "mindswarm/eeg/layout.hpp"
#include "mindswarm/eeg/recording.hpp"

// Synthetic sessions: band-limited sources whose variance depends on the
// imagined class, mixed through smooth scalp patterns, plus background
// sources, sensor noise and optional frontal blinks.
namespace mindswarm::synth {

struct SourceSpec {
  std::string peak;             // channel the pattern is centred on
  double width = 0.25;          // bump width in scalp units
  std::vector<double> pattern;  // explicit channel-space pattern; overrides peak/width
  double band_low_hz = 8.0;
  double band_high_hz = 13.0;
  double amplitude = 5.0;  // RMS in microvolts for a unit pattern
  std::map<std::string, double> modulation;  // class -> variance multiplier, absent = 1
};

struct TrialTiming {
  double lead_s = 5.5;     // fixation and cue before imagery onset
  double imagery_s = 4.0;
  double tail_s = 0.0;     // rest after imagery
  std::optional<double> period_s;  // onset-to-onset spacing; default lead + imagery + tail

  double period() const { return period_s ? *period_s : lead_s + imagery_s + tail_s; }
};

struct SynthSpec {
  Paradigm paradigm = Paradigm::MI;
  std::vector<std::string> classes;
  std::size_t trials_per_class = 50;
  double fs = 1000.0;
  std::vector<std::string> channels;  // empty: default 64-channel layout
  std::vector<SourceSpec> sources;
  std::size_t n_background = 10;
  double background_low_hz = 2.0;
  double background_high_hz = 40.0;
  double background_amplitude = 4.0;
  double sensor_sigma = 1.0;
  TrialTiming timing;
  double blink_rate_per_min = 0.0;
  double blink_amplitude = 100.0;  // peak microvolts at Fp1/Fp2
  double blink_duration_s = 0.3;
  std::uint64_t seed = 0;
  std::uint64_t pattern_seed = 0;  // background geometry, shared by sessions of one spec
};

struct SynthTruth {
  Eigen::MatrixXd patterns;             // channels x discriminative sources
  Eigen::MatrixXd background_patterns;  // channels x background sources
  Eigen::VectorXd blink_pattern;        // channels, max entry 1
  Eigen::RowVectorXd blink;             // blink waveform before the pattern is applied
  std::vector<std::int64_t> blink_onsets;
  std::vector<std::int64_t> onsets;
  std::vector<std::string> labels;
};

struct SynthOutput {
  eeg::Recording rec;
  SynthTruth truth;
};

inline TrialTiming paradigm_timing(Paradigm p) {
  switch (p) {
    case Paradigm::MI: return {5.5, 4.0, 0.0, std::nullopt};
    case Paradigm::VI: return {11.0, 3.0, 0.0, std::nullopt};
    case Paradigm::SI: return {3.0, 2.0, 5.0, std::nullopt};
  }
  return {};
}

/// One modulated source per class with paradigm-typical peaks and bands.
inline SynthSpec default_spec(Paradigm p, double contrast = 4.0) {
  SynthSpec s;
  s.paradigm = p;
  for (auto l : labels_of(p)) s.classes.emplace_back(l);
  s.timing = paradigm_timing(p);
  std::vector<std::string> peaks;
  double lo = 8.0, hi = 13.0;
  switch (p) {
    case Paradigm::MI: peaks = {"C4", "C3", "Cz", "POz"}; lo = 9.0; hi = 13.0; break;
    case Paradigm::VI: peaks = {"O1", "O2", "Oz"}; lo = 8.0; hi = 12.0; break;
    case Paradigm::SI: peaks = {"F7", "F8", "T7", "T8"}; lo = 15.0; hi = 25.0; break;
  }
  for (std::size_t k = 0; k < s.classes.size(); ++k) {
    SourceSpec src;
    src.peak = peaks[k];
    src.band_low_hz = lo;
    src.band_high_hz = hi;
    src.modulation[s.classes[k]] = contrast;
    s.sources.push_back(std::move(src));
  }
  return s;
}

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ index);
}

enum Stream : std::uint64_t {
  kOrder = 1,
  kBackgroundPattern = 2,
  kBlink = 3,
  kSensor = 4,
  kSource = 1000,
  kBackground = 2000,
  kCalibration = 3000,
  kEvaluation = 4000,
};

inline Eigen::VectorXd bump(const eeg::ChannelLayout& layout, eeg::ScalpPoint centre, double width) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const double d = eeg::scalp_distance(eeg::scalp_position(layout.names[c]), centre);
    v(static_cast<Eigen::Index>(c)) = std::exp(-0.5 * d * d / (width * width));
  }
  return v;
}

}  // namespace detail

inline eeg::ChannelLayout spec_layout(const SynthSpec& s) {
  return s.channels.empty() ? eeg::default_layout() : eeg::subset_layout(s.channels);
}

inline void validate(const SynthSpec& s) {
  require(s.trials_per_class >= 1, Errc::invalid_spec, "trials_per_class must be at least 1");
  require(s.fs > 0.0, Errc::invalid_spec, "fs must be positive");
  require(s.sensor_sigma >= 0.0, Errc::invalid_spec, "sensor sigma must be non-negative");
  require(!s.classes.empty(), Errc::invalid_spec, "spec has no classes");
  for (const auto& c : s.classes)
    require(is_legal_label(s.paradigm, c), Errc::invalid_spec,
            "class '" + c + "' is not a " + std::string(to_string(s.paradigm)) + " label");
  const auto& t = s.timing;
  require(t.lead_s >= 0.0 && t.imagery_s > 0.0 && t.tail_s >= 0.0, Errc::timing, "trial phases must be non-negative");
  require(t.period() + 1e-12 >= t.lead_s + t.imagery_s, Errc::timing,
          "trial period " + std::to_string(t.period()) + " s is shorter than lead + imagery (" +
              std::to_string(t.lead_s + t.imagery_s) + " s); trial windows would overlap");
  const auto layout = spec_layout(s);
  for (const auto& src : s.sources) {
    require(src.amplitude >= 0.0, Errc::invalid_spec, "source amplitude must be non-negative");
    require(src.band_low_hz > 0.0 && src.band_low_hz < src.band_high_hz && src.band_high_hz < 0.5 * s.fs,
            Errc::invalid_spec, "source band must lie inside (0, fs/2)");
    for (const auto& [cls, mult] : src.modulation) require(mult > 0.0, Errc::invalid_spec, "multipliers must be positive");
    if (src.pattern.empty())
      require(layout.index_of(src.peak).has_value(), Errc::invalid_spec, "source peak '" + src.peak + "' not in layout");
    else
      require(src.pattern.size() == layout.size(), Errc::invalid_spec, "explicit pattern length differs from layout");
  }
  if (s.n_background > 0)
    require(s.background_low_hz > 0.0 && s.background_low_hz < s.background_high_hz && s.background_high_hz < 0.5 * s.fs,
            Errc::invalid_spec, "background band must lie inside (0, fs/2)");
}

/// Unit-norm channel-space patterns of the discriminative sources.
inline Eigen::MatrixXd source_patterns(const SynthSpec& s) {
  const auto layout = spec_layout(s);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(layout.size()), static_cast<Eigen::Index>(s.sources.size()));
  for (std::size_t k = 0; k < s.sources.size(); ++k) {
    const auto& src = s.sources[k];
    Eigen::VectorXd v;
    if (!src.pattern.empty()) v = Eigen::Map<const Eigen::VectorXd>(src.pattern.data(), static_cast<Eigen::Index>(src.pattern.size()));
    else v = detail::bump(layout, eeg::scalp_position(src.peak), src.width);
    require(v.norm() > 0.0, Errc::invalid_spec, "source pattern is zero");
    a.col(static_cast<Eigen::Index>(k)) = v.normalized();
  }
  return a;
}

/// Background patterns: unit-norm bumps at seed-chosen electrodes.
inline Eigen::MatrixXd background_patterns(const SynthSpec& s) {
  const auto layout = spec_layout(s);
  std::mt19937_64 rng(detail::derive_seed(s.pattern_seed, detail::kBackgroundPattern));
  std::uniform_int_distribution<std::size_t> pick(0, layout.size() - 1);
  std::uniform_real_distribution<double> width(0.3, 0.6);
  Eigen::MatrixXd b(static_cast<Eigen::Index>(layout.size()), static_cast<Eigen::Index>(s.n_background));
  for (std::size_t k = 0; k < s.n_background; ++k) {
    const auto centre = eeg::scalp_position(layout.names[pick(rng)]);
    b.col(static_cast<Eigen::Index>(k)) = detail::bump(layout, centre, width(rng)).normalized();
  }
  return b;
}

inline Eigen::VectorXd blink_pattern(const eeg::ChannelLayout& layout) {
  return detail::bump(layout, {0.0, 0.95}, 0.35) / std::exp(-0.5 * 0.18 * 0.18 / (0.35 * 0.35));
}

/// Channel with the largest baseline discriminative power.
inline std::size_t peak_channel(const SynthSpec& s) {
  const Eigen::MatrixXd a = source_patterns(s);
  Eigen::VectorXd power = Eigen::VectorXd::Zero(a.rows());
  for (std::size_t k = 0; k < s.sources.size(); ++k)
    power += (a.col(static_cast<Eigen::Index>(k)) * s.sources[k].amplitude).array().square().matrix();
  Eigen::Index best = 0;
  power.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

/// 10 log10(discriminative / (background + sensor)) power at the peak channel.
inline double snr_db(const SynthSpec& s) {
  validate(s);
  require(!s.sources.empty(), Errc::invalid_spec, "SNR needs at least one discriminative source");
  const auto peak = static_cast<Eigen::Index>(peak_channel(s));
  const Eigen::MatrixXd a = source_patterns(s);
  const Eigen::MatrixXd b = background_patterns(s);
  double sig = 0.0;
  for (std::size_t k = 0; k < s.sources.size(); ++k) sig += std::pow(a(peak, static_cast<Eigen::Index>(k)) * s.sources[k].amplitude, 2);
  double noise = s.sensor_sigma * s.sensor_sigma;
  for (Eigen::Index k = 0; k < b.cols(); ++k) noise += std::pow(b(peak, k) * s.background_amplitude, 2);
  require(noise > 0.0, Errc::invalid_spec, "SNR undefined without background or sensor noise");
  return 10.0 * std::log10(sig / noise);
}

/// Rescales every discriminative amplitude by one factor to hit the target SNR.
inline void set_snr_db(SynthSpec& s, double target_db) {
  const double now = snr_db(s);
  const double factor = std::pow(10.0, (target_db - now) / 20.0);
  for (auto& src : s.sources) src.amplitude *= factor;
}

namespace detail {

// White noise drawn per trial segment, so each segment's draws depend only on
// (seed, stream, segment).
inline Eigen::RowVectorXd segmented_noise(std::uint64_t seed, std::uint64_t stream,
                                          const std::vector<std::int64_t>& seg_starts, std::int64_t n) {
  Eigen::RowVectorXd out(n);
  for (std::size_t k = 0; k < seg_starts.size(); ++k) {
    const auto begin = seg_starts[k];
    const auto end = k + 1 < seg_starts.size() ? seg_starts[k + 1] : n;
    std::mt19937_64 rng(derive_seed(seed, stream, k));
    std::normal_distribution<double> g;
    for (auto t = begin; t < end; ++t) out(t) = g(rng);
  }
  return out;
}

inline Eigen::RowVectorXd band_source(std::uint64_t seed, std::uint64_t stream, const std::vector<std::int64_t>& segs,
                                      std::int64_t n, double lo, double hi, double fs) {
  Eigen::RowVectorXd x = segmented_noise(seed, stream, segs, n);
  const auto c = eeg::design_butterworth(eeg::FilterSpec::bandpass(4, lo, hi), fs);
  const std::vector<std::array<double, 2>> zero(c.sections.size(), {0.0, 0.0});
  eeg::sosfilt_inplace(c, std::span<double>(x.data(), static_cast<std::size_t>(n)), zero);
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(n));
  if (rms > 0.0) x /= rms;
  return x;
}

}  // namespace detail

inline SynthOutput generate_with_truth(const SynthSpec& s) {
  validate(s);
  const auto layout = spec_layout(s);
  const auto n_ch = static_cast<Eigen::Index>(layout.size());
  const std::size_t n_trials = s.trials_per_class * s.classes.size();

  SynthTruth truth;
  for (std::size_t r = 0; r < s.trials_per_class; ++r)
    for (const auto& c : s.classes) truth.labels.push_back(c);
  {
    std::mt19937_64 rng(detail::derive_seed(s.seed, detail::kOrder));
    std::shuffle(truth.labels.begin(), truth.labels.end(), rng);
  }

  const double pad_s = 1.0;
  const auto to_samples = [&](double sec) { return static_cast<std::int64_t>(std::llround(sec * s.fs)); };
  const double period = s.timing.period();
  const std::int64_t n = to_samples(pad_s + static_cast<double>(n_trials) * period + pad_s);
  const auto imagery_len = to_samples(s.timing.imagery_s);
  std::vector<std::int64_t> segs{0};
  for (std::size_t i = 0; i < n_trials; ++i) {
    segs.push_back(to_samples(pad_s + static_cast<double>(i) * period));
    truth.onsets.push_back(to_samples(pad_s + static_cast<double>(i) * period + s.timing.lead_s));
  }

  eeg::Recording rec;
  rec.layout = layout;
  rec.sample_rate = s.fs;
  rec.samples = eeg::SampleMatrix::Zero(n_ch, n);

  truth.patterns = source_patterns(s);
  for (std::size_t k = 0; k < s.sources.size(); ++k) {
    const auto& src = s.sources[k];
    Eigen::RowVectorXd x = detail::band_source(s.seed, detail::kSource + k, segs, n, src.band_low_hz,
                                               src.band_high_hz, s.fs);
    for (std::size_t i = 0; i < n_trials; ++i) {
      auto it = src.modulation.find(truth.labels[i]);
      if (it == src.modulation.end() || it->second == 1.0) continue;
      const auto begin = truth.onsets[i];
      x.segment(begin, std::min(imagery_len, n - begin)) *= std::sqrt(it->second);
    }
    const Eigen::VectorXd w = truth.patterns.col(static_cast<Eigen::Index>(k)) * src.amplitude;
    for (Eigen::Index c = 0; c < n_ch; ++c)
      if (w(c) != 0.0) rec.samples.row(c) += w(c) * x;
  }

  truth.background_patterns = background_patterns(s);
  for (std::size_t k = 0; k < s.n_background; ++k) {
    const Eigen::RowVectorXd x = detail::band_source(s.seed, detail::kBackground + k, segs, n, s.background_low_hz,
                                                     s.background_high_hz, s.fs);
    const Eigen::VectorXd w = truth.background_patterns.col(static_cast<Eigen::Index>(k)) * s.background_amplitude;
    for (Eigen::Index c = 0; c < n_ch; ++c) rec.samples.row(c) += w(c) * x;
  }

  if (s.sensor_sigma > 0.0)
    for (Eigen::Index c = 0; c < n_ch; ++c)
      rec.samples.row(c) += s.sensor_sigma * detail::segmented_noise(s.seed, detail::kSensor * 1000003ull + static_cast<std::uint64_t>(c), segs, n);

  truth.blink_pattern = blink_pattern(layout);
  truth.blink = Eigen::RowVectorXd::Zero(n);
  if (s.blink_rate_per_min > 0.0 && s.blink_amplitude > 0.0) {
    std::mt19937_64 rng(detail::derive_seed(s.seed, detail::kBlink));
    std::exponential_distribution<double> gap(s.blink_rate_per_min / 60.0);
    const auto len = std::max<std::int64_t>(2, to_samples(s.blink_duration_s));
    for (double t = gap(rng); to_samples(t) + len < n; t += gap(rng) + s.blink_duration_s) {
      const auto start = to_samples(t);
      truth.blink_onsets.push_back(start);
      for (std::int64_t j = 0; j < len; ++j)
        truth.blink(start + j) += s.blink_amplitude * 0.5 *
                                  (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len - 1)));
    }
    for (Eigen::Index c = 0; c < n_ch; ++c) rec.samples.row(c) += truth.blink_pattern(c) * truth.blink;
  }

  for (std::size_t i = 0; i < n_trials; ++i) rec.events.push_back({truth.onsets[i], s.paradigm, truth.labels[i]});
  eeg::quantize_to_storage(rec);
  return {std::move(rec), std::move(truth)};
}

inline eeg::Recording generate(const SynthSpec& s) { return generate_with_truth(s).rec; }

struct OracleResult {
  double accuracy = 0.0;
  std::size_t n_trials = 0;
};

/// Reference classifier with access to the true patterns: project onto them,
/// band-limit each source, take log-variance over the imagery window, and
/// assign the nearest class-mean profile learned on a separately seeded session.
inline OracleResult oracle_evaluate(const SynthSpec& s, std::size_t n_eval_trials) {
  validate(s);
  require(!s.sources.empty(), Errc::invalid_spec, "oracle needs discriminative sources");
  const Eigen::MatrixXd a = source_patterns(s);
  const Eigen::MatrixXd proj = a.completeOrthogonalDecomposition().pseudoInverse();
  const auto k_src = a.cols();
  const auto imagery_len = static_cast<Eigen::Index>(std::llround(s.timing.imagery_s * s.fs));

  const auto features = [&](const SynthOutput& out) {
    Eigen::MatrixXd src = proj * out.rec.samples;
    for (Eigen::Index k = 0; k < k_src; ++k) {
      const auto& spec_k = s.sources[static_cast<std::size_t>(k)];
      const auto c = eeg::design_butterworth(eeg::FilterSpec::bandpass(2, spec_k.band_low_hz, spec_k.band_high_hz), s.fs);
      std::vector<double> row(static_cast<std::size_t>(src.cols()));
      for (Eigen::Index t = 0; t < src.cols(); ++t) row[static_cast<std::size_t>(t)] = src(k, t);
      eeg::filtfilt_inplace(c, row);
      for (Eigen::Index t = 0; t < src.cols(); ++t) src(k, t) = row[static_cast<std::size_t>(t)];
    }
    Eigen::MatrixXd f(static_cast<Eigen::Index>(out.truth.onsets.size()), k_src);
    for (std::size_t i = 0; i < out.truth.onsets.size(); ++i)
      for (Eigen::Index k = 0; k < k_src; ++k) {
        const auto seg = src.row(k).segment(out.truth.onsets[i], imagery_len);
        const double mean = seg.mean();
        f(static_cast<Eigen::Index>(i), k) = std::log((seg.array() - mean).square().mean() + 1e-300);
      }
    return f;
  };

  SynthSpec cal = s;
  cal.seed = detail::derive_seed(s.seed, detail::kCalibration);
  const auto cal_out = generate_with_truth(cal);
  const Eigen::MatrixXd cal_f = features(cal_out);
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.classes.size()), k_src);
  std::vector<double> counts(s.classes.size(), 0.0);
  const auto class_index = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(s.classes.begin(), s.classes.end(), l) - s.classes.begin());
  };
  for (std::size_t i = 0; i < cal_out.truth.labels.size(); ++i) {
    const auto c = class_index(cal_out.truth.labels[i]);
    centroids.row(static_cast<Eigen::Index>(c)) += cal_f.row(static_cast<Eigen::Index>(i));
    counts[c] += 1.0;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) centroids.row(static_cast<Eigen::Index>(c)) /= counts[c];

  OracleResult res;
  std::size_t correct = 0;
  for (std::uint64_t batch = 0; res.n_trials < n_eval_trials; ++batch) {
    SynthSpec ev = s;
    ev.seed = detail::derive_seed(s.seed, detail::kEvaluation, batch);
    const std::size_t remaining = n_eval_trials - res.n_trials;
    ev.trials_per_class = std::min<std::size_t>(50, (remaining + s.classes.size() - 1) / s.classes.size());
    const auto out = generate_with_truth(ev);
    const Eigen::MatrixXd f = features(out);
    for (std::size_t i = 0; i < out.truth.labels.size() && res.n_trials < n_eval_trials; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - f.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      correct += static_cast<std::size_t>(best) == class_index(out.truth.labels[i]);
      ++res.n_trials;
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(res.n_trials);
  return res;
}

inline double oracle_accuracy(const SynthSpec& s, std::size_t n_eval_trials) {
  return oracle_evaluate(s, n_eval_trials).accuracy;
}

inline void to_json(nlohmann::json& j, const SourceSpec& s) {
  j = {{"band", {s.band_low_hz, s.band_high_hz}}, {"amplitude", s.amplitude}, {"modulation", s.modulation}};
  if (s.pattern.empty()) {
    j["peak"] = s.peak;
    j["width"] = s.width;
  } else {
    j["pattern"] = s.pattern;
  }
}

inline void from_json(const nlohmann::json& j, SourceSpec& s) {
  s = SourceSpec{};
  s.peak = j.value("peak", std::string{});
  s.width = j.value("width", s.width);
  if (j.contains("pattern")) s.pattern = j["pattern"].get<std::vector<double>>();
  if (j.contains("band")) {
    s.band_low_hz = j["band"].at(0).get<double>();
    s.band_high_hz = j["band"].at(1).get<double>();
  }
  s.amplitude = j.value("amplitude", s.amplitude);
  if (j.contains("modulation")) s.modulation = j["modulation"].get<std::map<std::string, double>>();
}

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {{"paradigm", to_string(s.paradigm)},
       {"classes", s.classes},
       {"trials_per_class", s.trials_per_class},
       {"fs", s.fs},
       {"channels", s.channels},
       {"sources", s.sources},
       {"background", {{"count", s.n_background},
                       {"band", {s.background_low_hz, s.background_high_hz}},
                       {"amplitude", s.background_amplitude}}},
       {"sensor_sigma", s.sensor_sigma},
       {"timing", {{"lead_s", s.timing.lead_s}, {"imagery_s", s.timing.imagery_s}, {"tail_s", s.timing.tail_s}}},
       {"blink", {{"rate_per_min", s.blink_rate_per_min},
                  {"amplitude", s.blink_amplitude},
                  {"duration_s", s.blink_duration_s}}},
       {"seed", s.seed},
       {"pattern_seed", s.pattern_seed}};
  if (s.timing.period_s) j["timing"]["period_s"] = *s.timing.period_s;
}

/// Missing fields fall back to the paradigm's default spec.
inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  const auto p = paradigm_from_string(j.at("paradigm").get<std::string>());
  s = default_spec(p, j.value("contrast", 4.0));
  if (j.contains("classes")) s.classes = j["classes"].get<std::vector<std::string>>();
  s.trials_per_class = j.value("trials_per_class", s.trials_per_class);
  s.fs = j.value("fs", s.fs);
  if (j.contains("channels")) s.channels = j["channels"].get<std::vector<std::string>>();
  if (j.contains("sources")) s.sources = j["sources"].get<std::vector<SourceSpec>>();
  if (j.contains("background")) {
    const auto& b = j["background"];
    s.n_background = b.value("count", s.n_background);
    if (b.contains("band")) {
      s.background_low_hz = b["band"].at(0).get<double>();
      s.background_high_hz = b["band"].at(1).get<double>();
    }
    s.background_amplitude = b.value("amplitude", s.background_amplitude);
  }
  s.sensor_sigma = j.value("sensor_sigma", s.sensor_sigma);
  if (j.contains("timing")) {
    const auto& t = j["timing"];
    s.timing.lead_s = t.value("lead_s", s.timing.lead_s);
    s.timing.imagery_s = t.value("imagery_s", s.timing.imagery_s);
    s.timing.tail_s = t.value("tail_s", s.timing.tail_s);
    if (t.contains("period_s")) s.timing.period_s = t["period_s"].get<double>();
  }
  if (j.contains("blink")) {
    const auto& b = j["blink"];
    s.blink_rate_per_min = b.value("rate_per_min", s.blink_rate_per_min);
    s.blink_amplitude = b.value("amplitude", s.blink_amplitude);
    s.blink_duration_s = b.value("duration_s", s.blink_duration_s);
  }
  s.seed = j.value("seed", s.seed);
  s.pattern_seed = j.value("pattern_seed", s.pattern_seed);
  if (j.contains("snr_db")) set_snr_db(s, j["snr_db"].get<double>());
}

}  // namespace mindswarm::synth
