#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "mindswarm/eeg/preprocess.hpp"
#include "mindswarm/ica/fastica.hpp"

// Continuous-signal preprocessing ahead of epoching:
// notch -> downsample -> bandpass -> ICA artifact subtraction.
namespace mindswarm::decoder {

struct ChainConfig {
  std::optional<double> notch_hz = 60.0;
  double notch_quality = 30.0;
  double target_fs = 100.0;
  double band_low_hz = 8.0;
  double band_high_hz = 30.0;
  int band_order = 2;

  bool ica = true;
  std::size_t ica_components = 20;
  std::size_t ica_fit_samples = 20000;
  double ica_fit_low_hz = 1.0;
  double ica_fit_high_hz = 40.0;
  std::uint64_t ica_seed = 0;
  ica::ArtifactCriteria artifacts;

  std::optional<eeg::EpochWindow> window;  // unset: paradigm default

  eeg::EpochWindow window_for(Paradigm p) const { return window ? *window : eeg::default_window(p); }
};

struct IcaStage {
  ica::IcaModel model;
  std::vector<std::size_t> flagged;
};

struct Prepared {
  eeg::Recording rec;
  std::optional<IcaStage> ica;
  bool notch_applied = false;
};

/// Runs the chain. With `reuse` the stored ICA stage is applied instead of fitting one.
inline Prepared prepare(eeg::Recording rec, const ChainConfig& cfg, const IcaStage* reuse = nullptr) {
  rec.validate();
  Prepared out;
  // A notch at or above Nyquist has nothing to remove.
  if (cfg.notch_hz && *cfg.notch_hz < 0.5 * rec.sample_rate) {
    rec = eeg::apply_notch(std::move(rec), *cfg.notch_hz, cfg.notch_quality);
    out.notch_applied = true;
  }
  rec = eeg::downsample(std::move(rec), cfg.target_fs);

  if (cfg.ica || reuse) {
    if (reuse) {
      out.ica = *reuse;
    } else {
      const auto fit_copy = eeg::apply_bandpass(rec, cfg.ica_fit_low_hz, cfg.ica_fit_high_hz, cfg.band_order);
      ica::IcaOptions opt;
      opt.n_components = std::min(cfg.ica_components, rec.n_channels());
      opt.max_fit_samples = cfg.ica_fit_samples;
      opt.seed = cfg.ica_seed;
      IcaStage stage;
      stage.model = ica::fit_ica(fit_copy.samples, opt);
      stage.flagged = ica::flag_artifact_components(stage.model, fit_copy, cfg.artifacts);
      out.ica = std::move(stage);
    }
  }
  rec = eeg::apply_bandpass(std::move(rec), cfg.band_low_hz, cfg.band_high_hz, cfg.band_order);
  if (out.ica)
    rec = ica::remove_components(out.ica->model, std::move(rec), out.ica->flagged,
                                 ica::Reconstruction::subtract_flagged);
  out.rec = std::move(rec);
  return out;
}

inline void to_json(nlohmann::json& j, const ChainConfig& c) {
  j = nlohmann::json{{"notch_hz", c.notch_hz ? nlohmann::json(*c.notch_hz) : nlohmann::json(nullptr)},
                     {"notch_quality", c.notch_quality},
                     {"target_fs", c.target_fs},
                     {"band", {c.band_low_hz, c.band_high_hz}},
                     {"band_order", c.band_order},
                     {"ica", c.ica},
                     {"ica_components", c.ica_components},
                     {"ica_fit_samples", c.ica_fit_samples},
                     {"ica_fit_band", {c.ica_fit_low_hz, c.ica_fit_high_hz}},
                     {"ica_seed", c.ica_seed},
                     {"artifact_proxies", c.artifacts.proxy_channels},
                     {"artifact_corr", c.artifacts.corr_threshold},
                     {"artifact_kurtosis", c.artifacts.kurtosis_threshold ? nlohmann::json(*c.artifacts.kurtosis_threshold)
                                                                          : nlohmann::json(nullptr)}};
  if (c.window) j["window"] = {c.window->start_s, c.window->end_s};
}

inline void from_json(const nlohmann::json& j, ChainConfig& c) {
  c = ChainConfig{};
  if (j.contains("notch_hz"))
    c.notch_hz = j["notch_hz"].is_null() ? std::nullopt : std::optional<double>(j["notch_hz"].get<double>());
  c.notch_quality = j.value("notch_quality", c.notch_quality);
  c.target_fs = j.value("target_fs", c.target_fs);
  if (j.contains("band")) {
    c.band_low_hz = j["band"].at(0).get<double>();
    c.band_high_hz = j["band"].at(1).get<double>();
  }
  c.band_order = j.value("band_order", c.band_order);
  c.ica = j.value("ica", c.ica);
  c.ica_components = j.value("ica_components", c.ica_components);
  c.ica_fit_samples = j.value("ica_fit_samples", c.ica_fit_samples);
  if (j.contains("ica_fit_band")) {
    c.ica_fit_low_hz = j["ica_fit_band"].at(0).get<double>();
    c.ica_fit_high_hz = j["ica_fit_band"].at(1).get<double>();
  }
  c.ica_seed = j.value("ica_seed", c.ica_seed);
  if (j.contains("artifact_proxies")) c.artifacts.proxy_channels = j["artifact_proxies"].get<std::vector<std::string>>();
  c.artifacts.corr_threshold = j.value("artifact_corr", c.artifacts.corr_threshold);
  if (j.contains("artifact_kurtosis"))
    c.artifacts.kurtosis_threshold = j["artifact_kurtosis"].is_null()
                                         ? std::nullopt
                                         : std::optional<double>(j["artifact_kurtosis"].get<double>());
  if (j.contains("window")) c.window = eeg::EpochWindow{j["window"].at(0).get<double>(), j["window"].at(1).get<double>()};
}

}  // namespace mindswarm::decoder
