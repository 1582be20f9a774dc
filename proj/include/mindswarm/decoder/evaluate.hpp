#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <string>

#include "mindswarm/decoder/chain.hpp"
#include "mindswarm/decoder/cross_validation.hpp"

// Recording-level entry points: continuous chain, epoching, then fit or CV.
namespace mindswarm::decoder {

inline Paradigm marker_paradigm(const eeg::Recording& rec) {
  require(!rec.events.empty(), Errc::insufficient_data, "recording has no markers");
  return rec.events.front().paradigm;
}

inline eeg::EpochSet prepared_epochs(const eeg::Recording& rec, const PipelineConfig& cfg, Paradigm p,
                                     std::optional<IcaStage>* ica_out = nullptr) {
  auto prep = prepare(rec, cfg.chain);
  if (ica_out) *ica_out = std::move(prep.ica);
  return eeg::epoch(prep.rec, cfg.chain.window_for(p), p);
}

/// Permutes trial labels in place (label-shuffle control).
inline void shuffle_labels(eeg::EpochSet& set, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
  std::shuffle(set.labels.begin(), set.labels.end(), rng);
}

inline CvReport evaluate_recording(const eeg::Recording& rec, const PipelineConfig& cfg, const CvOptions& opt,
                                   bool shuffled = false, std::optional<Paradigm> paradigm = std::nullopt) {
  const Paradigm p = paradigm.value_or(marker_paradigm(rec));
  auto set = prepared_epochs(rec, cfg, p);
  if (shuffled) shuffle_labels(set, opt.seed);
  return cross_validate(set, cfg, opt);
}

/// Fits a deployable pipeline: stores the ICA stage and the channel order.
inline OvrPipeline train_recording(const eeg::Recording& rec, const PipelineConfig& cfg, std::uint64_t seed,
                                   std::string trained_at = {}, std::optional<Paradigm> paradigm = std::nullopt) {
  const Paradigm p = paradigm.value_or(marker_paradigm(rec));
  std::optional<IcaStage> ica;
  const auto set = prepared_epochs(rec, cfg, p, &ica);
  auto pipe = fit_pipeline(set, cfg, seed);
  pipe.ica = std::move(ica);
  pipe.channels = rec.layout.names;
  pipe.trained_at = std::move(trained_at);
  return pipe;
}

}  // namespace mindswarm::decoder
