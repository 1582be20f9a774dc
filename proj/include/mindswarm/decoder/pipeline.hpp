#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mindswarm/decoder/chain.hpp"
#include "mindswarm/decoder/csp.hpp"
#include "mindswarm/decoder/lda.hpp"

namespace mindswarm::decoder {

struct PipelineConfig {
  std::size_t n_pairs = 3;
  LdaOptions lda;
  ChainConfig chain;
};

struct ClassModel {
  CspModel csp;
  LdaModel lda;
};

struct OvrPipeline {
  Paradigm paradigm = Paradigm::MI;
  std::vector<std::string> classes;
  std::vector<ClassModel> models;  // one per class, class-list order
  PipelineConfig config;
  eeg::EpochWindow window;
  double sample_rate = 100.0;
  std::vector<std::string> channels;
  Eigen::Index n_times = 0;
  std::optional<IcaStage> ica;
  std::uint64_t seed = 0;
  std::string trained_at;

  Eigen::Index n_channels() const { return static_cast<Eigen::Index>(channels.size()); }
};

struct Prediction {
  std::string label;
  std::size_t index = 0;
  double confidence = 0.0;
  Eigen::VectorXd scores;
};

/// Argmax with first-wins ties and the softmax weight of the winner.
inline Prediction decide(const Eigen::VectorXd& scores, const std::vector<std::string>& classes) {
  require(scores.size() >= 1 && static_cast<std::size_t>(scores.size()) == classes.size(), Errc::dimension_mismatch,
          "score vector and class list differ in length");
  Prediction p;
  p.scores = scores;
  for (Eigen::Index k = 1; k < scores.size(); ++k)
    if (scores(k) > scores(static_cast<Eigen::Index>(p.index))) p.index = static_cast<std::size_t>(k);
  const double top = scores(static_cast<Eigen::Index>(p.index));
  p.confidence = 1.0 / (scores.array() - top).exp().sum();
  p.label = classes[p.index];
  return p;
}

namespace detail {

inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Parameters are held at bundle precision so a reloaded pipeline scores identically.
inline void quantize(ClassModel& m) {
  m.csp.filters = m.csp.filters.cast<float>().cast<double>();
  m.csp.eigenvalues = m.csp.eigenvalues.cast<float>().cast<double>();
  m.lda.weights = m.lda.weights.cast<float>().cast<double>();
  m.lda.mean_pos = m.lda.mean_pos.cast<float>().cast<double>();
  m.lda.mean_neg = m.lda.mean_neg.cast<float>().cast<double>();
  m.lda.bias = to_f32(m.lda.bias);
}

inline std::vector<Eigen::MatrixXd> trial_covariances(const eeg::EpochSet& epochs) {
  std::vector<Eigen::MatrixXd> covs;
  covs.reserve(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    try {
      covs.push_back(trial_covariance(epochs.trials[i]));
    } catch (const Error& e) {
      fail(e.code(), "trial " + std::to_string(i) + ": " + e.what());
    }
  }
  return covs;
}

/// One-versus-rest models from the trials listed in `use`.
inline std::vector<ClassModel> fit_models(const eeg::EpochSet& epochs, const std::vector<Eigen::MatrixXd>& covs,
                                          const std::vector<std::string>& classes,
                                          const std::vector<std::size_t>& use, const PipelineConfig& cfg) {
  std::vector<ClassModel> models;
  for (const auto& cls : classes) {
    try {
      ClassModel m;
      const auto cc = class_covariances(covs, epochs.labels, cls, use);
      m.csp = solve_csp(cc.target, cc.rest, cfg.n_pairs);
      m.csp.target_class = cls;
      Eigen::MatrixXd feats(static_cast<Eigen::Index>(use.size()), static_cast<Eigen::Index>(2 * cfg.n_pairs));
      std::vector<bool> positive(use.size());
      for (std::size_t r = 0; r < use.size(); ++r) {
        feats.row(static_cast<Eigen::Index>(r)) = csp_features(m.csp, epochs.trials[use[r]]).transpose();
        positive[r] = epochs.labels[use[r]] == cls;
      }
      m.lda = fit_lda(feats, positive, cfg.lda);
      quantize(m);
      models.push_back(std::move(m));
    } catch (const Error& e) {
      fail(e.code(), "class '" + cls + "': " + e.what());
    }
  }
  return models;
}

inline Eigen::VectorXd scores(const std::vector<ClassModel>& models, const Eigen::Ref<const eeg::SampleMatrix>& trial) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k)
    s(static_cast<Eigen::Index>(k)) = models[k].lda.score(csp_features(models[k].csp, trial));
  return s;
}

}  // namespace detail

inline void check_trainable(const eeg::EpochSet& epochs, const PipelineConfig& cfg) {
  require(!epochs.trials.empty(), Errc::insufficient_data, "no trials to train on");
  require(epochs.labels.size() == epochs.trials.size(), Errc::dimension_mismatch, "labels and trials differ in count");
  const auto classes = epochs.classes();
  require(classes.size() >= 2, Errc::insufficient_data,
          "one-versus-rest needs at least 2 classes, got " + std::to_string(classes.size()));
  for (const auto& [cls, count] : epochs.class_counts())
    require(count >= 2 * cfg.n_pairs, Errc::insufficient_data,
            "class '" + cls + "' has " + std::to_string(count) + " trials, need at least " +
                std::to_string(2 * cfg.n_pairs));
  for (const auto& t : epochs.trials)
    require(t.rows() == epochs.n_channels() && t.cols() == epochs.n_times(), Errc::dimension_mismatch,
            "trials differ in shape");
}

inline OvrPipeline fit_pipeline(const eeg::EpochSet& epochs, const PipelineConfig& cfg, std::uint64_t seed = 0) {
  check_trainable(epochs, cfg);
  OvrPipeline p;
  p.paradigm = epochs.paradigm;
  p.classes = epochs.classes();
  p.config = cfg;
  p.window = epochs.window;
  p.sample_rate = epochs.sample_rate;
  p.n_times = epochs.n_times();
  p.seed = seed;
  const auto covs = detail::trial_covariances(epochs);
  std::vector<std::size_t> all(epochs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  p.models = detail::fit_models(epochs, covs, p.classes, all, cfg);
  return p;
}

inline Prediction predict(const OvrPipeline& p, const Eigen::Ref<const eeg::SampleMatrix>& trial) {
  require(!p.models.empty(), Errc::invalid_argument, "pipeline has no models");
  const auto expected = p.models.front().csp.n_channels();
  require(trial.rows() == expected, Errc::dimension_mismatch,
          "trial has " + std::to_string(trial.rows()) + " channels, pipeline expects " + std::to_string(expected));
  require(p.n_times == 0 || trial.cols() == p.n_times, Errc::dimension_mismatch,
          "trial has " + std::to_string(trial.cols()) + " samples, pipeline expects " + std::to_string(p.n_times));
  return decide(detail::scores(p.models, trial), p.classes);
}

}  // namespace mindswarm::decoder
