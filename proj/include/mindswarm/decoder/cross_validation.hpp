#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mindswarm/decoder/pipeline.hpp"

namespace mindswarm::decoder {

struct CvOptions {
  std::size_t k = 5;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

struct CvReport {
  Paradigm paradigm = Paradigm::MI;
  std::vector<std::string> classes;
  std::size_t k = 0;
  std::size_t repeats = 0;
  Eigen::MatrixXd fold_accuracies;  // k x repeats
  double mean = 0.0;
  double stdev = 0.0;  // population std over all folds
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted], summed over folds
  double chance_level = 0.0;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json folds = nlohmann::json::array();
    for (Eigen::Index f = 0; f < fold_accuracies.rows(); ++f) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index r = 0; r < fold_accuracies.cols(); ++r) row.push_back(fold_accuracies(f, r));
      folds.push_back(std::move(row));
    }
    return {{"paradigm", to_string(paradigm)}, {"classes", classes},       {"k", k},
            {"repeats", repeats},              {"n_trials", n_trials},    {"fold_accuracies", folds},
            {"mean", mean},                    {"std", stdev},              {"confusion", confusion},
            {"chance_level", chance_level},    {"seed", seed}};
  }
};

/// Fold id per trial: each class is shuffled and dealt round-robin, continuing
/// the rotation across classes so fold sizes differ by at most one.
inline std::vector<std::size_t> stratified_folds(const std::vector<std::string>& labels,
                                                 const std::vector<std::string>& classes, std::size_t k,
                                                 std::uint64_t seed) {
  require(k >= 2, Errc::invalid_argument, "k must be at least 2");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t next = 0;
  for (const auto& cls : classes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    require(idx.size() >= k, Errc::insufficient_data,
            "class '" + cls + "' has " + std::to_string(idx.size()) + " trials, fewer than k = " + std::to_string(k));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

inline CvReport cross_validate(const eeg::EpochSet& epochs, const PipelineConfig& cfg, const CvOptions& opt = {}) {
  require(opt.repeats >= 1, Errc::invalid_argument, "repeats must be at least 1");
  check_trainable(epochs, cfg);
  const auto classes = epochs.classes();
  for (const auto& [cls, count] : epochs.class_counts())
    require(count >= opt.k, Errc::insufficient_data,
            "class '" + cls + "' has " + std::to_string(count) + " trials, fewer than k = " + std::to_string(opt.k));

  CvReport rep;
  rep.paradigm = epochs.paradigm;
  rep.classes = classes;
  rep.k = opt.k;
  rep.repeats = opt.repeats;
  rep.seed = opt.seed;
  rep.n_trials = epochs.size();
  rep.chance_level = 1.0 / static_cast<double>(classes.size());
  rep.fold_accuracies.resize(static_cast<Eigen::Index>(opt.k), static_cast<Eigen::Index>(opt.repeats));
  rep.confusion.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));

  std::vector<std::size_t> truth(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i)
    truth[i] = static_cast<std::size_t>(std::find(classes.begin(), classes.end(), epochs.labels[i]) - classes.begin());

  const auto covs = detail::trial_covariances(epochs);
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    const auto fold = stratified_folds(epochs.labels, classes, opt.k, opt.seed + r);
    for (std::size_t f = 0; f < opt.k; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < epochs.size(); ++i) (fold[i] == f ? test : train).push_back(i);
      std::vector<ClassModel> models;
      try {
        models = detail::fit_models(epochs, covs, classes, train, cfg);
      } catch (const Error& e) {
        fail(e.code(), "repeat " + std::to_string(r) + " fold " + std::to_string(f) + ": " + e.what());
      }
      std::size_t correct = 0;
      for (auto i : test) {
        const auto pred = decide(detail::scores(models, epochs.trials[i]), classes);
        ++rep.confusion[truth[i]][pred.index];
        if (pred.index == truth[i]) ++correct;
      }
      rep.fold_accuracies(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(r)) =
          static_cast<double>(correct) / static_cast<double>(test.size());
    }
  }
  rep.mean = rep.fold_accuracies.mean();
  rep.stdev = std::sqrt((rep.fold_accuracies.array() - rep.mean).square().mean());
  return rep;
}

struct NamedReport {
  std::string name;
  CvReport report;
};

/// Per-dataset accuracy, grand average and chance line. A single dataset's
/// fields are also lifted to the top level.
inline nlohmann::json report_document(const std::vector<NamedReport>& reports) {
  require(!reports.empty(), Errc::invalid_argument, "no reports");
  nlohmann::json doc;
  nlohmann::json datasets = nlohmann::json::array();
  double grand = 0.0;
  for (const auto& nr : reports) {
    auto entry = nr.report.to_json();
    entry["name"] = nr.name;
    datasets.push_back(std::move(entry));
    grand += nr.report.mean;
  }
  if (reports.size() == 1) doc = reports.front().report.to_json();
  doc["datasets"] = std::move(datasets);
  doc["grand_average"] = grand / static_cast<double>(reports.size());
  doc["chance_level"] = reports.front().report.chance_level;
  return doc;
}

}  // namespace mindswarm::decoder
