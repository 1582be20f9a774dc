#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mindswarm/eeg/preprocess.hpp"
#include "mindswarm/error.hpp"

namespace mindswarm::decoder {

struct CspModel {
  std::string target_class;
  Eigen::MatrixXd filters;      // 2m x channels, rows are spatial filters
  Eigen::VectorXd eigenvalues;  // m largest, then m smallest
  std::size_t n_pairs = 0;
  std::size_t composite_rank = 0;
  bool reduced_rank = false;  // composite was solved in its principal subspace

  Eigen::Index n_channels() const { return filters.cols(); }
};

/// Sample covariance of a channels x time trial, scaled to unit trace.
inline Eigen::MatrixXd trial_covariance(const Eigen::Ref<const eeg::SampleMatrix>& trial) {
  require(trial.cols() >= 2, Errc::degenerate_trial, "trial needs at least two samples");
  const Eigen::MatrixXd x = trial.colwise() - trial.rowwise().mean();
  Eigen::MatrixXd c = (x * x.transpose()) / static_cast<double>(trial.cols() - 1);
  const double tr = c.trace();
  require(tr > 0.0 && std::isfinite(tr), Errc::degenerate_trial, "trial has zero variance");
  c /= tr;
  return 0.5 * (c + c.transpose());
}

/// Generalized eigenproblem C_target w = lambda (C_target + C_rest) w.
inline CspModel solve_csp(const Eigen::MatrixXd& c_target, const Eigen::MatrixXd& c_rest, std::size_t n_pairs) {
  const Eigen::Index n = c_target.rows();
  require(c_target.cols() == n && c_rest.rows() == n && c_rest.cols() == n, Errc::dimension_mismatch,
          "CSP covariances must be square and equal-sized");
  require(n_pairs >= 1, Errc::invalid_argument, "n_pairs must be at least 1");
  require(static_cast<Eigen::Index>(2 * n_pairs) <= n, Errc::invalid_argument,
          "2 x n_pairs (" + std::to_string(2 * n_pairs) + ") exceeds channel count " + std::to_string(n));

  const Eigen::MatrixXd composite = 0.5 * ((c_target + c_rest) + (c_target + c_rest).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ces(composite);
  const Eigen::VectorXd d = ces.eigenvalues();
  const double top = d.maxCoeff();
  require(top > 0.0 && std::isfinite(top), Errc::singular, "composite covariance is zero");

  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (d(i) > 1e-10 * top) ++rank;
  require(rank >= static_cast<Eigen::Index>(2 * n_pairs), Errc::singular,
          "composite covariance rank " + std::to_string(rank) + " is below 2 x n_pairs");

  // Whitening restricted to the principal subspace: P C Pᵀ = I.
  Eigen::MatrixXd p(rank, n);
  for (Eigen::Index i = 0; i < rank; ++i) {
    const Eigen::Index src = n - 1 - i;
    p.row(i) = ces.eigenvectors().col(src).transpose() / std::sqrt(d(src));
  }
  Eigen::MatrixXd s = p * c_target * p.transpose();
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ses(s);

  const auto m = static_cast<Eigen::Index>(n_pairs);
  CspModel model;
  model.n_pairs = n_pairs;
  model.composite_rank = static_cast<std::size_t>(rank);
  model.reduced_rank = rank < n;
  model.filters.resize(2 * m, n);
  model.eigenvalues.resize(2 * m);
  for (Eigen::Index j = 0; j < 2 * m; ++j) {
    const Eigen::Index src = j < m ? rank - 1 - j : (j - m);
    Eigen::RowVectorXd w = ses.eigenvectors().col(src).transpose() * p;
    Eigen::Index peak = 0;
    w.cwiseAbs().maxCoeff(&peak);
    if (w(peak) < 0.0) w = -w;
    model.filters.row(j) = w;
    model.eigenvalues(j) = std::clamp(ses.eigenvalues()(src), 0.0, 1.0);
  }
  return model;
}

struct ClassCovariances {
  Eigen::MatrixXd target;
  Eigen::MatrixXd rest;
};

/// Averages of precomputed trace-normalized trial covariances over the given trials.
inline ClassCovariances class_covariances(const std::vector<Eigen::MatrixXd>& covs,
                                          const std::vector<std::string>& labels, const std::string& target,
                                          const std::vector<std::size_t>& use) {
  require(!covs.empty(), Errc::insufficient_data, "no trials");
  const Eigen::Index n = covs.front().rows();
  ClassCovariances out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  std::size_t n_t = 0, n_r = 0;
  for (auto i : use) {
    if (labels[i] == target) {
      out.target += covs[i];
      ++n_t;
    } else {
      out.rest += covs[i];
      ++n_r;
    }
  }
  require(n_t >= 2, Errc::insufficient_data,
          "class '" + target + "' has " + std::to_string(n_t) + " trials, CSP needs at least 2");
  require(n_r >= 1, Errc::insufficient_data, "no trials outside class '" + target + "'");
  out.target /= static_cast<double>(n_t);
  out.rest /= static_cast<double>(n_r);
  return out;
}

inline CspModel fit_csp(const eeg::EpochSet& epochs, const std::string& target_class, std::size_t n_pairs) {
  std::vector<Eigen::MatrixXd> covs;
  covs.reserve(epochs.size());
  for (const auto& t : epochs.trials) covs.push_back(trial_covariance(t));
  std::vector<std::size_t> all(epochs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto cc = class_covariances(covs, epochs.labels, target_class, all);
  auto model = solve_csp(cc.target, cc.rest, n_pairs);
  model.target_class = target_class;
  return model;
}

/// Log of each filter's share of the total projected variance (length 2m).
inline Eigen::VectorXd csp_features(const CspModel& model, const Eigen::Ref<const eeg::SampleMatrix>& trial) {
  require(trial.rows() == model.n_channels(), Errc::dimension_mismatch,
          "trial has " + std::to_string(trial.rows()) + " channels, CSP model expects " +
              std::to_string(model.n_channels()));
  require(trial.cols() >= 2, Errc::degenerate_trial, "trial needs at least two samples");
  const Eigen::MatrixXd y = model.filters * trial;
  const Eigen::MatrixXd yc = y.colwise() - y.rowwise().mean();
  const Eigen::VectorXd var = yc.rowwise().squaredNorm() / static_cast<double>(trial.cols() - 1);
  const double total = var.sum();
  require(total > 0.0 && std::isfinite(total), Errc::degenerate_trial, "projected trial has zero variance");
  Eigen::VectorXd f(var.size());
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    require(var(j) > 0.0, Errc::degenerate_trial, "projected variance is zero on a CSP filter");
    f(j) = std::log(var(j) / total);
  }
  return f;
}

}  // namespace mindswarm::decoder
