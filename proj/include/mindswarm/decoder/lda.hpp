#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mindswarm/error.hpp"

namespace mindswarm::decoder {

struct LdaOptions {
  double shrinkage = 0.05;
  bool auto_shrinkage = false;  // Ledoit-Wolf estimate instead of the fixed gamma
};

struct LdaModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd mean_pos;
  Eigen::VectorXd mean_neg;
  double shrinkage = 0.0;
  bool ridge_applied = false;

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
};

namespace detail {

// Ledoit-Wolf intensity for shrinking the pooled scatter towards (trace/d) I.
inline double ledoit_wolf(const Eigen::MatrixXd& centered, const Eigen::MatrixXd& sample_cov) {
  const auto n = static_cast<double>(centered.rows());
  const auto d = sample_cov.rows();
  const double mu = sample_cov.trace() / static_cast<double>(d);
  const double delta = (sample_cov - mu * Eigen::MatrixXd::Identity(d, d)).squaredNorm();
  if (delta <= 0.0) return 1.0;
  double beta = 0.0;
  for (Eigen::Index k = 0; k < centered.rows(); ++k) {
    const Eigen::VectorXd x = centered.row(k).transpose();
    beta += (x * x.transpose() - sample_cov).squaredNorm();
  }
  beta /= n * n;
  return std::clamp(beta / delta, 0.0, 1.0);
}

}  // namespace detail

/// Binary LDA on rows of `features`; labels true are the positive class.
inline LdaModel fit_lda(const Eigen::MatrixXd& features, const std::vector<bool>& positive,
                        const LdaOptions& opt = {}) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  require(d >= 1, Errc::invalid_argument, "LDA needs at least one feature");
  require(static_cast<std::size_t>(n) == positive.size(), Errc::dimension_mismatch,
          "feature rows and label count differ");
  require(opt.auto_shrinkage || (opt.shrinkage >= 0.0 && opt.shrinkage <= 1.0), Errc::invalid_argument,
          "shrinkage must lie in [0, 1]");

  Eigen::VectorXd sum_pos = Eigen::VectorXd::Zero(d), sum_neg = Eigen::VectorXd::Zero(d);
  Eigen::Index n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (positive[static_cast<std::size_t>(i)]) {
      sum_pos += features.row(i).transpose();
      ++n_pos;
    } else {
      sum_neg += features.row(i).transpose();
    }
  }
  const Eigen::Index n_neg = n - n_pos;
  require(n_pos >= 1 && n_neg >= 1, Errc::insufficient_data, "LDA needs both classes present");
  require(n >= 3, Errc::insufficient_data, "LDA needs at least three samples");

  LdaModel model;
  model.mean_pos = sum_pos / static_cast<double>(n_pos);
  model.mean_neg = sum_neg / static_cast<double>(n_neg);

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    centered.row(i) = features.row(i) - (positive[static_cast<std::size_t>(i)] ? model.mean_pos : model.mean_neg).transpose();
  Eigen::MatrixXd pooled = (centered.transpose() * centered) / static_cast<double>(n - 2);
  pooled = 0.5 * (pooled + pooled.transpose());

  const double gamma = opt.auto_shrinkage
                           ? detail::ledoit_wolf(centered, (centered.transpose() * centered) / static_cast<double>(n))
                           : opt.shrinkage;
  model.shrinkage = gamma;
  const double nu = pooled.trace() / static_cast<double>(d);
  Eigen::MatrixXd sigma = (1.0 - gamma) * pooled + gamma * nu * Eigen::MatrixXd::Identity(d, d);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * top) {
    const double ridge = 1e-9 * (nu > 0.0 ? nu : 1.0);
    sigma += ridge * Eigen::MatrixXd::Identity(d, d);
    es.compute(sigma);
    model.ridge_applied = true;
  }
  require(es.eigenvalues().minCoeff() > 0.0, Errc::singular, "LDA covariance is singular after ridge");
  const Eigen::VectorXd diff = model.mean_pos - model.mean_neg;
  model.weights = es.eigenvectors() *
                  (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * diff));
  model.bias = -0.5 * model.weights.dot(model.mean_pos + model.mean_neg);
  return model;
}

}  // namespace mindswarm::decoder
