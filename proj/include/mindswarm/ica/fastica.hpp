#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mindswarm/eeg/recording.hpp"
#include "mindswarm/error.hpp"

// Fixed-point ICA (tanh contrast, symmetric decorrelation) for removing
// ocular artifacts from continuous recordings.
namespace mindswarm::ica {

struct IcaOptions {
  std::size_t n_components = 0;  // 0: use the numerical rank
  double tolerance = 1e-5;
  int max_iter = 500;
  std::uint64_t seed = 0;
  std::size_t max_fit_samples = 0;  // 0: fit on every sample, else an evenly strided subset
};

struct IcaModel {
  Eigen::VectorXd mean;      // per-channel mean of the fit data
  Eigen::MatrixXd whitener;  // components x channels
  Eigen::MatrixXd unmixing;  // components x components, orthonormal
  Eigen::MatrixXd mixing;    // channels x components
  std::size_t n_components = 0;
  std::size_t rank = 0;
  int convergence_iterations = 0;
  bool converged = false;

  /// Full unmixing in channel space (components x channels).
  Eigen::MatrixXd filters() const { return unmixing * whitener; }

  Eigen::MatrixXd sources(const eeg::SampleMatrix& data) const {
    return filters() * (data.colwise() - mean);
  }
};

namespace detail {

inline Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

// tanh through the vectorized exp; |x| is capped where tanh is 1 to double precision.
inline Eigen::MatrixXd fast_tanh(const Eigen::MatrixXd& x) {
  const Eigen::ArrayXXd u = x.array().cwiseMax(-40.0).cwiseMin(40.0);
  return (1.0 - 2.0 / ((2.0 * u).exp() + 1.0)).matrix();
}

}  // namespace detail

inline IcaModel fit_ica(const eeg::SampleMatrix& data, const IcaOptions& opt = {}) {
  const Eigen::Index n_ch = data.rows();
  const Eigen::Index n_all = data.cols();
  require(n_ch >= 1, Errc::invalid_argument, "no channels");
  require(n_all >= 20 * n_ch, Errc::insufficient_data,
          "ICA needs at least 20 x channels samples (" + std::to_string(20 * n_ch) + "), got " +
              std::to_string(n_all));
  require(opt.tolerance > 0.0 && opt.max_iter >= 1, Errc::invalid_argument, "bad ICA iteration settings");

  IcaModel model;
  model.mean = data.rowwise().mean();

  Eigen::Index stride = 1;
  if (opt.max_fit_samples > 0 && static_cast<std::size_t>(n_all) > opt.max_fit_samples)
    stride = (n_all + static_cast<Eigen::Index>(opt.max_fit_samples) - 1) /
             static_cast<Eigen::Index>(opt.max_fit_samples);
  const Eigen::Index n_fit = (n_all + stride - 1) / stride;
  Eigen::MatrixXd x(n_ch, n_fit);
  for (Eigen::Index t = 0; t < n_fit; ++t) x.col(t) = data.col(t * stride) - model.mean;

  const Eigen::MatrixXd cov = (x * x.transpose()) / static_cast<double>(n_fit - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const double top = evals.maxCoeff();
  require(top > 0.0, Errc::rank_deficient, "data has zero variance");
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals(i) > 1e-10 * top) ++rank;
  model.rank = rank;
  const std::size_t n = opt.n_components == 0 ? rank : opt.n_components;
  require(n <= rank, Errc::rank_deficient,
          "requested " + std::to_string(n) + " components but data rank is " + std::to_string(rank));
  model.n_components = n;
  const auto nc = static_cast<Eigen::Index>(n);

  // Leading eigenvectors, largest first.
  Eigen::MatrixXd e(n_ch, nc);
  Eigen::VectorXd d(nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    e.col(i) = es.eigenvectors().col(n_ch - 1 - i);
    d(i) = evals(n_ch - 1 - i);
  }
  model.whitener = d.cwiseSqrt().cwiseInverse().asDiagonal() * e.transpose();
  const Eigen::MatrixXd z = model.whitener * x;

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd w(nc, nc);
  for (Eigen::Index i = 0; i < nc; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) w(i, j) = gauss(rng);
  w = detail::symmetric_decorrelation(w);

  const double inv_t = 1.0 / static_cast<double>(n_fit);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Eigen::MatrixXd g = detail::fast_tanh(w * z);
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_next = (g * z.transpose()) * inv_t - g_prime_mean.asDiagonal() * w;
    w_next = detail::symmetric_decorrelation(w_next);
    const double change = ((w_next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(w_next);
    model.convergence_iterations = it;
    if (change < opt.tolerance) {
      model.converged = true;
      break;
    }
  }

  Eigen::MatrixXd mixing = e * d.cwiseSqrt().asDiagonal() * w.transpose();

  // Components have unit variance on the fit data, so back-projected
  // variance is the squared norm of the mixing column.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd power = mixing.colwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return power(a) > power(b); });
  model.unmixing.resize(nc, nc);
  model.mixing.resize(n_ch, nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    Eigen::Index peak = 0;
    mixing.col(src).cwiseAbs().maxCoeff(&peak);
    const double sign = mixing(peak, src) < 0.0 ? -1.0 : 1.0;
    model.mixing.col(k) = sign * mixing.col(src);
    model.unmixing.row(k) = sign * w.row(src);
  }
  return model;
}

struct ArtifactCriteria {
  std::vector<std::string> proxy_channels{"Fp1", "Fp2"};
  double corr_threshold = 0.7;
  std::optional<double> kurtosis_threshold = 20.0;  // nullopt disables the spike test
};

inline double pearson(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const Eigen::RowVectorXd ac = a.array() - a.mean();
  const Eigen::RowVectorXd bc = b.array() - b.mean();
  const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  return den > 0.0 ? ac.dot(bc) / den : 0.0;
}

/// Non-excess sample kurtosis m4 / m2^2 (3 for a Gaussian).
inline double kurtosis(const Eigen::Ref<const Eigen::RowVectorXd>& a) {
  const Eigen::ArrayXd c = (a.array() - a.mean()).transpose();
  const double m2 = c.square().mean();
  if (m2 <= 0.0) return 0.0;
  return c.square().square().mean() / (m2 * m2);
}

/// Components whose activation tracks an ocular proxy channel or looks spiky.
inline std::vector<std::size_t> flag_artifact_components(const IcaModel& model, const eeg::Recording& rec,
                                                         const ArtifactCriteria& criteria = {}) {
  require(static_cast<Eigen::Index>(rec.n_channels()) == model.whitener.cols(), Errc::dimension_mismatch,
          "recording channel count differs from the ICA model");
  std::vector<Eigen::Index> proxies;
  for (const auto& label : criteria.proxy_channels) {
    auto idx = rec.layout.index_of(label);
    if (!idx) {
      std::string available;
      for (const auto& n : rec.layout.names) available += (available.empty() ? "" : ", ") + n;
      fail(Errc::missing_channel, "proxy channel '" + label + "' not in layout; available: " + available);
    }
    proxies.push_back(static_cast<Eigen::Index>(*idx));
  }
  const Eigen::MatrixXd s = model.sources(rec.samples);
  std::vector<std::size_t> flagged;
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    bool hit = false;
    for (auto p : proxies)
      if (std::abs(pearson(s.row(k), rec.samples.row(p))) > criteria.corr_threshold) hit = true;
    if (criteria.kurtosis_threshold && kurtosis(s.row(k)) > *criteria.kurtosis_threshold) hit = true;
    if (hit) flagged.push_back(static_cast<std::size_t>(k));
  }
  return flagged;
}

enum class Reconstruction {
  retained_subspace,  // mean + mixing * (activations with flagged rows zeroed)
  subtract_flagged,   // input minus the back-projection of flagged components only
};

inline eeg::Recording remove_components(const IcaModel& model, eeg::Recording rec,
                                        std::vector<std::size_t> indices,
                                        Reconstruction mode = Reconstruction::retained_subspace) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  require(static_cast<Eigen::Index>(rec.n_channels()) == model.whitener.cols(), Errc::dimension_mismatch,
          "recording channel count differs from the ICA model");
  for (auto i : indices)
    require(i < model.n_components, Errc::invalid_argument,
            "component index " + std::to_string(i) + " out of range (" + std::to_string(model.n_components) + ")");
  if (mode == Reconstruction::subtract_flagged && indices.empty()) return rec;

  if (mode == Reconstruction::retained_subspace) {
    Eigen::MatrixXd s = model.sources(rec.samples);
    for (auto i : indices) s.row(static_cast<Eigen::Index>(i)).setZero();
    rec.samples = (model.mixing * s).colwise() + model.mean;
    return rec;
  }
  const Eigen::MatrixXd all_filters = model.filters();
  const auto k = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd filters(k, all_filters.cols());
  Eigen::MatrixXd columns(model.mixing.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    filters.row(j) = all_filters.row(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
    columns.col(j) = model.mixing.col(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
  }
  const Eigen::MatrixXd activations = filters * (rec.samples.colwise() - model.mean);
  rec.samples -= columns * activations;
  return rec;
}

}  // namespace mindswarm::ica
