#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mindswarm/decoder/bundle.hpp"
#include "mindswarm/decoder/cross_validation.hpp"
#include "oracles.hpp"

using namespace mindswarm;
using namespace mindswarm::decoder;
using eeg::EpochSet;
using eeg::SampleMatrix;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d + 3);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
  return a * a.transpose() / static_cast<double>(d) + 0.05 * Eigen::MatrixXd::Identity(d, d);
}

// Class k raises the variance of latent source k, seen through a fixed random mixing.
EpochSet planted_epochs(std::size_t n_classes, std::size_t per_class, double contrast, std::uint64_t seed,
                        Eigen::Index channels = 8, Eigen::Index times = 200) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd mix(channels, channels);
  for (Eigen::Index i = 0; i < channels; ++i)
    for (Eigen::Index j = 0; j < channels; ++j) mix(i, j) = (i == j ? 1.0 : 0.3 * g(rng));
  const std::vector<std::string> names{"left", "right", "up", "down"};
  EpochSet set;
  set.paradigm = Paradigm::MI;
  set.window = {0.0, 2.0};
  set.sample_rate = 100.0;
  for (std::size_t r = 0; r < per_class; ++r)
    for (std::size_t k = 0; k < n_classes; ++k) {
      Eigen::MatrixXd src(channels, times);
      for (Eigen::Index i = 0; i < channels; ++i)
        for (Eigen::Index t = 0; t < times; ++t) src(i, t) = g(rng) * (i == static_cast<Eigen::Index>(k) ? contrast : 1.0);
      set.trials.emplace_back(mix * src);
      set.labels.push_back(names[k]);
      set.onsets.push_back(static_cast<std::int64_t>(set.trials.size()) * 300);
    }
  return set;
}

SampleMatrix noise_trial(std::mt19937_64& rng, Eigen::Index channels, Eigen::Index times) {
  std::normal_distribution<double> g;
  SampleMatrix m(channels, times);
  for (Eigen::Index i = 0; i < channels; ++i)
    for (Eigen::Index t = 0; t < times; ++t) m(i, t) = g(rng);
  return m;
}

}  // namespace

TEST(TrialCovariance, Examples) {
  std::mt19937_64 rng(1);
  const auto c = trial_covariance(noise_trial(rng, 2, 10000));
  EXPECT_NEAR(c(0, 0), 0.5, 0.05);
  EXPECT_NEAR(c(1, 1), 0.5, 0.05);
  EXPECT_NEAR(c(0, 1), 0.0, 0.05);
  EXPECT_NEAR(c.trace(), 1.0, 1e-12);

  SampleMatrix single = SampleMatrix::Zero(3, 50);
  for (Eigen::Index t = 0; t < 50; ++t) single(1, t) = std::sin(0.3 * static_cast<double>(t));
  const auto cs = trial_covariance(single);
  EXPECT_NEAR(cs(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(cs.sum(), 1.0, 1e-12);

  SampleMatrix dup = noise_trial(rng, 2, 300);
  dup.row(1) = dup.row(0);
  const auto cd = trial_covariance(dup);
  EXPECT_NEAR(cd(0, 1), cd(0, 0), 1e-12);
  EXPECT_NEAR(cd(0, 0), 0.5, 1e-12);

  try {
    trial_covariance(SampleMatrix::Zero(4, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_trial);
  }
}

TEST(Csp, AnalyticDiagonalPair) {
  const Eigen::MatrixXd ct = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  const Eigen::MatrixXd cr = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const auto m = solve_csp(ct, cr, 1);
  ASSERT_EQ(m.filters.rows(), 2);
  EXPECT_NEAR(m.eigenvalues(0), 4.0 / 5.0, 1e-9);
  EXPECT_NEAR(m.eigenvalues(1), 1.0 / 5.0, 1e-9);
  EXPECT_NEAR(std::abs(m.filters(0, 1)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(m.filters(1, 0)), 0.0, 1e-9);
  EXPECT_GT(std::abs(m.filters(0, 0)), 0.1);
  for (Eigen::Index j = 0; j < 2; ++j)
    EXPECT_NEAR(m.filters.row(j) * (ct + cr) * m.filters.row(j).transpose(), 1.0, 1e-12);
}

TEST(Csp, ComplementarityOnRandomSpdPairs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 2 + 2 * (trial % 4);
    const auto ct = random_spd(rng, d), cr = random_spd(rng, d);
    const auto pairs = static_cast<std::size_t>(d / 2);
    const auto a = solve_csp(ct, cr, pairs);
    const auto b = solve_csp(cr, ct, pairs);
    // Swapping roles maps the j-th largest onto the j-th smallest.
    const auto m = static_cast<Eigen::Index>(pairs);
    for (Eigen::Index j = 0; j < d; ++j) EXPECT_NEAR(a.eigenvalues(j) + b.eigenvalues((j + m) % d), 1.0, 1e-6);

    const Eigen::MatrixXd dt = a.filters * ct * a.filters.transpose();
    const Eigen::MatrixXd dr = a.filters * cr * a.filters.transpose();
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (i != j) {
          EXPECT_LT(std::abs(dt(i, j)), 1e-6);
          EXPECT_LT(std::abs(dr(i, j)), 1e-6);
        }

    Eigen::VectorXd ref = oracle::generalized_eigenvalues(ct, ct + cr);
    Eigen::VectorXd got = a.eigenvalues;
    std::sort(got.data(), got.data() + got.size());
    for (Eigen::Index j = 0; j < d; ++j) EXPECT_NEAR(got(j), ref(j), 1e-9);
  }
}

TEST(Csp, IdenticalDistributionsGiveHalf) {
  auto set = planted_epochs(2, 60, 1.0, 3, 6, 400);
  const auto m = fit_csp(set, "left", 3);
  for (Eigen::Index j = 0; j < m.eigenvalues.size(); ++j) EXPECT_NEAR(m.eigenvalues(j), 0.5, 0.05);
}

TEST(Csp, OnePairOnTwoChannelsSpansSpace) {
  auto set = planted_epochs(2, 10, 3.0, 4, 2, 100);
  const auto m = fit_csp(set, "left", 1);
  ASSERT_EQ(m.filters.rows(), 2);
  EXPECT_GT(std::abs(m.filters.determinant()), 1e-6);
  EXPECT_GT(m.eigenvalues(0), m.eigenvalues(1));
}

TEST(Csp, Errors) {
  auto set = planted_epochs(2, 10, 3.0, 4, 4, 100);
  EXPECT_THROW(fit_csp(set, "left", 3), Error);
  EXPECT_THROW(fit_csp(set, "up", 1), Error);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
  try {
    solve_csp(z, z, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::singular);
  }
}

TEST(Csp, RankDeficientCompositeUsesPrincipalSubspace) {
  auto set = planted_epochs(2, 20, 3.0, 5, 5, 200);
  for (auto& t : set.trials) t.row(4) = t.row(3);
  const auto m = fit_csp(set, "left", 2);
  EXPECT_TRUE(m.reduced_rank);
  EXPECT_EQ(m.composite_rank, 4u);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_TRUE(std::isfinite(m.eigenvalues(j)));
}

TEST(CspFeatures, UniformAndScaleInvariant) {
  // Rows 1..6 of the order-8 Sylvester Hadamard matrix: zero mean, orthogonal, equal variance.
  SampleMatrix trial(6, 8);
  for (Eigen::Index r = 0; r < 6; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) trial(r, c) = (__builtin_popcountll(static_cast<unsigned long long>((r + 1) & c)) % 2) ? -1.0 : 1.0;
  CspModel m;
  m.filters = Eigen::MatrixXd::Identity(6, 6);
  m.n_pairs = 3;
  const auto f = csp_features(m, trial);
  for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(f(j), std::log(1.0 / 6.0), 1e-12);

  std::mt19937_64 rng(2);
  auto set = planted_epochs(2, 20, 3.0, 6, 6, 200);
  const auto model = fit_csp(set, "left", 3);
  const SampleMatrix x = noise_trial(rng, 6, 200);
  const SampleMatrix x10 = 10.0 * x;
  const auto a = csp_features(model, x), b = csp_features(model, x10);
  for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(a(j), b(j), 1e-12);
  EXPECT_THROW(csp_features(model, noise_trial(rng, 5, 200)), Error);
  EXPECT_THROW(csp_features(model, SampleMatrix::Zero(6, 200)), Error);
}

TEST(CspFeatures, PlantedDiagonalSource) {
  const Eigen::MatrixXd ct = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  const Eigen::MatrixXd cr = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const auto m = solve_csp(ct, cr, 1);
  std::mt19937_64 rng(8);
  SampleMatrix trial = noise_trial(rng, 2, 2000);
  trial.row(0) *= 2.0;
  const auto f = csp_features(m, trial);
  EXPECT_GT(f(0), f(1));
}

TEST(Lda, SymmetricMeansIdentityCovariance) {
  Eigen::MatrixXd x(8, 2);
  std::vector<bool> pos;
  const double offs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) {
      x.row(c * 4 + i) << (c == 0 ? 1.0 : -1.0) + offs[i][0], offs[i][1];
      pos.push_back(c == 0);
    }
  const auto m = fit_lda(x, pos, {0.0});
  EXPECT_GT(m.weights(0), 0.0);
  EXPECT_NEAR(m.weights(1) / m.weights(0), 0.0, 1e-12);
  EXPECT_NEAR(m.bias, 0.0, 1e-12);
  EXPECT_GT(m.score(m.mean_pos), 0.0);
  EXPECT_LT(m.score(m.mean_neg), 0.0);
}

TEST(Lda, FullShrinkageIsMeanDifference) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(60, 4);
  std::vector<bool> pos;
  for (Eigen::Index i = 0; i < 60; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = g(rng) * (1.0 + static_cast<double>(j)) + (i % 2 ? 0.5 * j : 0.0);
    pos.push_back(i % 2 == 1);
  }
  const auto m = fit_lda(x, pos, {1.0});
  const Eigen::VectorXd diff = m.mean_pos - m.mean_neg;
  EXPECT_NEAR(m.weights.normalized().dot(diff.normalized()), 1.0, 1e-12);
  EXPECT_GT(m.score(m.mean_pos), 0.0);
  EXPECT_LT(m.score(m.mean_neg), 0.0);

  const auto lw = fit_lda(x, pos, {0.0, true});
  EXPECT_GE(lw.shrinkage, 0.0);
  EXPECT_LE(lw.shrinkage, 1.0);
}

TEST(Lda, AgreesWithBayesRule) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  const Eigen::Index d = 6;
  const Eigen::MatrixXd sigma = random_spd(rng, d);
  const Eigen::MatrixXd l = sigma.llt().matrixL();
  Eigen::VectorXd mu_p(d), mu_n(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    mu_p(j) = 0.4 * g(rng);
    mu_n(j) = -mu_p(j);
  }
  auto draw = [&](const Eigen::VectorXd& mu) {
    Eigen::VectorXd z(d);
    for (auto& v : z) v = g(rng);
    return Eigen::VectorXd(mu + l * z);
  };
  const Eigen::Index n_train = 4000;
  Eigen::MatrixXd x(n_train, d);
  std::vector<bool> pos;
  for (Eigen::Index i = 0; i < n_train; ++i) {
    pos.push_back(i % 2 == 0);
    x.row(i) = draw(pos.back() ? mu_p : mu_n).transpose();
  }
  const auto m = fit_lda(x, pos, {0.0});
  int agree = 0, bayes_correct = 0;
  const int n_test = 10000;
  for (int i = 0; i < n_test; ++i) {
    const bool truth = i % 2 == 0;
    const Eigen::VectorXd v = draw(truth ? mu_p : mu_n);
    const bool bayes = oracle::gaussian_logpdf(v, mu_p, sigma) > oracle::gaussian_logpdf(v, mu_n, sigma);
    bayes_correct += bayes == truth;
    agree += bayes == (m.score(v) > 0.0);
  }
  EXPECT_GE(agree, 9900);
  EXPECT_LT(bayes_correct, 9990);  // the classes overlap, so agreement is not trivial
}

TEST(Lda, SingularCovarianceGetsRidge) {
  Eigen::MatrixXd x(20, 2);
  std::vector<bool> pos;
  for (Eigen::Index i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i % 5) + (i % 2 ? 3.0 : 0.0);
    x(i, 1) = x(i, 0);
    pos.push_back(i % 2 == 1);
  }
  const auto m = fit_lda(x, pos, {0.0});
  EXPECT_TRUE(m.ridge_applied);
  EXPECT_TRUE(m.weights.allFinite());
  EXPECT_GT(m.score(m.mean_pos), 0.0);
  EXPECT_FALSE(fit_lda(x, pos, {0.05}).ridge_applied);
  EXPECT_THROW(fit_lda(x, std::vector<bool>(20, true)), Error);
}

TEST(Decide, SoftmaxExamples) {
  const std::vector<std::string> cls{"left", "right", "up", "down"};
  const auto p = decide(Eigen::Vector4d(3.0, -1.0, -1.0, -1.0), cls);
  EXPECT_EQ(p.label, "left");
  const double expected = std::exp(3.0) / (std::exp(3.0) + 3.0 * std::exp(-1.0));
  EXPECT_NEAR(p.confidence, expected, 1e-12);
  EXPECT_NEAR(p.confidence, 0.948, 5e-4);

  const auto tie = decide(Eigen::Vector4d(0.7, 0.7, 0.7, 0.7), cls);
  EXPECT_EQ(tie.index, 0u);
  EXPECT_NEAR(tie.confidence, 0.25, 1e-12);

  const Eigen::Vector4d s(0.1, 2.0, -0.4, 1.9);
  const auto a = decide(s, cls);
  const auto b = decide((s.array() + 123.0).matrix(), cls);
  EXPECT_EQ(a.index, b.index);
  EXPECT_NEAR(a.confidence, b.confidence, 1e-12);
  Eigen::Vector4d partial = s;
  partial(3) += 1.0;
  EXPECT_NE(decide(partial, cls).index, a.index);
}

TEST(Pipeline, OnePairPerClass) {
  const PipelineConfig cfg;
  EXPECT_EQ(fit_pipeline(planted_epochs(4, 12, 3.0, 1), cfg).models.size(), 4u);
  auto vi = planted_epochs(3, 12, 3.0, 2);
  vi.paradigm = Paradigm::VI;
  const std::vector<std::string> vi_names{"fall_in", "spread_out", "split"};
  for (auto& l : vi.labels) l = l == "left" ? vi_names[0] : l == "right" ? vi_names[1] : vi_names[2];
  const auto p = fit_pipeline(vi, cfg);
  EXPECT_EQ(p.models.size(), 3u);
  EXPECT_EQ(p.classes, vi_names);
  try {
    fit_pipeline(planted_epochs(1, 12, 3.0, 1), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
}

TEST(Pipeline, PredictsPlantedClassesAndChecksShape) {
  const auto all = planted_epochs(4, 40, 3.0, 10);
  std::vector<std::size_t> first, last;
  for (std::size_t i = 0; i < all.size(); ++i) (i < 120 ? first : last).push_back(i);
  const auto train = all.subset(first), test = all.subset(last);
  PipelineConfig cfg;
  const auto p = fit_pipeline(train, cfg);
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto pred = predict(p, test.trials[i]);
    EXPECT_GE(pred.confidence, 0.25);
    EXPECT_LE(pred.confidence, 1.0);
    correct += pred.label == test.labels[i];
  }
  EXPECT_GE(correct, 36);
  std::mt19937_64 rng(1);
  EXPECT_THROW(predict(p, noise_trial(rng, 7, 200)), Error);
  EXPECT_THROW(predict(p, noise_trial(rng, 8, 150)), Error);
}

TEST(Bundle, RoundTripPredictsIdentically) {
  auto p = fit_pipeline(planted_epochs(4, 20, 3.0, 12), PipelineConfig{});
  p.channels = {"C3", "C4", "Cz", "POz", "Fp1", "Fp2", "O1", "O2"};
  p.trained_at = "2026-01-01T00:00:00Z";
  IcaStage stage;
  stage.model.mean = Eigen::VectorXd::LinSpaced(8, 0.0, 1.0);
  stage.model.whitener = Eigen::MatrixXd::Identity(4, 8);
  stage.model.unmixing = Eigen::MatrixXd::Identity(4, 4);
  stage.model.mixing = Eigen::MatrixXd::Identity(8, 4);
  stage.model.n_components = 4;
  stage.flagged = {1};
  p.ica = stage;

  std::stringstream ss;
  save_pipeline(p, ss);
  const auto q = load_pipeline(ss);
  EXPECT_EQ(q.classes, p.classes);
  EXPECT_EQ(q.channels, p.channels);
  EXPECT_EQ(q.trained_at, p.trained_at);
  ASSERT_TRUE(q.ica);
  EXPECT_EQ(q.ica->flagged, std::vector<std::size_t>{1});
  EXPECT_EQ(q.ica->model.mixing, p.ica->model.mixing);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto trial = noise_trial(rng, 8, 200);
    const auto a = predict(p, trial), b = predict(q, trial);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.confidence, b.confidence);
  }
  std::stringstream again;
  save_pipeline(q, again);
  std::stringstream first;
  save_pipeline(p, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Bundle, TruncationAndVersionErrors) {
  const auto p = fit_pipeline(planted_epochs(2, 10, 3.0, 14), PipelineConfig{});
  std::stringstream ss;
  save_pipeline(p, ss);
  const auto bytes = ss.str();
  for (std::size_t cut : {std::size_t{2}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream in(bytes.substr(0, cut));
    try {
      load_pipeline(in);
      FAIL() << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::truncated) << cut;
    }
  }
  std::string v = bytes;
  v[4] = 9;
  std::stringstream in(v);
  try {
    load_pipeline(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::version_mismatch);
  }
}

TEST(CrossValidation, FoldsAreStratifiedPartitions) {
  std::vector<std::string> labels;
  const std::vector<std::string> cls{"left", "right", "up", "down"};
  for (int i = 0; i < 200; ++i) labels.push_back(cls[static_cast<std::size_t>(i % 4)]);
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto fold = stratified_folds(labels, cls, 5, seed);
    for (std::size_t f = 0; f < 5; ++f) {
      std::map<std::string, int> per;
      int total = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (fold[i] == f) {
          ++per[labels[i]];
          ++total;
        }
      EXPECT_EQ(total, 40);
      for (const auto& c : cls) EXPECT_EQ(per[c], 10);
    }
  }
  EXPECT_NE(stratified_folds(labels, cls, 5, 0), stratified_folds(labels, cls, 5, 1));

  std::vector<std::string> uneven;
  for (int i = 0; i < 13; ++i) uneven.push_back("left");
  for (int i = 0; i < 7; ++i) uneven.push_back("right");
  for (int i = 0; i < 9; ++i) uneven.push_back("up");
  const auto fold = stratified_folds(uneven, {"left", "right", "up"}, 5, 3);
  std::vector<int> sizes(5, 0);
  for (auto f : fold) ++sizes[f];
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
  for (const std::string c : {"left", "right", "up"}) {
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < uneven.size(); ++i)
      if (uneven[i] == c) ++per[fold[i]];
    EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1) << c;
  }
}

TEST(CrossValidation, ReportInvariantsAndDeterminism) {
  const auto set = planted_epochs(4, 25, 3.0, 30);
  const auto rep = cross_validate(set, PipelineConfig{}, {5, 5, 42});
  EXPECT_EQ(rep.fold_accuracies.rows(), 5);
  EXPECT_EQ(rep.fold_accuracies.cols(), 5);
  EXPECT_NEAR(rep.mean, rep.fold_accuracies.mean(), 1e-15);
  EXPECT_GE(rep.mean, 0.9);
  EXPECT_DOUBLE_EQ(rep.chance_level, 0.25);
  for (const auto& row : rep.confusion) EXPECT_EQ(std::accumulate(row.begin(), row.end(), std::size_t{0}), 25u * 5u);
  EXPECT_TRUE((rep.fold_accuracies.array() >= 0.0).all() && (rep.fold_accuracies.array() <= 1.0).all());

  const auto again = cross_validate(set, PipelineConfig{}, {5, 5, 42});
  EXPECT_EQ(rep.to_json().dump(), again.to_json().dump());
  const auto doc = report_document({{"S1", rep}});
  for (const char* key : {"mean", "std", "confusion", "chance_level", "datasets", "grand_average"})
    EXPECT_TRUE(doc.contains(key)) << key;
}

TEST(CrossValidation, PermutedLabelsSitAtChance) {
  auto set = planted_epochs(4, 50, 3.0, 31);
  std::mt19937_64 rng(99);
  std::shuffle(set.labels.begin(), set.labels.end(), rng);
  const auto rep = cross_validate(set, PipelineConfig{}, {5, 5, 7});
  EXPECT_NEAR(rep.mean, 0.25, 0.08);
}

TEST(CrossValidation, TooFewTrialsPerClass) {
  auto set = planted_epochs(2, 8, 3.0, 32);
  set.labels[0] = "up";
  set.labels[2] = "up";
  try {
    cross_validate(set, PipelineConfig{}, {5, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
}
