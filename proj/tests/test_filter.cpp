#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mindswarm/eeg/filter.hpp"
#include "oracles.hpp"

using namespace mindswarm;
using namespace mindswarm::eeg;

namespace {

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return x;
}

long xcorr_peak_lag(const std::vector<double>& a, const std::vector<double>& b, long max_lag) {
  long best = 0;
  double best_val = -1e300;
  const long n = static_cast<long>(a.size());
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const long j = i + lag;
      if (j >= 0 && j < n) acc += a[i] * b[j];
    }
    if (acc > best_val) {
      best_val = acc;
      best = lag;
    }
  }
  return best;
}

}  // namespace

TEST(ButterworthDesign, LowpassMinus3dBAtCutoff) {
  const double fs = 200.0;
  const auto c = design_butterworth(FilterSpec::lowpass(2, fs / 4.0), fs);
  EXPECT_NEAR(magnitude(c, 0.0, fs), 1.0, 1e-9);
  EXPECT_NEAR(magnitude(c, fs / 4.0, fs), 1.0 / std::sqrt(2.0), 1e-6);
}

TEST(ButterworthDesign, BandpassStopsDcAndNyquist) {
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), 100.0);
  EXPECT_LT(magnitude(c, 0.0, 100.0), 1e-6);
  EXPECT_LT(magnitude(c, 50.0, 100.0), 1e-6);
  EXPECT_EQ(c.sections.size(), 4u / 2u);
}

TEST(ButterworthDesign, BandpassMatchesAnalyticPrototype) {
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), 100.0);
  const double expected = oracle::butter_bandpass_mag(2, 8.0, 30.0, 19.0, 100.0);
  EXPECT_NEAR(magnitude(c, 19.0, 100.0), expected, 0.02 * expected);
  for (double f = 0.5; f < 50.0; f += 0.5)
    EXPECT_NEAR(magnitude(c, f, 100.0), oracle::butter_bandpass_mag(2, 8.0, 30.0, f, 100.0), 1e-9) << f;
}

TEST(ButterworthDesign, LowpassMatchesAnalyticAcrossOrders) {
  for (int order = 1; order <= kMaxButterworthOrder; ++order) {
    const auto c = design_butterworth(FilterSpec::lowpass(order, 40.0), 1000.0);
    for (double f : {0.0, 10.0, 39.0, 40.0, 45.0, 100.0, 300.0})
      EXPECT_NEAR(magnitude(c, f, 1000.0), oracle::butter_lowpass_mag(order, 40.0, f, 1000.0), 1e-8)
          << "order " << order << " f " << f;
  }
}

TEST(ButterworthDesign, RejectsInvalidSpecs) {
  EXPECT_THROW(design_butterworth(FilterSpec::bandpass(2, 8.0, 50.0), 100.0), Error);
  EXPECT_THROW(design_butterworth(FilterSpec::bandpass(2, 30.0, 8.0), 100.0), Error);
  EXPECT_THROW(design_butterworth(FilterSpec::lowpass(13, 10.0), 100.0), Error);
  EXPECT_THROW(design_butterworth(FilterSpec::bandpass(0, 8.0, 30.0), 100.0), Error);
  try {
    design_butterworth(FilterSpec::lowpass(2, 60.0), 100.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_spec);
  }
}

TEST(ButterworthDesign, RandomSpecsAreStable) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double fs = 50.0 + 2000.0 * u(rng);
    const int order = 1 + static_cast<int>(u(rng) * kMaxButterworthOrder) % kMaxButterworthOrder;
    const double nyq = fs / 2.0;
    const double a = 0.001 * nyq + 0.99 * nyq * u(rng);
    const double b = 0.001 * nyq + 0.99 * nyq * u(rng);
    FilterSpec spec = (trial % 2 == 0) ? FilterSpec::lowpass(order, std::max(a, b))
                                       : FilterSpec::bandpass(order, std::min(a, b), std::max(a, b));
    if (spec.kind == FilterKind::bandpass && spec.high_hz - spec.low_hz < 1e-3 * nyq) continue;
    const auto c = design_butterworth(spec, fs);
    for (auto p : poles(c)) EXPECT_LT(std::abs(p), 1.0) << "fs " << fs << " order " << order;
    for (const auto& s : c.sections) EXPECT_TRUE(std::isfinite(s.b0) && std::isfinite(s.a1));
  }
}

TEST(Filtfilt, ConstantSignalIsRejectedByBandpass) {
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), 100.0);
  std::vector<double> x(1000, 3.5);
  const auto y = filtfilt(c, x);
  ASSERT_EQ(y.size(), x.size());
  for (double v : y) EXPECT_LT(std::abs(v), 1e-6 * 3.5);
}

TEST(Filtfilt, SinusoidHasZeroLagAndSquaredGain) {
  const double fs = 100.0;
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), fs);
  const auto x = sine(15.0, fs, 1000);
  const auto y = filtfilt(c, x);
  EXPECT_EQ(xcorr_peak_lag(x, y, 20), 0);
  const double expected = std::pow(oracle::butter_bandpass_mag(2, 8.0, 30.0, 15.0, fs), 2);
  const double got = oracle::tone_amplitude(y, 15.0, fs, 200, 800);
  EXPECT_NEAR(got, expected, 0.02 * expected);
}

TEST(Filtfilt, TimeReversalSymmetry) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50 + trial * 37);
    for (auto& v : x) v = n01(rng) * 10.0 + 3.0;
    auto rx = x;
    std::reverse(rx.begin(), rx.end());
    auto y = filtfilt(c, x);
    const auto ry = filtfilt(c, rx);
    std::reverse(y.begin(), y.end());
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ry[i], 1e-9 * scale);
  }
}

TEST(Filtfilt, ShortInputIsRejected) {
  const auto c = design_butterworth(FilterSpec::bandpass(2, 8.0, 30.0), 100.0);
  EXPECT_EQ(c.pad_length(), 15u);
  std::vector<double> x(15, 1.0);
  try {
    filtfilt(c, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_short);
  }
  x.resize(16);
  EXPECT_NO_THROW(filtfilt(c, x));
}

TEST(Notch, AnalyticResponse) {
  const auto c = design_filter(FilterSpec::notch(60.0), 1000.0);
  EXPECT_LT(magnitude(c, 60.0, 1000.0), 0.01);
  EXPECT_GT(magnitude(c, 50.0, 1000.0), 0.9);
  EXPECT_GT(magnitude(c, 70.0, 1000.0), 0.9);
  EXPECT_NEAR(magnitude(c, 0.0, 1000.0), 1.0, 1e-12);
  for (double f : {1.0, 10.0, 55.0, 59.0, 61.0, 200.0})
    EXPECT_NEAR(magnitude(c, f, 1000.0), oracle::notch_mag(60.0, 30.0, f, 1000.0), 1e-9);
  EXPECT_THROW(design_filter(FilterSpec::notch(500.0), 1000.0), Error);
}
