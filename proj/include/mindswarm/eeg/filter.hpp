#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mindswarm/error.hpp"

namespace mindswarm::eeg {

enum class FilterKind { bandpass, lowpass, notch };

/// Filter request. `order` is the per-pass Butterworth order; for a bandpass
/// the prototype order, so the digital filter has 2*order poles.
struct FilterSpec {
  FilterKind kind = FilterKind::bandpass;
  int order = 2;
  double low_hz = 8.0;     // bandpass lower edge
  double high_hz = 30.0;   // bandpass upper edge, lowpass cutoff
  double center_hz = 0.0;  // notch center
  double quality = 30.0;   // notch Q (center / -3 dB bandwidth)
  bool zero_phase = true;

  static FilterSpec bandpass(int order, double low, double high) {
    return {FilterKind::bandpass, order, low, high, 0.0, 30.0, true};
  }
  static FilterSpec lowpass(int order, double cutoff) {
    return {FilterKind::lowpass, order, 0.0, cutoff, 0.0, 30.0, true};
  }
  static FilterSpec notch(double center, double quality = 30.0) {
    return {FilterKind::notch, 1, 0.0, 0.0, center, quality, true};
  }
};

inline constexpr int kMaxButterworthOrder = 12;

/// Direct-form-II-transposed biquad with a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  std::vector<Biquad> sections;
  int order = 1;  // per-pass design order, drives the filtfilt pad length

  std::size_t pad_length() const { return static_cast<std::size_t>(3 * (2 * order + 1)); }
};

inline void validate(const FilterSpec& spec, double fs) {
  require(fs > 0.0, Errc::invalid_spec, "sample rate must be positive");
  const double nyquist = fs / 2.0;
  switch (spec.kind) {
    case FilterKind::bandpass:
      require(spec.order >= 1, Errc::invalid_spec, "order must be >= 1");
      require(spec.order <= kMaxButterworthOrder, Errc::invalid_spec,
              "order " + std::to_string(spec.order) + " exceeds " + std::to_string(kMaxButterworthOrder));
      require(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz, Errc::invalid_spec,
              "bandpass edges must satisfy 0 < low < high");
      require(spec.high_hz < nyquist, Errc::invalid_spec, "band edge at or above Nyquist");
      break;
    case FilterKind::lowpass:
      require(spec.order >= 1, Errc::invalid_spec, "order must be >= 1");
      require(spec.order <= kMaxButterworthOrder, Errc::invalid_spec,
              "order " + std::to_string(spec.order) + " exceeds " + std::to_string(kMaxButterworthOrder));
      require(spec.high_hz > 0.0, Errc::invalid_spec, "cutoff must be positive");
      require(spec.high_hz < nyquist, Errc::invalid_spec, "cutoff at or above Nyquist");
      break;
    case FilterKind::notch:
      require(spec.center_hz > 0.0, Errc::invalid_spec, "notch center must be positive");
      require(spec.center_hz < nyquist, Errc::invalid_spec, "notch center at or above Nyquist");
      require(spec.quality > 0.0, Errc::invalid_spec, "notch quality must be positive");
      break;
  }
}

/// Complex response of the cascade at frequency `f` (Hz).
inline std::complex<double> frequency_response(const FilterCoefficients& c, double f, double fs) {
  const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : c.sections) {
    auto num = s.b0 + zinv * (s.b1 + zinv * s.b2);
    auto den = 1.0 + zinv * (s.a1 + zinv * s.a2);
    h *= num / den;
  }
  return h;
}

inline double magnitude(const FilterCoefficients& c, double f, double fs) {
  return std::abs(frequency_response(c, f, fs));
}

/// Roots of every section's denominator.
inline std::vector<std::complex<double>> poles(const FilterCoefficients& c) {
  std::vector<std::complex<double>> out;
  for (const auto& s : c.sections) {
    if (s.a2 == 0.0) {
      if (s.a1 != 0.0) out.emplace_back(-s.a1, 0.0);
      continue;
    }
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    out.push_back((-s.a1 + disc) / 2.0);
    out.push_back((-s.a1 - disc) / 2.0);
  }
  return out;
}

namespace detail {

using cplx = std::complex<double>;

inline cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Group digital poles into conjugate pairs / real pairs, one section each.
inline std::vector<Biquad> sections_from_poles(std::vector<cplx> poles, bool bandpass) {
  constexpr double eps = 1e-12;
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (auto p : poles) {
    if (std::abs(p.imag()) <= eps) reals.push_back(p.real());
    else if (p.imag() > 0.0) upper.push_back(p);
  }
  std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end());

  std::vector<Biquad> out;
  const auto zeros = [&](Biquad& q, bool second_order) {
    if (bandpass) {
      q.b0 = 1.0; q.b1 = 0.0; q.b2 = -1.0;  // zeros at z = +1 and z = -1
    } else if (second_order) {
      q.b0 = 1.0; q.b1 = 2.0; q.b2 = 1.0;  // double zero at z = -1
    } else {
      q.b0 = 1.0; q.b1 = 1.0; q.b2 = 0.0;
    }
  };
  for (auto p : upper) {
    Biquad q;
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    zeros(q, true);
    out.push_back(q);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad q;
    q.a1 = -(reals[i] + reals[i + 1]);
    q.a2 = reals[i] * reals[i + 1];
    zeros(q, true);
    out.push_back(q);
  }
  if (reals.size() % 2 == 1) {
    Biquad q;
    q.a1 = -reals.back();
    q.a2 = 0.0;
    zeros(q, false);
    out.push_back(q);
  }
  return out;
}

inline void normalize_gain(FilterCoefficients& c, double f_ref, double fs) {
  const double g = magnitude(c, f_ref, fs);
  const double per_section = std::pow(1.0 / g, 1.0 / static_cast<double>(c.sections.size()));
  for (auto& s : c.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
}

inline FilterCoefficients design_notch(const FilterSpec& spec, double fs) {
  // Analog notch (s^2 + w0^2) / (s^2 + (w0/Q) s + w0^2), pre-warped, bilinear.
  const double k = 2.0 * fs;
  const double w0 = k * std::tan(std::numbers::pi * spec.center_hz / fs);
  const double bw = w0 / spec.quality;
  const double a0 = k * k + k * bw + w0 * w0;
  Biquad q;
  q.b0 = (k * k + w0 * w0) / a0;
  q.b1 = 2.0 * (w0 * w0 - k * k) / a0;
  q.b2 = q.b0;
  q.a1 = q.b1;
  q.a2 = (k * k - k * bw + w0 * w0) / a0;
  return FilterCoefficients{{q}, spec.order};
}

}  // namespace detail

/// Digital Butterworth (bandpass / lowpass) or notch as a biquad cascade.
inline FilterCoefficients design_filter(const FilterSpec& spec, double fs) {
  using detail::cplx;
  validate(spec, fs);
  if (spec.kind == FilterKind::notch) return detail::design_notch(spec, fs);

  const int n = spec.order;
  std::vector<cplx> prototype;
  for (int k = 1; k <= n; ++k)
    prototype.push_back(std::polar(1.0, std::numbers::pi * (2.0 * k + n - 1.0) / (2.0 * n)));

  const auto warp = [fs](double f) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); };
  std::vector<cplx> digital;
  FilterCoefficients out;
  out.order = n;
  if (spec.kind == FilterKind::lowpass) {
    const double wc = warp(spec.high_hz);
    for (auto p : prototype) digital.push_back(detail::bilinear(wc * p, fs));
    out.sections = detail::sections_from_poles(digital, false);
    detail::normalize_gain(out, 0.0, fs);
  } else {
    const double w1 = warp(spec.low_hz);
    const double w2 = warp(spec.high_hz);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;
    for (auto p : prototype) {
      const cplx pb = p * bw;
      const cplx root = std::sqrt(pb * pb - 4.0 * w0 * w0);
      digital.push_back(detail::bilinear((pb + root) / 2.0, fs));
      digital.push_back(detail::bilinear((pb - root) / 2.0, fs));
    }
    out.sections = detail::sections_from_poles(digital, true);
    // The pre-warped geometric center maps exactly onto this digital frequency.
    const double f_center = std::atan(w0 / (2.0 * fs)) * fs / std::numbers::pi;
    detail::normalize_gain(out, f_center, fs);
  }
  return out;
}

inline FilterCoefficients design_butterworth(const FilterSpec& spec, double fs) {
  require(spec.kind != FilterKind::notch, Errc::invalid_spec, "notch is not a Butterworth design");
  return design_filter(spec, fs);
}

/// Per-section steady-state state for a unit-step input (cascade-scaled).
inline std::vector<std::array<double, 2>> steady_state_init(const FilterCoefficients& c) {
  std::vector<std::array<double, 2>> zi;
  double level = 1.0;
  for (const auto& s : c.sections) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = gain * level;
    const double z2 = s.b2 * level - s.a2 * y;
    const double z1 = s.b1 * level - s.a1 * y + z2;
    zi.push_back({z1, z2});
    level = y;
  }
  return zi;
}

/// Causal cascade in place; each section starts from zi[k] scaled by x[0].
inline void sosfilt_inplace(const FilterCoefficients& c, std::span<double> x,
                            const std::vector<std::array<double, 2>>& zi) {
  if (x.empty()) return;
  const double x0 = x[0];
  for (std::size_t k = 0; k < c.sections.size(); ++k) {
    const auto& s = c.sections[k];
    double z1 = zi[k][0] * x0;
    double z2 = zi[k][1] * x0;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

inline std::vector<double> sosfilt(const FilterCoefficients& c, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  const std::vector<std::array<double, 2>> zero(c.sections.size(), {0.0, 0.0});
  sosfilt_inplace(c, y, zero);
  return y;
}

/// Zero-phase filtering. The input is extended at both ends by odd reflection
/// of `pad_length()` samples; the result is the mean of the forward-backward
/// and backward-forward passes, so reversing the input reverses the output
/// exactly. Magnitude response is |H|^2, phase is zero.
inline void filtfilt_inplace(const FilterCoefficients& c, std::span<double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = c.pad_length();
  require(n > pad, Errc::too_short,
          "input length " + std::to_string(n) + " must exceed pad length " + std::to_string(pad));

  std::vector<double> ext(n + 2 * pad);
  const double first = x[0];
  const double last = x[n - 1];
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * first - x[pad - i];
    ext[pad + n + i] = 2.0 * last - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto zi = steady_state_init(c);
  std::vector<double> fb = ext;
  sosfilt_inplace(c, fb, zi);
  std::reverse(fb.begin(), fb.end());
  sosfilt_inplace(c, fb, zi);
  std::reverse(fb.begin(), fb.end());

  std::vector<double>& bf = ext;
  std::reverse(bf.begin(), bf.end());
  sosfilt_inplace(c, bf, zi);
  std::reverse(bf.begin(), bf.end());
  sosfilt_inplace(c, bf, zi);

  for (std::size_t i = 0; i < n; ++i) x[i] = 0.5 * (fb[pad + i] + bf[pad + i]);
}

inline std::vector<double> filtfilt(const FilterCoefficients& c, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  filtfilt_inplace(c, y);
  return y;
}

}  // namespace mindswarm::eeg
