#include "sohcast/hilbert.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "sohcast/errors.hpp"

namespace soh {

namespace {

constexpr double pi = std::numbers::pi;

// Iterative radix-2 transform; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
    const std::complex<double> step(std::cos(ang), std::sin(ang));
    for (std::size_t base = 0; base < n; base += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[base + k];
        const std::complex<double> v = a[base + k + len / 2] * w;
        a[base + k] = u + v;
        a[base + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= static_cast<double>(n);
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

AnalyticSignal analytic_signal(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 8)
    throw InsufficientData("analytic signal needs at least 8 samples, got " + std::to_string(n));

  const std::size_t m = next_power_of_two(n);
  std::vector<std::complex<double>> z(m, {0.0, 0.0});
  for (std::size_t t = 0; t < n; ++t) z[t] = {x[t], 0.0};

  fft_inplace(z, false);
  // Keep DC and Nyquist, double the positive band, zero the negative band.
  for (std::size_t k = 1; k < m / 2; ++k) z[k] *= 2.0;
  for (std::size_t k = m / 2 + 1; k < m; ++k) z[k] = {0.0, 0.0};
  fft_inplace(z, true);

  AnalyticSignal out;
  out.real.resize(n);
  out.imag.resize(n);
  out.amplitude.resize(n);
  out.phase.resize(n);
  out.inst_freq.resize(n);

  for (std::size_t t = 0; t < n; ++t) {
    out.real[t] = z[t].real();
    out.imag[t] = z[t].imag();
    out.amplitude[t] = std::hypot(z[t].real(), z[t].imag());
  }

  double offset = 0.0;
  double prev_raw = std::atan2(out.imag[0], out.real[0]);
  out.phase[0] = prev_raw;
  for (std::size_t t = 1; t < n; ++t) {
    const double raw = std::atan2(out.imag[t], out.real[t]);
    const double delta = raw - prev_raw;
    offset -= 2.0 * pi * std::floor((delta + pi) / (2.0 * pi));
    out.phase[t] = raw + offset;
    prev_raw = raw;
  }

  out.inst_freq[0] = (out.phase[1] - out.phase[0]) / (2.0 * pi);
  out.inst_freq[n - 1] = (out.phase[n - 1] - out.phase[n - 2]) / (2.0 * pi);
  for (std::size_t t = 1; t + 1 < n; ++t)
    out.inst_freq[t] = (out.phase[t + 1] - out.phase[t - 1]) / (4.0 * pi);
  return out;
}

std::vector<double> soh_inst_freq(const Decomposition& d, FreqReduction how) {
  if (d.imfs.empty())
    throw NoOscillatoryComponent("decomposition has no modes to take a frequency from");

  const std::size_t n = d.length();
  std::vector<double> freq(n, 0.0);

  switch (how) {
    case FreqReduction::first_mode:
      freq = analytic_signal(d.imfs[0]).inst_freq;
      break;
    case FreqReduction::dominant_mode: {
      // Ties keep the earlier (higher-frequency) mode.
      double best_amp = -1.0;
      for (const auto& imf : d.imfs) {
        const AnalyticSignal a = analytic_signal(imf);
        double mean_amp = 0.0;
        for (double v : a.amplitude) mean_amp += v;
        mean_amp /= static_cast<double>(n);
        if (mean_amp > best_amp) {
          best_amp = mean_amp;
          freq = a.inst_freq;
        }
      }
      break;
    }
    case FreqReduction::amplitude_weighted: {
      std::vector<double> weight(n, 0.0);
      std::fill(freq.begin(), freq.end(), 0.0);
      for (const auto& imf : d.imfs) {
        const AnalyticSignal a = analytic_signal(imf);
        for (std::size_t t = 0; t < n; ++t) {
          freq[t] += a.amplitude[t] * a.inst_freq[t];
          weight[t] += a.amplitude[t];
        }
      }
      for (std::size_t t = 0; t < n; ++t) freq[t] = weight[t] > 0.0 ? freq[t] / weight[t] : 0.0;
      break;
    }
  }

  // Lag by one step so the indicator is known before the value it flags.
  std::vector<double> lagged(n);
  for (std::size_t t = n; t-- > 1;) lagged[t] = freq[t - 1];
  lagged[0] = lagged.size() > 1 ? lagged[1] : freq[0];
  return lagged;
}

}  // namespace soh
