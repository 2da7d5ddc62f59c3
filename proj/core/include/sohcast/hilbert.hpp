#pragma once

#include <vector>

#include "sohcast/emd.hpp"

namespace soh {

struct AnalyticSignal {
  std::vector<double> real;       // equals the input to rounding
  std::vector<double> imag;       // quadrature component
  std::vector<double> amplitude;  // envelope, sqrt(re^2 + im^2)
  std::vector<double> phase;      // unwrapped, radians
  std::vector<double> inst_freq;  // cycles per timestep, in [-0.5, 0.5]
};

/**
 * Frequency-domain analytic signal: forward transform, drop the negative
 * frequencies, double the positive ones (DC and Nyquist stay), inverse
 * transform. Zero-pads to the next power of two internally and truncates the
 * result back. Instantaneous frequency is the central difference of the
 * unwrapped phase over 4*pi, one-sided at the ends. Fewer than 8 samples
 * throws InsufficientData.
 */
AnalyticSignal analytic_signal(const std::vector<double>& x);

enum class FreqReduction {
  dominant_mode,      // mode with the largest mean envelope
  first_mode,         // highest-frequency mode
  amplitude_weighted  // envelope-weighted mean across modes
};

/**
 * One-step-lagged instantaneous frequency of a decomposed series, used as a
 * leading indicator among the predictors: element t holds the frequency at
 * t-1, and element 0 repeats element 1. A decomposition with zero modes
 * throws NoOscillatoryComponent.
 */
std::vector<double> soh_inst_freq(const Decomposition& d,
                                  FreqReduction how = FreqReduction::dominant_mode);

}  // namespace soh
