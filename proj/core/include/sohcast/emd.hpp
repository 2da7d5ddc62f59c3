#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace soh {

/**
 * Natural cubic spline through strictly increasing knots. Evaluation outside
 * the knot range extrapolates the boundary segments linearly; one knot gives
 * a constant, two give a line.
 */
class CubicSpline {
 public:
  CubicSpline(std::vector<double> xs, std::vector<double> ys);
  double operator()(double x) const;

 private:
  std::vector<double> xs_, ys_, m_;  // m_: second derivatives at the knots
};

// Interior extrema indices. Plateaus count once, at their middle sample;
// endpoints are never extrema.
std::vector<std::size_t> local_maxima(const std::vector<double>& x);
std::vector<std::size_t> local_minima(const std::vector<double>& x);

std::size_t zero_crossings(const std::vector<double>& x);

struct SiftSpec {
  int max_sifts = 50;
  double sd_threshold = 0.2;  // stop when sum((h_prev-h)^2) / sum(h_prev^2) drops below
};

struct SiftResult {
  std::vector<double> imf;
  std::vector<double> remainder;  // input minus imf
  int sifts = 0;
};

/**
 * Extracts one intrinsic mode by repeated envelope-mean subtraction. Envelopes
 * are natural cubic splines through the maxima / minima, extended by mirroring
 * two extrema across each boundary. Throws NotDecomposable when the input has
 * fewer than two maxima or two minima.
 */
SiftResult sift(const std::vector<double>& signal, const SiftSpec& spec = {});

struct DecomposeSpec {
  SiftSpec sift;
  int ensemble_size = 100;       // total noise realizations; <= 1 runs without noise
  double noise_amplitude = 0.2;  // noise stddev as a fraction of the signal stddev
  std::uint64_t seed = 0;
};

struct Decomposition {
  std::vector<std::vector<double>> imfs;  // highest frequency first
  std::vector<double> residue;

  std::size_t length() const { return residue.size(); }

  /** Sum of all modes and the residue. */
  std::vector<double> reconstruct() const;
};

/**
 * Full decomposition: modes are peeled off the running remainder until it has
 * too few extrema to envelope (at most ceil(log2 n) + 1 modes). With
 * ensemble_size > 1 each mode is the average over noise-assisted extractions,
 * taken in fixed order over paired +/- realizations so a seed pins the result;
 * the averaged mode is subtracted from the clean remainder, which keeps the
 * reconstruction identity exact. A signal with no oscillation (for example a
 * constant) yields zero modes and residue equal to the input.
 */
Decomposition decompose(const std::vector<double>& signal, const DecomposeSpec& spec = {});

}  // namespace soh
