#include "sohcast/emd.hpp"

#include <algorithm>
#include <cmath>

#include "sohcast/errors.hpp"
#include "sohcast/rng.hpp"

namespace soh {

CubicSpline::CubicSpline(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)), m_(xs_.size(), 0.0) {
  const std::size_t n = xs_.size();
  if (n == 0) throw EmptyInput("spline needs at least one knot");
  if (ys_.size() != n) throw ShapeError("spline knot vectors differ in length");
  for (std::size_t i = 1; i < n; ++i)
    if (xs_[i] <= xs_[i - 1]) throw UnsortedInput("spline knots must be strictly increasing");
  if (n <= 2) return;  // constant or line; second derivatives stay zero

  // Thomas solve for the interior second derivatives; natural ends are zero.
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double h0 = xs_[i + 1] - xs_[i];
    const double h1 = xs_[i + 2] - xs_[i + 1];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((ys_[i + 2] - ys_[i + 1]) / h1 - (ys_[i + 1] - ys_[i]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = xs_[i + 1] - xs_[i];  // sub-diagonal entry of row i
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i >= 1; --i) m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
}

double CubicSpline::operator()(double x) const {
  const std::size_t n = xs_.size();
  if (n == 1) return ys_[0];

  if (x <= xs_.front()) {
    const double h = xs_[1] - xs_[0];
    const double slope = (ys_[1] - ys_[0]) / h - h * (2.0 * m_[0] + m_[1]) / 6.0;
    return ys_[0] + slope * (x - xs_[0]);
  }
  if (x >= xs_.back()) {
    const double h = xs_[n - 1] - xs_[n - 2];
    const double slope = (ys_[n - 1] - ys_[n - 2]) / h + h * (2.0 * m_[n - 1] + m_[n - 2]) / 6.0;
    return ys_[n - 1] + slope * (x - xs_[n - 1]);
  }

  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double a = (xs_[i + 1] - x) / h;
  const double b = (x - xs_[i]) / h;
  return a * ys_[i] + b * ys_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

namespace {

struct Run {
  std::size_t begin, end;  // inclusive sample range of one constant stretch
  double value;
};

std::vector<Run> value_runs(const std::vector<double>& x) {
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
    runs.push_back({i, j, x[i]});
    i = j + 1;
  }
  return runs;
}

template <typename Cmp>
std::vector<std::size_t> extrema(const std::vector<double>& x, Cmp wins) {
  std::vector<std::size_t> out;
  const std::vector<Run> runs = value_runs(x);
  for (std::size_t r = 1; r + 1 < runs.size(); ++r)
    if (wins(runs[r].value, runs[r - 1].value) && wins(runs[r].value, runs[r + 1].value))
      out.push_back((runs[r].begin + runs[r].end) / 2);
  return out;
}

}  // namespace

std::vector<std::size_t> local_maxima(const std::vector<double>& x) {
  return extrema(x, [](double a, double b) { return a > b; });
}

std::vector<std::size_t> local_minima(const std::vector<double>& x) {
  return extrema(x, [](double a, double b) { return a < b; });
}

std::size_t zero_crossings(const std::vector<double>& x) {
  std::size_t count = 0;
  int last_sign = 0;
  for (double v : x) {
    const int sign = (v > 0.0) - (v < 0.0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++count;
    last_sign = sign;
  }
  return count;
}

namespace {

// Envelope mean of h, or false when there are not enough extrema to build
// both envelopes. Extrema are mirrored pairwise across each boundary so the
// splines stay anchored beyond the evaluation range.
bool mean_envelope(const std::vector<double>& h, std::vector<double>& mean) {
  const std::vector<std::size_t> maxima = local_maxima(h);
  const std::vector<std::size_t> minima = local_minima(h);
  if (maxima.size() < 2 || minima.size() < 2) return false;

  const double right_edge = static_cast<double>(h.size() - 1);
  auto envelope = [&](const std::vector<std::size_t>& p) {
    const std::size_t k = p.size();
    std::vector<double> xs, ys;
    xs.reserve(k + 4);
    ys.reserve(k + 4);
    xs.push_back(-static_cast<double>(p[1]));
    ys.push_back(h[p[1]]);
    xs.push_back(-static_cast<double>(p[0]));
    ys.push_back(h[p[0]]);
    for (std::size_t idx : p) {
      xs.push_back(static_cast<double>(idx));
      ys.push_back(h[idx]);
    }
    xs.push_back(2.0 * right_edge - static_cast<double>(p[k - 1]));
    ys.push_back(h[p[k - 1]]);
    xs.push_back(2.0 * right_edge - static_cast<double>(p[k - 2]));
    ys.push_back(h[p[k - 2]]);
    return CubicSpline(std::move(xs), std::move(ys));
  };

  const CubicSpline upper = envelope(maxima);
  const CubicSpline lower = envelope(minima);
  mean.resize(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) {
    const double x = static_cast<double>(t);
    mean[t] = 0.5 * (upper(x) + lower(x));
  }
  return true;
}

double population_std(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

bool has_envelope_extrema(const std::vector<double>& x) {
  return local_maxima(x).size() >= 2 && local_minima(x).size() >= 2;
}

}  // namespace

SiftResult sift(const std::vector<double>& signal, const SiftSpec& spec) {
  if (signal.size() < 4)
    throw InsufficientData("sift needs at least 4 samples, got " +
                           std::to_string(signal.size()));

  std::vector<double> h = signal;
  std::vector<double> mean;
  if (!mean_envelope(h, mean))
    throw NotDecomposable("signal has fewer than two maxima or two minima");

  SiftResult result;
  while (true) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      num += mean[t] * mean[t];
      den += h[t] * h[t];
      h[t] -= mean[t];
    }
    ++result.sifts;
    if (den == 0.0) break;
    if (num / den < spec.sd_threshold) break;
    if (result.sifts >= spec.max_sifts) break;
    if (!mean_envelope(h, mean)) break;  // mode ran out of extrema
  }

  result.remainder.resize(signal.size());
  for (std::size_t t = 0; t < signal.size(); ++t) result.remainder[t] = signal[t] - h[t];
  result.imf = std::move(h);
  return result;
}

std::vector<double> Decomposition::reconstruct() const {
  std::vector<double> out = residue;
  for (const auto& imf : imfs)
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += imf[t];
  return out;
}

Decomposition decompose(const std::vector<double>& signal, const DecomposeSpec& spec) {
  if (signal.empty()) throw EmptyInput("nothing to decompose");

  Decomposition d;
  d.residue = signal;
  const std::size_t n = signal.size();
  if (n < 4) return d;

  const std::size_t max_imfs =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
  const double sigma = spec.noise_amplitude * population_std(signal);
  const bool plain = spec.ensemble_size <= 1 || sigma <= 0.0;
  // Odd ensemble sizes round up to whole +/- pairs.
  const std::size_t pairs = plain ? 0 : (static_cast<std::size_t>(spec.ensemble_size) + 1) / 2;
  Rng rng(spec.seed);

  while (d.imfs.size() < max_imfs && d.residue.size() >= 4 && has_envelope_extrema(d.residue)) {
    if (plain) {
      SiftResult s = sift(d.residue, spec.sift);
      d.imfs.push_back(std::move(s.imf));
      d.residue = std::move(s.remainder);
      continue;
    }

    std::vector<double> mode(n, 0.0);
    std::vector<double> w(n), noisy(n);
    std::size_t contributors = 0;
    for (std::size_t j = 0; j < pairs; ++j) {
      for (double& v : w) v = sigma * rng.normal();
      for (const double sign : {1.0, -1.0}) {
        for (std::size_t t = 0; t < n; ++t) noisy[t] = d.residue[t] + sign * w[t];
        if (!has_envelope_extrema(noisy)) continue;  // noise flattened out, skip member
        const SiftResult s = sift(noisy, spec.sift);
        for (std::size_t t = 0; t < n; ++t) mode[t] += s.imf[t];
        ++contributors;
      }
    }
    if (contributors == 0) break;
    for (std::size_t t = 0; t < n; ++t) {
      mode[t] /= static_cast<double>(contributors);
      d.residue[t] -= mode[t];
    }
    d.imfs.push_back(std::move(mode));
  }
  return d;
}

}  // namespace soh
