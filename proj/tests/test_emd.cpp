#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "sohcast/emd.hpp"
#include "sohcast/errors.hpp"
#include "sohcast/rng.hpp"

namespace {

std::vector<double> tone(std::size_t n, double freq, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t));
  return x;
}

double rms(const std::vector<double>& x, std::size_t skip = 0) {
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t t = skip; t + skip < x.size(); ++t) {
    ss += x[t] * x[t];
    ++count;
  }
  return std::sqrt(ss / static_cast<double>(count));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Independent oracle: the natural-spline second-derivative system assembled
// densely and solved by Gaussian elimination with partial pivoting.
std::vector<double> dense_spline_curvatures(const std::vector<double>& xs,
                                            const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  a[0][0] = 1.0;
  a[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = xs[i] - xs[i - 1];
    const double h1 = xs[i + 1] - xs[i];
    a[i][i - 1] = h0;
    a[i][i] = 2.0 * (h0 + h1);
    a[i][i + 1] = h1;
    a[i][n] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = a[i][n] / a[i][i];
  return m;
}

double dense_spline_eval(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::vector<double>& m, double x) {
  std::size_t i = 0;
  while (i + 2 < xs.size() && x > xs[i + 1]) ++i;
  const double h = xs[i + 1] - xs[i];
  const double a = (xs[i + 1] - x) / h;
  const double b = (x - xs[i]) / h;
  return a * ys[i] + b * ys[i + 1] +
         ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
}

}  // namespace

TEST_CASE("cubic spline interpolates knots and matches a dense solve") {
  const std::vector<double> xs{0.0, 1.0, 3.0, 4.0, 6.0, 9.0};
  const std::vector<double> ys{0.0, 2.0, 1.0, 4.0, 3.0, -1.0};
  const soh::CubicSpline s(xs, ys);

  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(s(xs[i]) == doctest::Approx(ys[i]));

  const std::vector<double> m = dense_spline_curvatures(xs, ys);
  for (double x = 0.0; x <= 9.0; x += 0.1)
    CHECK(s(x) == doctest::Approx(dense_spline_eval(xs, ys, m, x)).epsilon(1e-10));

  // Natural ends: curvature vanishes at both boundary knots. The finite
  // difference reads the third-derivative term, so allow that much slack.
  const double eps = 1e-4;
  const double left_curv = std::fabs(s(xs[0]) - 2.0 * s(xs[0] + eps) + s(xs[0] + 2 * eps)) / (eps * eps);
  const double right_curv =
      std::fabs(s(xs[5]) - 2.0 * s(xs[5] - eps) + s(xs[5] - 2 * eps)) / (eps * eps);
  CHECK(left_curv < 1e-2);
  CHECK(right_curv < 1e-2);
  // Interior knots carry real curvature, confirming the contrast.
  CHECK(std::fabs(s(xs[2]) - 2.0 * s(xs[2] + eps) + s(xs[2] + 2 * eps)) / (eps * eps) > 0.1);
}

TEST_CASE("cubic spline handles degenerate knot counts and bad input") {
  const soh::CubicSpline constant({2.0}, {5.0});
  CHECK(constant(-3.0) == 5.0);
  CHECK(constant(7.0) == 5.0);

  const soh::CubicSpline line({0.0, 2.0}, {1.0, 5.0});
  CHECK(line(1.0) == doctest::Approx(3.0));
  CHECK(line(4.0) == doctest::Approx(9.0));  // linear extrapolation

  CHECK_THROWS_AS(soh::CubicSpline({}, {}), soh::EmptyInput);
  CHECK_THROWS_AS(soh::CubicSpline({0.0, 0.0}, {1.0, 2.0}), soh::UnsortedInput);
  CHECK_THROWS_AS(soh::CubicSpline({0.0, 1.0}, {1.0}), soh::ShapeError);
}

TEST_CASE("extrema detection skips endpoints and centres plateaus") {
  const std::vector<double> x{0, 1, 0, -1, 0, 2, 2, 2, 0, -3, 5};
  const auto maxima = soh::local_maxima(x);
  const auto minima = soh::local_minima(x);
  CHECK(maxima == std::vector<std::size_t>{1, 6});  // plateau 5..7 centres at 6
  CHECK(minima == std::vector<std::size_t>{3, 9});  // final rising edge is not a max
  CHECK(soh::local_maxima({1, 2, 3, 4}).empty());
}

TEST_CASE("zero_crossings counts sign changes") {
  CHECK(soh::zero_crossings({1, -1, 1, -1}) == 3);
  CHECK(soh::zero_crossings({1, 0, -1}) == 1);
  CHECK(soh::zero_crossings({1, 2, 3}) == 0);
  const auto x = tone(200, 0.1);
  const std::size_t zc = soh::zero_crossings(x);
  CHECK(zc >= 38);
  CHECK(zc <= 40);
}

TEST_CASE("sift of a pure tone returns the tone nearly unchanged") {
  const auto x = tone(200, 0.1);
  const soh::SiftResult r = soh::sift(x);
  REQUIRE(r.imf.size() == x.size());
  std::vector<double> err(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) err[t] = r.imf[t] - x[t];
  // Interior error small relative to the tone; boundary splines wobble a bit.
  CHECK(rms(err, 10) < 0.05 * rms(x));
  CHECK(r.sifts >= 1);
  CHECK(r.sifts <= 50);
}

TEST_CASE("sift rejects signals without oscillation") {
  std::vector<double> ramp(64);
  for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 0.5 * static_cast<double>(t);
  CHECK_THROWS_AS((void)soh::sift(ramp), soh::NotDecomposable);
  CHECK_THROWS_AS((void)soh::sift({1.0, 2.0}), soh::InsufficientData);
}

TEST_CASE("sift satisfies the mode criterion on a mixed signal") {
  auto x = tone(400, 0.05);
  const auto fast = tone(400, 0.21, 0.4);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += fast[t];
  const soh::SiftResult r = soh::sift(x);
  const std::size_t extrema = soh::local_maxima(r.imf).size() + soh::local_minima(r.imf).size();
  const std::size_t zc = soh::zero_crossings(r.imf);
  CHECK(std::llabs(static_cast<long long>(extrema) - static_cast<long long>(zc)) <= 1);
}

TEST_CASE("decompose splits two well-separated tones") {
  const auto slow = tone(500, 0.04);
  const auto fast = tone(500, 0.2, 0.5);
  std::vector<double> x(500);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = slow[t] + fast[t];

  soh::DecomposeSpec spec;
  spec.ensemble_size = 1;  // plain
  const soh::Decomposition d = soh::decompose(x, spec);
  REQUIRE(d.imfs.size() >= 2);
  CHECK(pearson(d.imfs[0], fast) > 0.95);
  CHECK(pearson(d.imfs[1], slow) > 0.95);

  // Plain reconstruction is exact to rounding.
  const auto back = d.reconstruct();
  std::vector<double> err(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) err[t] = back[t] - x[t];
  CHECK(rms(err) < 1e-6 * rms(x));

  const std::size_t cap = static_cast<std::size_t>(std::ceil(std::log2(500.0))) + 1;
  CHECK(d.imfs.size() <= cap);
}

TEST_CASE("decompose of a constant yields zero modes") {
  const std::vector<double> flat(64, 3.25);
  const soh::Decomposition d = soh::decompose(flat);
  CHECK(d.imfs.empty());
  CHECK(d.residue == flat);
  CHECK_THROWS_AS((void)soh::decompose({}), soh::EmptyInput);
}

TEST_CASE("mode count stays under the dyadic cap on white noise") {
  soh::Rng rng(99);
  std::vector<double> x(512);
  for (double& v : x) v = rng.normal();
  soh::DecomposeSpec spec;
  spec.ensemble_size = 1;
  const soh::Decomposition d = soh::decompose(x, spec);
  CHECK(d.imfs.size() <= static_cast<std::size_t>(std::ceil(std::log2(512.0))) + 1);
  CHECK(d.imfs.size() >= 4);  // white noise carries several scales
}

TEST_CASE("ensemble of size one equals the plain decomposition exactly") {
  auto x = tone(300, 0.07);
  const auto fast = tone(300, 0.25, 0.3);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += fast[t];

  soh::DecomposeSpec plain;
  plain.ensemble_size = 1;
  soh::DecomposeSpec single = plain;
  single.ensemble_size = 1;
  single.noise_amplitude = 0.0;
  single.seed = 42;

  const soh::Decomposition a = soh::decompose(x, plain);
  const soh::Decomposition b = soh::decompose(x, single);
  REQUIRE(a.imfs.size() == b.imfs.size());
  for (std::size_t k = 0; k < a.imfs.size(); ++k) CHECK(a.imfs[k] == b.imfs[k]);
  CHECK(a.residue == b.residue);
}

TEST_CASE("noise-assisted decomposition reconstructs and is seed deterministic") {
  auto x = tone(400, 0.05);
  const auto fast = tone(400, 0.22, 0.4);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += fast[t] + 0.002 * static_cast<double>(t);

  soh::DecomposeSpec spec;
  spec.ensemble_size = 16;
  spec.noise_amplitude = 0.2;
  spec.seed = 7;

  const soh::Decomposition d = soh::decompose(x, spec);
  REQUIRE(!d.imfs.empty());
  const auto back = d.reconstruct();
  std::vector<double> err(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) err[t] = back[t] - x[t];
  double sd = 0.0, mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double v : x) sd += (v - mean) * (v - mean);
  sd = std::sqrt(sd / static_cast<double>(x.size()));
  CHECK(rms(err) < 1e-2 * sd);

  const soh::Decomposition again = soh::decompose(x, spec);
  REQUIRE(again.imfs.size() == d.imfs.size());
  for (std::size_t k = 0; k < d.imfs.size(); ++k) CHECK(again.imfs[k] == d.imfs[k]);
  CHECK(again.residue == d.residue);

  soh::DecomposeSpec other = spec;
  other.seed = 8;
  const soh::Decomposition different = soh::decompose(x, other);
  bool identical = different.imfs.size() == d.imfs.size();
  if (identical)
    for (std::size_t k = 0; k < d.imfs.size(); ++k)
      if (different.imfs[k] != d.imfs[k]) identical = false;
  CHECK_FALSE(identical);
}

TEST_CASE("decomposition scales with the signal amplitude") {
  auto x = tone(350, 0.06);
  const auto fast = tone(350, 0.24, 0.5);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += fast[t];
  std::vector<double> doubled(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) doubled[t] = 2.0 * x[t];

  soh::DecomposeSpec spec;
  spec.ensemble_size = 8;
  spec.noise_amplitude = 0.2;
  spec.seed = 3;

  const soh::Decomposition base = soh::decompose(x, spec);
  const soh::Decomposition big = soh::decompose(doubled, spec);
  REQUIRE(base.imfs.size() == big.imfs.size());
  for (std::size_t k = 0; k < base.imfs.size(); ++k)
    for (std::size_t t = 0; t < x.size(); ++t)
      CHECK(big.imfs[k][t] == doctest::Approx(2.0 * base.imfs[k][t]).epsilon(1e-9));
}
