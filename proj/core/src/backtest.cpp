#include "sohcast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sohcast/errors.hpp"

namespace soh {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct Schedule {
  std::size_t base_train = 0;
  std::size_t iterations = 0;
};

Schedule plan(const SupervisedFrame& frame, const WalkForwardSpec& wf) {
  if (frame.horizon != 1) throw ShapeError("walk-forward expects a single-step horizon");
  if (wf.n_sample == 0 || wf.n_roll == 0)
    throw ShapeError("n_sample and n_roll must be positive");
  if (frame.rows() <= wf.n_sample)
    throw InsufficientTrainingData("no rows left in front of the evaluation sample");
  return {frame.rows() - wf.n_sample, (wf.n_sample + wf.n_roll - 1) / wf.n_roll};
}

// Band half-width from the predictions made so far (current one included).
void append_interval(BacktestReport& report) {
  const std::vector<double>& p = report.predicted;
  const std::size_t k = p.size();
  const double latest = p.back();
  if (k == 1) {
    report.ci_lo.push_back(latest);
    report.ci_hi.push_back(latest);
    report.ci_degenerate.push_back(true);
    return;
  }
  const double mean = mean_of(p);
  double ss = 0.0;
  for (double v : p) ss += (v - mean) * (v - mean);
  const double half =
      1.96 * std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
  report.ci_lo.push_back(latest - half);
  report.ci_hi.push_back(latest + half);
  report.ci_degenerate.push_back(false);
}

template <typename PredictFn>
BacktestReport run_schedule(const SupervisedFrame& frame, const WalkForwardSpec& wf,
                            PredictFn&& predict_one) {
  const Schedule s = plan(frame, wf);
  BacktestReport report;
  for (std::size_t t = 0; t < s.iterations; ++t) {
    WalkForwardIteration it;
    it.index = t;
    it.train_end = s.base_train + t * wf.n_roll;
    it.train_begin = wf.policy == WindowPolicy::sliding ? t * wf.n_roll : 0;
    it.eval_row = it.train_end;

    report.predicted.push_back(predict_one(it));
    report.truth.push_back(frame.targets[it.eval_row][0]);
    report.dates.push_back(frame.origin_dates[it.eval_row]);
    append_interval(report);
    report.iterations.push_back(it);
  }
  report.metrics = score(report.truth, report.predicted);
  return report;
}

}  // namespace

MetricSet score(const std::vector<double>& truth, const std::vector<double>& predicted) {
  if (truth.empty()) throw EmptyInput("nothing to score");
  if (truth.size() != predicted.size())
    throw ShapeError("truth and predictions differ in length");
  const auto n = static_cast<double>(truth.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  MetricSet m;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
  }
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);

  const double y_mean = mean_of(truth);
  double ss_tot = 0.0;
  for (double y : truth) ss_tot += (y - y_mean) * (y - y_mean);
  m.r2 = ss_tot > 0.0 ? 1.0 - sq_sum / ss_tot : nan;

  double resid_mean = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) resid_mean += truth[i] - predicted[i];
  resid_mean /= n;
  double resid_var = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predicted[i] - resid_mean;
    resid_var += d * d;
  }
  m.evar = ss_tot > 0.0 ? 1.0 - resid_var / ss_tot : nan;
  return m;
}

BacktestReport walk_forward(const SupervisedFrame& frame, const EnsembleSpec& spec,
                            const WalkForwardSpec& wf) {
  BacktestReport report = run_schedule(frame, wf, [&](const WalkForwardIteration& it) {
    EnsembleSpec staged = spec;
    staged.seed = spec.seed + it.index;
    const std::vector<std::vector<double>> train_x(
        frame.predictors.begin() + static_cast<std::ptrdiff_t>(it.train_begin),
        frame.predictors.begin() + static_cast<std::ptrdiff_t>(it.train_end));
    std::vector<double> train_y;
    train_y.reserve(it.train_end - it.train_begin);
    for (std::size_t r = it.train_begin; r < it.train_end; ++r)
      train_y.push_back(frame.targets[r][0]);
    return fit(train_x, train_y, staged).predict_row(frame.predictors[it.eval_row]);
  });
  report.label = spec.label.empty() ? "model" : spec.label;
  return report;
}

BacktestReport persistence_walk_forward(const SupervisedFrame& frame, const WalkForwardSpec& wf) {
  BacktestReport report = run_schedule(frame, wf, [&](const WalkForwardIteration& it) {
    return frame.targets[it.eval_row - 1][0];
  });
  report.label = "persistence";
  return report;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("paired samples differ in length");
  if (a.empty()) throw EmptyInput("nothing to compare");

  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
  if (diff.empty()) throw DegenerateSample("all paired differences are zero");
  if (diff.size() < 6)
    throw InsufficientData("need at least 6 nonzero differences for a 5% level test");

  const std::size_t n = diff.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&diff](std::size_t x, std::size_t y) {
    return std::fabs(diff[x]) < std::fabs(diff[y]);
  });

  // Midranks, doubled so ties stay integral; tie group sizes feed the normal
  // approximation's variance correction.
  std::vector<long long> rank2(n, 0);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::fabs(diff[order[j]]) == std::fabs(diff[order[i]])) ++j;
    const long long doubled_midrank = static_cast<long long>(i + 1 + j);  // 2 * (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = doubled_midrank;
    tie_sizes.push_back(j - i);
    i = j;
  }

  long long w_plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diff[i] > 0) w_plus2 += rank2[i];
  }
  const long long w_minus2 = total2 - w_plus2;
  const long long w_min2 = std::min(w_plus2, w_minus2);

  WilcoxonResult result;
  result.n = n;
  result.statistic = static_cast<double>(w_min2) / 2.0;

  if (n <= 25) {
    // Exact null: every sign pattern equally likely. Counts fit a double
    // exactly (at most 2^25 patterns).
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(rank2[i]);
      for (std::size_t s = count.size(); s-- > r;) count[s] += count[s - r];
    }
    double tail = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(w_min2); ++s) tail += count[s];
    result.p_value = std::min(1.0, 2.0 * tail / std::pow(2.0, static_cast<double>(n)));
    result.exact = true;
    return result;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  for (std::size_t t : tie_sizes) {
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double w = result.statistic;
  const double z = (w - mean + 0.5) / std::sqrt(var);  // w <= mean; continuity toward center
  const double lower_tail = 0.5 * std::erfc(-z / std::sqrt(2.0));
  result.p_value = std::min(1.0, 2.0 * lower_tail);
  result.exact = false;
  return result;
}

}  // namespace soh
