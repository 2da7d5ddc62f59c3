#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sohcast/reframe.hpp"
#include "sohcast/trees.hpp"

namespace soh {

/**
 * Point-forecast quality summary. r2 compares squared error against the
 * truth's spread around its mean; evar does the same for residual variance,
 * so a purely constant bias lowers r2 but not evar. Both are NaN when the
 * truth is constant.
 */
struct MetricSet {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double evar = 0.0;
};

MetricSet score(const std::vector<double>& truth, const std::vector<double>& predicted);

enum class WindowPolicy {
  expanding,  // the train window keeps its start and grows
  sliding     // the train window keeps its size and moves
};

struct WalkForwardSpec {
  std::size_t n_sample = 30;  // rows reserved at the end for evaluation
  std::size_t n_roll = 1;     // rows folded into the train window per iteration
  WindowPolicy policy = WindowPolicy::expanding;
};

struct WalkForwardIteration {
  std::size_t index = 0;
  std::size_t train_begin = 0;  // frame rows fit this iteration: [train_begin, train_end)
  std::size_t train_end = 0;
  std::size_t eval_row = 0;  // frame row predicted out of sample
};

/**
 * One evaluated point per iteration. The 95% band is centered on each
 * prediction with half-width 1.96 * s / sqrt(k), where s is the sample
 * standard deviation of the first k predictions; the first point has no
 * spread estimate yet, so its band collapses and is flagged degenerate.
 */
struct BacktestReport {
  std::string label;
  std::vector<std::int64_t> dates;  // target date of each evaluated row
  std::vector<double> truth;
  std::vector<double> predicted;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<bool> ci_degenerate;
  std::vector<WalkForwardIteration> iterations;
  MetricSet metrics;
};

/**
 * Walk-forward backtest over a one-step frame. The first rows() - n_sample
 * rows seed the train window; each iteration refits the ensemble (seed offset
 * by the iteration index), predicts the row just past the window, then rolls
 * the window forward by n_roll rows. Evaluated rows are therefore n_roll
 * apart. Throws InsufficientTrainingData when no rows precede the sample.
 */
BacktestReport walk_forward(const SupervisedFrame& frame, const EnsembleSpec& spec,
                            const WalkForwardSpec& wf);

/**
 * Same schedule and report shape, but every prediction is the previous row's
 * target. The persistence baseline any model must beat.
 */
BacktestReport persistence_walk_forward(const SupervisedFrame& frame, const WalkForwardSpec& wf);

/**
 * Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
 * dropped (all zero throws DegenerateSample; fewer than 6 usable pairs throws
 * InsufficientData, the smallest n that can reject at the 5% level). Tied
 * magnitudes share midranks. Up to n = 25 the p-value enumerates the exact
 * null distribution; beyond that a normal approximation with continuity and
 * tie corrections takes over.
 */
struct WilcoxonResult {
  double statistic = 0.0;  // min of the positive and negative rank sums
  double p_value = 1.0;
  bool exact = false;
  std::size_t n = 0;  // pairs with a nonzero difference

  bool same_distribution(double alpha = 0.05) const { return p_value >= alpha; }
};

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace soh
