#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sohcast/emd.hpp"
#include "sohcast/reframe.hpp"
#include "sohcast/rng.hpp"

namespace soh {

enum class SplitMode {
  exhaustive,       // every midpoint between consecutive distinct values
  random_threshold  // one uniform draw per candidate feature
};

struct TreeSpec {
  int max_depth = 6;
  int min_samples_leaf = 1;
  double colsample_by_tree = 1.0;   // feature fraction drawn once per tree
  double colsample_by_level = 1.0;  // ... per depth level, from the tree set
  double colsample_by_node = 1.0;   // ... per node, from the level set
  SplitMode split_mode = SplitMode::exhaustive;
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // rows go left when x[feature] < threshold
  double value = 0.0;      // leaf mean
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_row(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left
                                                                             : nodes[i].right;
    return nodes[i].value;
  }
};

/**
 * One least-squares regression tree. Splits maximize the squared-error
 * reduction; equal gains resolve to the lowest feature index, then the lowest
 * threshold, so a fit is reproducible. Constant targets produce a single
 * leaf. `weights` carries per-row multiplicities (empty means all ones).
 */
Tree fit_tree(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
              const TreeSpec& spec, Rng& rng, const std::vector<std::size_t>& weights = {});

enum class EnsembleMethod { gradient_boosting, random_forest, extra_trees };

/**
 * One spec covers the three ensemble families; fields that a method does not
 * use are ignored. extra_trees always fits the full sample with
 * random-threshold splits; random_forest honors `bootstrap`.
 */
struct EnsembleSpec {
  EnsembleMethod method = EnsembleMethod::gradient_boosting;
  int n_estimators = 100;
  double learning_rate = 0.1;  // boosting step size
  double subsample = 1.0;      // boosting row fraction, drawn without replacement
  int subsample_freq = 0;      // redraw the subsample every k trees; 0 redraws every tree
  bool bootstrap = true;       // random_forest row resampling
  TreeSpec tree;
  std::uint64_t seed = 0;
  std::string label;  // optional display name for reports
};

struct FittedEnsemble {
  EnsembleSpec spec;
  double base_prediction = 0.0;  // boosting starts from the target mean
  std::size_t n_features = 0;
  std::vector<Tree> trees;

  double predict_row(const std::vector<double>& x) const;
  std::vector<double> predict(const std::vector<std::vector<double>>& X) const;
};

/** Fits an ensemble; a given seed pins the result bit for bit. */
FittedEnsemble fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                   const EnsembleSpec& spec);

FittedEnsemble fit(const SupervisedFrame& frame, const EnsembleSpec& spec);

struct GridEntry {
  EnsembleSpec spec;
  double mean_mae = 0.0;
  std::vector<double> fold_mae;
};

struct GridSearchResult {
  EnsembleSpec best;
  std::vector<GridEntry> table;  // grid order
};

/**
 * Expanding-window cross validation over the grid; lowest mean validation MAE
 * wins, ties prefer fewer estimators, then shallower trees.
 */
GridSearchResult grid_search(const SupervisedFrame& frame, const std::vector<EnsembleSpec>& grid,
                             std::size_t folds = 10);

struct ComponentModelSpec {
  std::vector<std::string> predictors;  // lagged channels for each component model
  std::vector<std::string> unlagged;    // known-ahead covariates
  std::size_t past = 6;
  double train_fraction = 0.7;
  std::size_t folds = 10;
};

struct AugmentResult {
  DailySeries series;                // input plus one prediction channel per component
  std::vector<std::string> added;    // channel names, mode order then residue
  std::vector<EnsembleSpec> chosen;  // winning spec per component
};

/**
 * Fits one model per decomposition component (each mode, then the residue)
 * and appends its predictions as channels imf_1_pred.. / residue_pred.
 * Test-period rows get out-of-sample predictions from a model fit on the
 * train period only; train-period rows get within-train cross-validation
 * predictions, so nothing downstream of the split boundary sees test targets.
 */
AugmentResult fit_imf_predictors(const DailySeries& series, const Decomposition& d,
                                 const std::vector<EnsembleSpec>& grid,
                                 const ComponentModelSpec& how);

}  // namespace soh
