#include "sohcast/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sohcast/errors.hpp"

namespace soh {

namespace {

struct Columns {
  std::size_t n = 0;
  std::size_t f = 0;
  std::vector<std::vector<double>> col;
  // Per feature: row indices ascending by value, ties by row index, so every
  // sweep visits rows in one reproducible order.
  std::vector<std::vector<std::size_t>> order;
};

Columns columnize(const std::vector<std::vector<double>>& X) {
  Columns c;
  c.n = X.size();
  c.f = X.empty() ? 0 : X[0].size();
  for (const auto& row : X)
    if (row.size() != c.f) throw ShapeError("predictor rows differ in width");
  c.col.assign(c.f, std::vector<double>(c.n));
  for (std::size_t r = 0; r < c.n; ++r)
    for (std::size_t j = 0; j < c.f; ++j) c.col[j][r] = X[r][j];
  c.order.assign(c.f, {});
  for (std::size_t j = 0; j < c.f; ++j) {
    auto& ord = c.order[j];
    ord.resize(c.n);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    const auto& v = c.col[j];
    std::sort(ord.begin(), ord.end(), [&v](std::size_t a, std::size_t b) {
      return v[a] != v[b] ? v[a] < v[b] : a < b;
    });
  }
  return c;
}

std::vector<int> all_features(std::size_t f) {
  std::vector<int> out(f);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

// Feature subsets keep ascending order so the lowest-index tie rule holds.
std::vector<int> draw_features(const std::vector<int>& from, double fraction, Rng& rng) {
  if (fraction >= 1.0 || from.size() <= 1) return from;
  const auto k = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(fraction * static_cast<double>(from.size()))));
  if (k >= from.size()) return from;
  std::vector<int> out;
  out.reserve(k);
  for (std::size_t pick : rng.sample(from.size(), k)) out.push_back(from[pick]);
  return out;
}

class TreeBuilder {
 public:
  TreeBuilder(const Columns& cols, const std::vector<double>& y, const TreeSpec& spec, Rng& rng,
              const std::vector<std::size_t>& weight)
      : cols_(cols), y_(y), spec_(spec), rng_(rng), weight_(weight) {}

  Tree build() {
    Tree tree;
    tree.nodes.push_back({});
    node_of_.assign(cols_.n, -1);
    bool any = false;
    for (std::size_t r = 0; r < cols_.n; ++r)
      if (weight_[r] > 0) {
        node_of_[r] = 0;
        any = true;
      }
    if (!any) throw EmptyInput("tree fit received an empty sample");

    const std::vector<int> tree_feats =
        draw_features(all_features(cols_.f), spec_.colsample_by_tree, rng_);

    std::vector<int> frontier{0};
    for (int depth = 0; !frontier.empty(); ++depth) {
      begin_level(frontier);
      if (depth < spec_.max_depth) {
        const std::vector<int> level_feats =
            draw_features(tree_feats, spec_.colsample_by_level, rng_);
        for (NodeState& st : states_) {
          if (!splittable(st)) continue;
          st.allowed.assign(cols_.f, 0);
          for (int j : draw_features(level_feats, spec_.colsample_by_node, rng_))
            st.allowed[static_cast<std::size_t>(j)] = 1;
        }
        if (spec_.split_mode == SplitMode::exhaustive)
          scan_exhaustive();
        else
          scan_random();
      }
      frontier = apply_level(frontier, tree);
    }
    return tree;
  }

 private:
  struct NodeState {
    double sum = 0.0;
    std::size_t count = 0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    std::vector<char> allowed;  // feature mask; empty when the node cannot split
    double best_gain = 0.0;     // only strictly positive reductions win
    int best_feature = -1;
    double best_threshold = 0.0;
    // scratch for the exhaustive sweep
    double left_sum = 0.0;
    std::size_t left_count = 0;
    double prev_value = 0.0;
    bool seen = false;
  };

  bool splittable(const NodeState& st) const {
    return st.count >= 2 * static_cast<std::size_t>(spec_.min_samples_leaf) &&
           st.y_min < st.y_max;
  }

  void begin_level(const std::vector<int>& frontier) {
    states_.assign(frontier.size(), {});
    if (slot_of_.size() < static_cast<std::size_t>(frontier.back()) + 1)
      slot_of_.resize(static_cast<std::size_t>(frontier.back()) + 1, -1);
    for (std::size_t s = 0; s < frontier.size(); ++s)
      slot_of_[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    node_rows_.assign(frontier.size(), {});
    for (std::size_t r = 0; r < cols_.n; ++r) {
      const int node = node_of_[r];
      if (node < 0) continue;
      NodeState& st = states_[static_cast<std::size_t>(slot_of_[node])];
      const double w = static_cast<double>(weight_[r]);
      st.sum += w * y_[r];
      st.count += weight_[r];
      st.y_min = std::min(st.y_min, y_[r]);
      st.y_max = std::max(st.y_max, y_[r]);
      node_rows_[static_cast<std::size_t>(slot_of_[node])].push_back(r);
    }
  }

  static double gain_of(double total_sum, std::size_t total_count, double left_sum,
                        std::size_t left_count) {
    const double right_sum = total_sum - left_sum;
    const double nl = static_cast<double>(left_count);
    const double nr = static_cast<double>(total_count - left_count);
    return left_sum * left_sum / nl + right_sum * right_sum / nr -
           total_sum * total_sum / static_cast<double>(total_count);
  }

  void scan_exhaustive() {
    const auto min_leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    for (std::size_t j = 0; j < cols_.f; ++j) {
      for (NodeState& st : states_) {
        st.left_sum = 0.0;
        st.left_count = 0;
        st.seen = false;
      }
      const auto& values = cols_.col[j];
      for (const std::size_t r : cols_.order[j]) {
        const int node = node_of_[r];
        if (node < 0) continue;
        NodeState& st = states_[static_cast<std::size_t>(slot_of_[node])];
        if (st.allowed.empty() || !st.allowed[j]) continue;
        const double v = values[r];
        if (st.seen && v > st.prev_value && st.left_count >= min_leaf &&
            st.count - st.left_count >= min_leaf) {
          const double gain = gain_of(st.sum, st.count, st.left_sum, st.left_count);
          if (gain > st.best_gain) {
            st.best_gain = gain;
            st.best_feature = static_cast<int>(j);
            st.best_threshold = 0.5 * (st.prev_value + v);
          }
        }
        const double w = static_cast<double>(weight_[r]);
        st.left_sum += w * y_[r];
        st.left_count += weight_[r];
        st.prev_value = v;
        st.seen = true;
      }
    }
  }

  void scan_random() {
    const auto min_leaf = static_cast<std::size_t>(spec_.min_samples_leaf);
    for (std::size_t s = 0; s < states_.size(); ++s) {
      NodeState& st = states_[s];
      if (st.allowed.empty()) continue;
      const auto& rows = node_rows_[s];
      for (std::size_t j = 0; j < cols_.f; ++j) {
        if (!st.allowed[j]) continue;
        const auto& values = cols_.col[j];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const std::size_t r : rows) {
          lo = std::min(lo, values[r]);
          hi = std::max(hi, values[r]);
        }
        if (!(lo < hi)) continue;
        const double threshold = rng_.uniform(lo, hi);
        if (!(threshold > lo)) continue;  // the low extreme would leave a side empty
        double left_sum = 0.0;
        std::size_t left_count = 0;
        for (const std::size_t r : rows) {
          if (values[r] < threshold) {
            left_sum += static_cast<double>(weight_[r]) * y_[r];
            left_count += weight_[r];
          }
        }
        if (left_count < min_leaf || st.count - left_count < min_leaf) continue;
        const double gain = gain_of(st.sum, st.count, left_sum, left_count);
        if (gain > st.best_gain) {
          st.best_gain = gain;
          st.best_feature = static_cast<int>(j);
          st.best_threshold = threshold;
        }
      }
    }
  }

  std::vector<int> apply_level(const std::vector<int>& frontier, Tree& tree) {
    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const NodeState& st = states_[s];
      TreeNode& node = tree.nodes[static_cast<std::size_t>(frontier[s])];
      if (st.best_feature >= 0) {
        node.feature = st.best_feature;
        node.threshold = st.best_threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        next.push_back(node.left);
        next.push_back(node.right);
      } else {
        node.value = st.sum / static_cast<double>(st.count);
      }
    }
    for (std::size_t r = 0; r < cols_.n; ++r) {
      const int id = node_of_[r];
      if (id < 0) continue;
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.feature >= 0)
        node_of_[r] = cols_.col[static_cast<std::size_t>(node.feature)][r] < node.threshold
                          ? node.left
                          : node.right;
      else
        node_of_[r] = -2;  // settled in a leaf
    }
    return next;
  }

  const Columns& cols_;
  const std::vector<double>& y_;
  const TreeSpec& spec_;
  Rng& rng_;
  const std::vector<std::size_t>& weight_;
  std::vector<int> node_of_;
  std::vector<int> slot_of_;
  std::vector<NodeState> states_;
  std::vector<std::vector<std::size_t>> node_rows_;
};

void check_training_input(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  if (X.empty()) throw EmptyInput("no training rows");
  if (y.size() != X.size()) throw ShapeError("targets and rows differ in count");
  if (X[0].empty()) throw EmptyInput("training rows have no features");
}

}  // namespace

Tree fit_tree(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
              const TreeSpec& spec, Rng& rng, const std::vector<std::size_t>& weights) {
  check_training_input(X, y);
  if (!weights.empty() && weights.size() != X.size())
    throw ShapeError("weights and rows differ in count");
  const Columns cols = columnize(X);
  const std::vector<std::size_t> ones(weights.empty() ? X.size() : 0, 1);
  return TreeBuilder(cols, y, spec, rng, weights.empty() ? ones : weights).build();
}

double FittedEnsemble::predict_row(const std::vector<double>& x) const {
  if (x.size() != n_features)
    throw ShapeError("expected " + std::to_string(n_features) + " features, got " +
                     std::to_string(x.size()));
  if (spec.method == EnsembleMethod::gradient_boosting) {
    double out = base_prediction;
    for (const Tree& t : trees) out += spec.learning_rate * t.predict_row(x);
    return out;
  }
  double out = 0.0;
  for (const Tree& t : trees) out += t.predict_row(x);
  return out / static_cast<double>(trees.size());
}

std::vector<double> FittedEnsemble::predict(const std::vector<std::vector<double>>& X) const {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(predict_row(row));
  return out;
}

FittedEnsemble fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                   const EnsembleSpec& spec) {
  check_training_input(X, y);
  if (spec.n_estimators < 1) throw ShapeError("need at least one estimator");

  const Columns cols = columnize(X);
  const std::size_t n = cols.n;
  Rng rng(spec.seed);

  FittedEnsemble model;
  model.spec = spec;
  model.n_features = cols.f;
  model.trees.reserve(static_cast<std::size_t>(spec.n_estimators));

  TreeSpec tree_spec = spec.tree;
  if (spec.method == EnsembleMethod::extra_trees) tree_spec.split_mode = SplitMode::random_threshold;

  std::vector<std::size_t> weight(n, 1);

  if (spec.method == EnsembleMethod::gradient_boosting) {
    double base = 0.0;
    for (double v : y) base += v;
    base /= static_cast<double>(n);
    model.base_prediction = base;

    std::vector<double> residual(n);
    for (std::size_t r = 0; r < n; ++r) residual[r] = y[r] - base;

    for (int m = 0; m < spec.n_estimators; ++m) {
      if (spec.subsample < 1.0 &&
          (spec.subsample_freq <= 0 || m % spec.subsample_freq == 0)) {
        std::fill(weight.begin(), weight.end(), 0);
        const auto k = static_cast<std::size_t>(
            std::max<long long>(1, std::llround(spec.subsample * static_cast<double>(n))));
        for (std::size_t idx : rng.sample(n, k)) weight[idx] = 1;
      }
      Tree t = TreeBuilder(cols, residual, tree_spec, rng, weight).build();
      for (std::size_t r = 0; r < n; ++r)
        residual[r] -= spec.learning_rate * t.predict_row(X[r]);
      model.trees.push_back(std::move(t));
    }
    return model;
  }

  const bool bootstrap = spec.method == EnsembleMethod::random_forest && spec.bootstrap;
  for (int m = 0; m < spec.n_estimators; ++m) {
    if (bootstrap) {
      std::fill(weight.begin(), weight.end(), 0);
      for (std::size_t i = 0; i < n; ++i) ++weight[rng.index(n)];
    }
    model.trees.push_back(TreeBuilder(cols, y, tree_spec, rng, weight).build());
  }
  return model;
}

namespace {

std::vector<double> first_targets(const SupervisedFrame& frame) {
  if (frame.horizon != 1) throw ShapeError("this fit expects a single-step horizon");
  std::vector<double> y;
  y.reserve(frame.rows());
  for (const auto& t : frame.targets) y.push_back(t[0]);
  return y;
}

}  // namespace

FittedEnsemble fit(const SupervisedFrame& frame, const EnsembleSpec& spec) {
  return fit(frame.predictors, first_targets(frame), spec);
}

GridSearchResult grid_search(const SupervisedFrame& frame, const std::vector<EnsembleSpec>& grid,
                             std::size_t folds) {
  if (grid.empty()) throw EmptyInput("empty hyperparameter grid");
  const std::vector<double> y = first_targets(frame);
  const std::vector<CvFold> cv = ts_cv_folds(frame.rows(), folds);

  GridSearchResult result;
  result.table.reserve(grid.size());
  std::size_t best_index = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridEntry entry;
    entry.spec = grid[g];
    for (const CvFold& fold : cv) {
      const std::vector<std::vector<double>> train_x(frame.predictors.begin(),
                                                     frame.predictors.begin() + fold.train_end);
      const std::vector<double> train_y(y.begin(), y.begin() + fold.train_end);
      const FittedEnsemble model = fit(train_x, train_y, grid[g]);
      double abs_sum = 0.0;
      for (std::size_t r = fold.valid_begin; r < fold.valid_end; ++r)
        abs_sum += std::fabs(model.predict_row(frame.predictors[r]) - y[r]);
      entry.fold_mae.push_back(abs_sum / static_cast<double>(fold.valid_end - fold.valid_begin));
    }
    entry.mean_mae = 0.0;
    for (double m : entry.fold_mae) entry.mean_mae += m;
    entry.mean_mae /= static_cast<double>(entry.fold_mae.size());
    result.table.push_back(std::move(entry));

    const GridEntry& best = result.table[best_index];
    const GridEntry& cand = result.table.back();
    const bool better =
        cand.mean_mae < best.mean_mae ||
        (cand.mean_mae == best.mean_mae &&
         (cand.spec.n_estimators < best.spec.n_estimators ||
          (cand.spec.n_estimators == best.spec.n_estimators &&
           cand.spec.tree.max_depth < best.spec.tree.max_depth)));
    if (better) best_index = g;
  }
  result.best = result.table[best_index].spec;
  return result;
}

AugmentResult fit_imf_predictors(const DailySeries& series, const Decomposition& d,
                                 const std::vector<EnsembleSpec>& grid,
                                 const ComponentModelSpec& how) {
  series.validate();
  if (d.length() != series.size())
    throw ShapeError("decomposition length does not match the series");
  if (grid.empty()) throw EmptyInput("empty hyperparameter grid");

  AugmentResult out;
  out.series = series;

  struct Component {
    std::string name;
    const std::vector<double>* values;
    bool as_delta;  // model one-step changes, rebuild levels from the prior value
  };
  std::vector<Component> components;
  for (std::size_t k = 0; k < d.imfs.size(); ++k)
    components.push_back({"imf_" + std::to_string(k + 1) + "_pred", &d.imfs[k], false});
  // Modes oscillate around zero, so their level stays inside the training
  // range and lagged levels are a sound target. The residue is monotone by
  // construction and trees never predict outside the leaf values they grew
  // with, so a level model would flatline once the trend leaves the train
  // window. Modelling its one-step change and adding the prior level keeps
  // the forecast on the trend; a straight-line residue comes back exact.
  components.push_back({"residue_pred", &d.residue, true});

  for (const auto& [name, values, as_delta] : components) {
    DailySeries staged = series;
    if (as_delta) {
      std::vector<double> delta(values->size(), 0.0);
      for (std::size_t t = 1; t < values->size(); ++t)
        delta[t] = (*values)[t] - (*values)[t - 1];
      staged.channels["component"] = std::move(delta);
    } else {
      staged.channels["component"] = *values;
    }
    const SupervisedFrame frame =
        make_frame(staged, how.predictors, "component", how.past, 1, how.unlagged);

    const std::size_t train_rows = static_cast<std::size_t>(
        std::floor(how.train_fraction * static_cast<double>(frame.rows())));
    if (train_rows < 2 || train_rows >= frame.rows())
      throw InsufficientData("component split leaves no usable train/test rows");
    const SupervisedFrame train = slice_frame(frame, 0, train_rows);

    EnsembleSpec spec = grid[0];
    if (grid.size() > 1) {
      const std::size_t folds = std::min(how.folds, train_rows - 1);
      spec = grid_search(train, grid, folds).best;
    }

    std::vector<double> row_pred(frame.rows());
    // Within-train cross-validation predictions; the leading block, which no
    // fold validates, takes the first fold's model.
    const std::vector<CvFold> cv = ts_cv_folds(train_rows, std::min(how.folds, train_rows - 1));
    for (std::size_t k = 0; k < cv.size(); ++k) {
      const FittedEnsemble model = fit(slice_frame(train, 0, cv[k].train_end), spec);
      for (std::size_t r = cv[k].valid_begin; r < cv[k].valid_end; ++r)
        row_pred[r] = model.predict_row(frame.predictors[r]);
      if (k == 0)
        for (std::size_t r = 0; r < cv[0].valid_begin; ++r)
          row_pred[r] = model.predict_row(frame.predictors[r]);
    }
    const FittedEnsemble full = fit(train, spec);
    for (std::size_t r = train_rows; r < frame.rows(); ++r)
      row_pred[r] = full.predict_row(frame.predictors[r]);

    // Row r targets series index r + past; the prior level there is observed,
    // so adding it to the predicted change stays one-step-ahead.
    if (as_delta)
      for (std::size_t r = 0; r < frame.rows(); ++r)
        row_pred[r] += (*values)[r + how.past - 1];

    // Align rows to series indices; the first `past` days precede any row and
    // repeat the earliest prediction.
    std::vector<double> channel(series.size());
    for (std::size_t r = 0; r < frame.rows(); ++r) channel[r + how.past] = row_pred[r];
    for (std::size_t i = 0; i < how.past; ++i) channel[i] = row_pred.front();

    out.series.channels[name] = std::move(channel);
    out.added.push_back(name);
    out.chosen.push_back(spec);
  }
  return out;
}

}  // namespace soh
