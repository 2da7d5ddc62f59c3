#include "sohcast/reframe.hpp"

#include <algorithm>
#include <cmath>

#include "sohcast/errors.hpp"

namespace soh {

SupervisedFrame make_frame(const DailySeries& series,
                           const std::vector<std::string>& predictors, const std::string& target,
                           std::size_t past, std::size_t horizon,
                           const std::vector<std::string>& unlagged) {
  series.validate();
  if (past < 1 || horizon < 1) throw ShapeError("past and horizon must both be at least 1");
  if (predictors.empty() && unlagged.empty()) throw EmptyInput("no predictor channels given");
  if (std::find(unlagged.begin(), unlagged.end(), target) != unlagged.end())
    throw LeakageError("target '" + target + "' cannot be an unlagged predictor of itself");

  const std::vector<double>& y = series.channel(target);
  std::vector<const std::vector<double>*> lag_cols, now_cols;
  for (const auto& name : predictors) lag_cols.push_back(&series.channel(name));
  for (const auto& name : unlagged) now_cols.push_back(&series.channel(name));

  const std::size_t window = past + horizon;
  if (series.size() < window)
    throw InsufficientData("series of length " + std::to_string(series.size()) +
                           " cannot fill a window of " + std::to_string(window));
  const std::size_t rows = series.size() - window + 1;

  SupervisedFrame frame;
  frame.target_channel = target;
  frame.past = past;
  frame.horizon = horizon;
  for (const auto& name : predictors)
    for (std::size_t l = 0; l < past; ++l)
      frame.feature_names.push_back(name + "[t-" + std::to_string(past - l) + "]");
  for (const auto& name : unlagged) frame.feature_names.push_back(name + "[t]");

  frame.predictors.resize(rows);
  frame.targets.resize(rows);
  frame.origin_dates.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double>& x = frame.predictors[r];
    x.reserve(frame.feature_names.size());
    for (const auto* col : lag_cols)
      for (std::size_t l = 0; l < past; ++l) x.push_back((*col)[r + l]);
    for (const auto* col : now_cols) x.push_back((*col)[r + past]);
    std::vector<double>& t = frame.targets[r];
    t.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) t.push_back(y[r + past + h]);
    frame.origin_dates[r] = series.dates[r + past];
  }
  return frame;
}

SupervisedFrame slice_frame(const SupervisedFrame& frame, std::size_t begin, std::size_t end) {
  if (begin > end || end > frame.rows()) throw ShapeError("frame slice out of range");
  SupervisedFrame out;
  out.feature_names = frame.feature_names;
  out.target_channel = frame.target_channel;
  out.predictor_set = frame.predictor_set;
  out.past = frame.past;
  out.horizon = frame.horizon;
  out.predictors.assign(frame.predictors.begin() + begin, frame.predictors.begin() + end);
  out.targets.assign(frame.targets.begin() + begin, frame.targets.begin() + end);
  out.origin_dates.assign(frame.origin_dates.begin() + begin, frame.origin_dates.begin() + end);
  return out;
}

FrameSplit train_test_split(const SupervisedFrame& frame, double train_fraction) {
  if (!(train_fraction > 0.0) || train_fraction > 1.0)
    throw ShapeError("train fraction must be in (0, 1]");
  const std::size_t cut =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(frame.rows())));
  return {slice_frame(frame, 0, cut), slice_frame(frame, cut, frame.rows())};
}

std::vector<CvFold> ts_cv_folds(std::size_t rows, std::size_t folds) {
  if (folds < 1) throw ShapeError("need at least one fold");
  if (rows < folds + 1)
    throw InsufficientData(std::to_string(rows) + " rows cannot feed " + std::to_string(folds) +
                           " expanding folds");
  const std::size_t block = rows / (folds + 1);
  std::vector<CvFold> out;
  out.reserve(folds);
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t valid_begin = rows - (folds - k) * block;
    out.push_back({valid_begin, valid_begin, valid_begin + block});
  }
  return out;
}

}  // namespace soh
