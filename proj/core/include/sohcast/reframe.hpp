#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sohcast/timeseries.hpp"

namespace soh {

/** Supervised view of a regular series: lagged windows mapped to targets. */
struct SupervisedFrame {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> predictors;  // rows x features
  std::vector<std::vector<double>> targets;     // rows x horizon
  std::vector<std::int64_t> origin_dates;       // date of each row's first target
  std::string target_channel;
  std::string predictor_set;  // free-form tag, e.g. "basic"
  std::size_t past = 0;
  std::size_t horizon = 0;

  std::size_t rows() const { return predictors.size(); }
  std::size_t features() const { return feature_names.size(); }
};

/**
 * Unit-stride reframing. Row r carries `past` lags of every predictor channel
 * (channel-major, oldest lag first: ch[t-past] .. ch[t-1]) plus each unlagged
 * channel read at the first target step, and predicts `horizon` consecutive
 * values of `target`. Unlagged channels are for covariates known ahead of
 * time; listing the target there throws LeakageError.
 */
SupervisedFrame make_frame(const DailySeries& series,
                           const std::vector<std::string>& predictors, const std::string& target,
                           std::size_t past, std::size_t horizon = 1,
                           const std::vector<std::string>& unlagged = {});

/** Rows [begin, end) as a frame of their own. */
SupervisedFrame slice_frame(const SupervisedFrame& frame, std::size_t begin, std::size_t end);

struct FrameSplit {
  SupervisedFrame train;
  SupervisedFrame test;
};

/** Chronological split; train takes the first floor(fraction * rows) rows. */
FrameSplit train_test_split(const SupervisedFrame& frame, double train_fraction = 0.7);

struct CvFold {
  std::size_t train_end;    // trains on rows [0, train_end)
  std::size_t valid_begin;  // == train_end
  std::size_t valid_end;    // validates on [valid_begin, valid_end)
};

/**
 * Expanding-window cross validation: rows cut into folds+1 contiguous blocks;
 * fold k trains on blocks 0..k and validates on block k+1. Validation blocks
 * share the size floor(rows / (folds+1)); leftover rows extend the first
 * training block. Needs rows >= folds + 1.
 */
std::vector<CvFold> ts_cv_folds(std::size_t rows, std::size_t folds);

}  // namespace soh
