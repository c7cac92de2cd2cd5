#pragma once

#include "arxid/arx_model.hpp"

#include <cstdint>

namespace arxid {

/// Append-only list of (x_t, y_t) pairs, stored row-wise.
class Dataset {
 public:
  Dataset(int n_x, int n_y) : n_x_(n_x), n_y_(n_y) {}

  void append(const Vec& x, const Vec& y);
  void append(const Dataset& other);

  std::int64_t size() const { return count_; }
  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }

  /// First `count` rows (all when count < 0).
  Eigen::Ref<const Mat> regressors(std::int64_t count = -1) const;
  Eigen::Ref<const Mat> outputs(std::int64_t count = -1) const;

  /// Un-normalized sum of x_t x_t^T over all rows.
  const Mat& information() const { return information_; }

 private:
  void reserve(std::int64_t rows);

  int n_x_;
  int n_y_;
  std::int64_t count_ = 0;
  Mat X_;  // capacity x n_x
  Mat Y_;  // capacity x n_y
  Mat information_ = Mat::Zero(n_x_, n_x_);
};

struct Estimate {
  ThetaMatrix theta;
  Mat covariance;  // (1/T) sum x x^T
  std::int64_t samples = 0;
  bool rank_deficient = false;
};

/// (1/T) sum x_t x_t^T over the first `count` rows (all when count < 0).
Mat empirical_covariance(const Dataset& d, std::int64_t count = -1);

/// Least squares over the first `count` rows. Solved with a complete
/// orthogonal decomposition; a rank-deficient design yields the minimum-norm
/// solution with `rank_deficient` set.
Estimate ols(const Dataset& d, std::int64_t count = -1);

/// Spectral norm of theta_hat - theta.
double estimation_error(const Estimate& e, const ThetaMatrix& truth);
double estimation_error(const ThetaMatrix& estimate, const ThetaMatrix& truth);

}  // namespace arxid
