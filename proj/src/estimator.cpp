#include "arxid/estimator.hpp"

#include "arxid/errors.hpp"

#include <algorithm>

namespace arxid {

void Dataset::reserve(std::int64_t rows) {
  if (rows <= X_.rows()) return;
  const std::int64_t cap = std::max<std::int64_t>(rows, std::max<std::int64_t>(64, 2 * X_.rows()));
  Mat X(cap, n_x_), Y(cap, n_y_);
  if (count_ > 0) {
    X.topRows(count_) = X_.topRows(count_);
    Y.topRows(count_) = Y_.topRows(count_);
  }
  X_.swap(X);
  Y_.swap(Y);
}

void Dataset::append(const Vec& x, const Vec& y) {
  if (x.size() != n_x_ || y.size() != n_y_) throw DimensionMismatch("Dataset::append: sample has the wrong shape");
  reserve(count_ + 1);
  X_.row(count_) = x.transpose();
  Y_.row(count_) = y.transpose();
  information_.noalias() += x * x.transpose();
  ++count_;
}

void Dataset::append(const Dataset& other) {
  if (other.n_x_ != n_x_ || other.n_y_ != n_y_) throw DimensionMismatch("Dataset::append: datasets differ in shape");
  reserve(count_ + other.count_);
  X_.middleRows(count_, other.count_) = other.X_.topRows(other.count_);
  Y_.middleRows(count_, other.count_) = other.Y_.topRows(other.count_);
  information_ += other.information_;
  count_ += other.count_;
}

Eigen::Ref<const Mat> Dataset::regressors(std::int64_t count) const {
  if (count < 0 || count > count_) count = count_;
  return X_.topRows(count);
}

Eigen::Ref<const Mat> Dataset::outputs(std::int64_t count) const {
  if (count < 0 || count > count_) count = count_;
  return Y_.topRows(count);
}

Mat empirical_covariance(const Dataset& d, std::int64_t count) {
  if (count < 0 || count > d.size()) count = d.size();
  if (count < 1) throw InvalidParameter("empirical_covariance: empty dataset");
  if (count == d.size()) return d.information() / static_cast<double>(count);
  const auto X = d.regressors(count);
  Mat S = X.transpose() * X;
  return S / static_cast<double>(count);
}

Estimate ols(const Dataset& d, std::int64_t count) {
  if (count < 0 || count > d.size()) count = d.size();
  if (count < 1) throw InvalidParameter("ols: empty dataset");
  const auto X = d.regressors(count);
  const auto Y = d.outputs(count);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(X);
  Estimate e;
  e.theta.entries = cod.solve(Mat(Y)).transpose();
  e.covariance = empirical_covariance(d, count);
  e.samples = count;
  e.rank_deficient = cod.rank() < d.n_x();
  return e;
}

double estimation_error(const ThetaMatrix& estimate, const ThetaMatrix& truth) {
  if (estimate.entries.rows() != truth.entries.rows() || estimate.entries.cols() != truth.entries.cols()) {
    throw DimensionMismatch("estimation_error: shapes differ");
  }
  return spectral_norm(estimate.entries - truth.entries);
}

double estimation_error(const Estimate& e, const ThetaMatrix& truth) { return estimation_error(e.theta, truth); }

}  // namespace arxid
