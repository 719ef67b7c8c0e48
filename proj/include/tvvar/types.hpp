#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Base error; the CLI maps the subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, configuration, or arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

// A numerical operation could not be carried out (singular system, failed stationarity, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// One multichannel observation X(t).
struct Sample {
  std::int64_t t = 0;
  Vector values;
};

/// Coefficient block [Phi_1, ..., Phi_K] of a VAR(K) at one time point,
/// stored as a P x (K*P) matrix. Lag l (1-based) occupies columns (l-1)*P .. l*P-1.
class ParamMatrix {
 public:
  ParamMatrix() = default;
  ParamMatrix(int p, int k) : entries_(Matrix::Zero(p, static_cast<Eigen::Index>(k) * p)), k_(k) {}
  ParamMatrix(Matrix entries, int k) : entries_(std::move(entries)), k_(k) {
    if (k_ < 1 || entries_.cols() != static_cast<Eigen::Index>(k_) * entries_.rows()) {
      throw InputError("ParamMatrix: expected P x (K*P) entries");
    }
  }

  [[nodiscard]] int p() const { return static_cast<int>(entries_.rows()); }
  [[nodiscard]] int k() const { return k_; }

  [[nodiscard]] const Matrix& entries() const { return entries_; }
  Matrix& entries() { return entries_; }

  [[nodiscard]] auto lag(int l) const { return entries_.middleCols(static_cast<Eigen::Index>(l - 1) * p(), p()); }
  auto lag(int l) { return entries_.middleCols(static_cast<Eigen::Index>(l - 1) * p(), p()); }

  double operator()(int row, int col) const { return entries_(row, col); }
  double& operator()(int row, int col) { return entries_(row, col); }

  [[nodiscard]] bool all_finite() const { return entries_.allFinite(); }

 private:
  Matrix entries_;
  int k_ = 1;
};

/// Holds the last K observations as the stacked regressor U(t) = [X(t-1)', ..., X(t-K)']'.
/// Pushing a sample shifts older lags towards the tail in place.
class LagBuffer {
 public:
  LagBuffer() = default;
  LagBuffer(int p, int k) : stacked_(Vector::Zero(static_cast<Eigen::Index>(p) * k)), p_(p), k_(k) {}

  void push(const Eigen::Ref<const Vector>& x) {
    if (x.size() != p_) throw InputError("LagBuffer: sample has wrong channel count");
    const auto tail = static_cast<std::ptrdiff_t>(p_) * (k_ - 1);
    double* data = stacked_.data();
    std::copy_backward(data, data + tail, data + tail + p_);
    stacked_.head(p_) = x;
    if (filled_ < k_) ++filled_;
  }

  [[nodiscard]] bool full() const { return filled_ == k_; }
  [[nodiscard]] int p() const { return p_; }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] const Vector& regressor() const { return stacked_; }

 private:
  Vector stacked_;
  int p_ = 0;
  int k_ = 0;
  int filled_ = 0;
};

inline Eigen::Index regressor_length(int p, int k) { return static_cast<Eigen::Index>(p) * k; }

}  // namespace tvvar
