#pragma once

// Kalman filter baseline on the vectorised coefficients a(t) = vec(Phi(t)'):
//   a(t) = a(t-1) + w(t),        w ~ N(0, q_sigma^2 I)
//   X(t) = C(t) a(t) + v(t),     v ~ N(0, R),   C(t) = I_P kron U(t)'
// The state covariance is dense, (K P^2) x (K P^2).

#include "tvvar/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace tvvar {

struct KalmanConfig {
  double q_sigma = 1e-5;
  Matrix r;               // observation noise covariance; empty means identity
  double init_cov = 1.0;  // initial state covariance is init_cov * I, initial mean 0
};

/// Dense P x (K*P^2) observation matrix I_P kron u'.
Matrix build_observation_matrix(const Vector& u, int p);

/// Bytes needed for the dense state covariance, (K P^2)^2 doubles.
std::size_t kalman_covariance_bytes(int p, int k);

class KalmanFilter {
 public:
  KalmanFilter(int p, int k, KalmanConfig config);

  /// Pushes a sample into the lag buffer without an update (used until K lags exist).
  void prime(const Eigen::Ref<const Vector>& x);
  [[nodiscard]] bool ready() const { return lags_.full(); }

  /// Predict with the random-walk transition, then update with X(t). Requires ready().
  const ParamMatrix& step(const Eigen::Ref<const Vector>& x);

  /// prime() until ready, step() afterwards. Returns nullptr while priming.
  const ParamMatrix* consume(const Eigen::Ref<const Vector>& x);

  [[nodiscard]] const ParamMatrix& estimate() const { return phi_; }
  [[nodiscard]] const Vector& state() const { return a_; }
  [[nodiscard]] const Matrix& covariance() const { return cov_; }
  [[nodiscard]] const LagBuffer& lags() const { return lags_; }
  [[nodiscard]] int p() const { return p_; }
  [[nodiscard]] int k() const { return k_; }

 private:
  int p_;
  int k_;
  Eigen::Index m_;  // K*P, regressor length
  Eigen::Index n_;  // K*P^2, state length
  KalmanConfig config_;
  Vector a_;
  Matrix cov_;
  Matrix r_;
  LagBuffer lags_;
  ParamMatrix phi_;
  // Workspace reused across steps.
  Matrix cp_;      // C * cov, P x n
  Matrix gain_t_;  // K', P x n
  Matrix left_;    // [K, (C cov)'], n x 2P
  Matrix right_;   // [S K' - C cov; -K'], 2P x n
  Matrix s_;
  Vector innovation_;
};

/// Runs the filter over a series, starting from a = 0, cov = init_cov * I at the first
/// sample with K lags. Estimates for the first `skip` samples are dropped, so that the output
/// lines up with run_sope when skip = sope_warmup_length(P, K).
std::vector<ParamMatrix> run_kf(std::span<const Sample> samples, int k, const KalmanConfig& config, std::size_t skip);

}  // namespace tvvar
