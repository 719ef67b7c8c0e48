#pragma once

// Smooth online parameter estimation: penalised recursive least squares where each
// estimate is pulled towards a momentum extrapolation of the two previous estimates.
//
//   Phi(t) = argmin_b ||X(t) - b U(t)||^2 + lambda ||b - [Phi(t-1) + beta (Phi(t-1) - Phi(t-2))]||_F^2
//          = (X U' + lambda M) (U U' + lambda I)^-1
//
// beta = 0 penalises the first difference, beta = 1 the second difference.

#include "tvvar/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace tvvar {

struct PenaltySpec {
  double lambda = 5000.0;  // also called alpha
  double beta = 0.9;

  void validate() const;
};

/// Warmup window used to seed the recursion: max(2*K*P, 50) samples.
std::size_t sope_warmup_length(int p, int k);

/// Returns a_block * (u u' + lambda I)^-1 through the Sherman-Morrison identity,
/// in O(rows * len(u)) without forming the inverse.
Matrix smw_apply(const Matrix& a_block, const Vector& u, double lambda);

/// Ridge-regularised least squares of X(t) on U(t) over every t in `window` that has K lags.
/// Returns a P x (K*P) coefficient block. Requires at least K+1 samples.
ParamMatrix ridge_least_squares(std::span<const Sample> window, int k, double ridge);

class SopeFilter {
 public:
  /// Starts from `init` as both Phi(t-1) and Phi(t-2); `lags` are the most recent K samples
  /// (oldest first).
  SopeFilter(ParamMatrix init, std::span<const Sample> lags, PenaltySpec penalty);

  /// Ridge LS initialisation on `warmup` (length >= K+1), ridge strength lambda.
  static SopeFilter from_warmup(std::span<const Sample> warmup, int k, PenaltySpec penalty);

  /// Consumes X(t) and returns Phi(t). The regressor is built from the lag buffer before
  /// `x` is pushed into it.
  const ParamMatrix& step(const Eigen::Ref<const Vector>& x);

  [[nodiscard]] const ParamMatrix& estimate() const { return phi_prev_; }
  [[nodiscard]] const ParamMatrix& previous_estimate() const { return phi_prev2_; }
  [[nodiscard]] const LagBuffer& lags() const { return lags_; }
  [[nodiscard]] const PenaltySpec& penalty() const { return penalty_; }
  [[nodiscard]] std::int64_t steps() const { return steps_; }
  [[nodiscard]] int p() const { return phi_prev_.p(); }
  [[nodiscard]] int k() const { return phi_prev_.k(); }

 private:
  ParamMatrix phi_prev_;
  ParamMatrix phi_prev2_;
  LagBuffer lags_;
  PenaltySpec penalty_;
  Vector residual_;
  std::int64_t steps_ = 0;
};

/// Runs the filter over a whole series: the first sope_warmup_length samples seed the
/// recursion and one estimate is returned for each later sample.
std::vector<ParamMatrix> run_sope(std::span<const Sample> samples, int k, PenaltySpec penalty);

}  // namespace tvvar
