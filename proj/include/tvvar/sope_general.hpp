#pragma once

// Smooth online estimation with an unknown innovation covariance. Each step whitens the
// data with the running residual covariance, applies the identity-covariance recursion in
// whitened coordinates, and maps the estimate back.

#include "tvvar/sope.hpp"
#include "tvvar/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace tvvar {

struct SymmetricRoot {
  Matrix sqrt;
  Matrix inv_sqrt;
};

/// Symmetric square root and inverse square root of (sigma + jitter I), with eigenvalues
/// clamped below at `jitter`. Throws InputError if sigma is not symmetric to 1e-12.
SymmetricRoot sym_sqrt_pair(const Matrix& sigma, double jitter);

struct GeneralSopeOptions {
  // Steps during which whitening uses the identity while the covariance accumulates.
  // Negative selects the default of 10 * P.
  int burn_in = -1;
  // Jitter is jitter_scale * trace(Sigma) / P.
  double jitter_scale = 1e-8;
};

class GeneralSopeFilter {
 public:
  /// `init` seeds Phi(t-1) = Phi(t-2); `lags` are the most recent K samples (oldest first);
  /// `samples_seen` is the time counter t matching Sigma = I.
  GeneralSopeFilter(ParamMatrix init, std::span<const Sample> lags, std::int64_t samples_seen, PenaltySpec penalty,
                    GeneralSopeOptions options = {});

  static GeneralSopeFilter from_warmup(std::span<const Sample> warmup, int k, PenaltySpec penalty,
                                       GeneralSopeOptions options = {});

  const ParamMatrix& step(const Eigen::Ref<const Vector>& x);

  [[nodiscard]] const ParamMatrix& estimate() const { return phi_prev_; }
  [[nodiscard]] const ParamMatrix& previous_estimate() const { return phi_prev2_; }
  [[nodiscard]] const LagBuffer& lags() const { return lags_; }
  [[nodiscard]] const Matrix& covariance() const { return sigma_; }
  [[nodiscard]] const SymmetricRoot& covariance_root() const { return root_; }
  [[nodiscard]] const Vector& last_residual() const { return residual_; }
  [[nodiscard]] const Vector& last_whitened_residual() const { return whitened_residual_; }
  [[nodiscard]] std::int64_t time_index() const { return t_; }
  [[nodiscard]] int burn_in() const { return burn_in_; }
  [[nodiscard]] int p() const { return phi_prev_.p(); }
  [[nodiscard]] int k() const { return phi_prev_.k(); }

 private:
  void refresh_root();
  // W * A * (I_K kron V) for a P x KP block A.
  Matrix transform(const Matrix& w, const Matrix& a, const Matrix& v) const;

  ParamMatrix phi_prev_;
  ParamMatrix phi_prev2_;
  LagBuffer lags_;
  PenaltySpec penalty_;
  GeneralSopeOptions options_;
  Matrix sigma_;
  SymmetricRoot root_;
  Vector residual_;
  Vector whitened_residual_;
  std::int64_t t_ = 0;
  std::int64_t steps_ = 0;
  int burn_in_ = 0;
};

std::vector<ParamMatrix> run_gsope(std::span<const Sample> samples, int k, PenaltySpec penalty,
                                   GeneralSopeOptions options = {});

}  // namespace tvvar
