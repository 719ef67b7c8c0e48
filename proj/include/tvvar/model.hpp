#pragma once

// Data model for time-varying VAR(K) processes: cosine coefficient designs,
// the companion-matrix stationarity check, simulation, and regressor stacking.

#include "tvvar/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tvvar {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from (base, stream) with a SplitMix64 finaliser.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Additive step applied to one coefficient entry from time index `t` onwards.
struct Discontinuity {
  std::int64_t t = 0;
  int row = 0;
  int col = 0;  // column within the lag block, 0-based
  int lag = 1;  // 1-based
  double delta = 0.0;
};

struct SimSpec {
  int p = 5;
  int k = 1;
  std::int64_t t_total = 2000;
  // Disjoint 0-based channel groups covering 0..p-1. Empty means a single group.
  std::vector<std::vector<int>> groups;
  Interval amp_diag{0.3, 0.7};
  Interval amp_offdiag{-0.2, 0.2};
  // Innovation covariance; an empty matrix means identity.
  Matrix noise_cov;
  std::uint64_t seed = 0;
  std::vector<Discontinuity> discontinuities;

  double radius_limit = 0.98;
  int max_halvings = 20;

  void validate() const;
  [[nodiscard]] Matrix noise_covariance() const;
  [[nodiscard]] std::vector<std::vector<int>> effective_groups() const;
  [[nodiscard]] std::int64_t burn_in() const { return 10 * static_cast<std::int64_t>(k); }
};

/// Ground-truth coefficients; element n is Phi at sample index n (rescaled time (n+1)/T).
using CoeffPath = std::vector<ParamMatrix>;

/// Random-amplitude, random-phase cosine coefficients restricted to within-group entries.
/// Amplitudes are halved until every time point has companion spectral radius below
/// `spec.radius_limit`; then discontinuities are applied and the path is re-checked.
CoeffPath make_cosine_coeffs(const SimSpec& spec, Rng& rng);

/// Explicit (K*P) x (K*P) companion matrix of a VAR(K) coefficient block.
Matrix companion_matrix(const ParamMatrix& phi);

double companion_spectral_radius(const ParamMatrix& phi);

/// Largest companion spectral radius over the whole path.
double max_spectral_radius(const CoeffPath& path);

/// Symmetric PSD square root of a covariance, used to colour i.i.d. normals.
/// Throws InputError when the matrix is not symmetric PSD.
Matrix covariance_factor(const Matrix& cov);

/// Simulates X(n) = sum_l Phi_{n,l} X(n-l) + E(n) for n = 0..T-1. The K initial lags are
/// noise draws followed by 10*K discarded burn-in steps using Phi at n = 0.
std::vector<Sample> simulate_tvvar(const SimSpec& spec, const CoeffPath& path, Rng& rng);

/// Stacks `buffer` (exactly K samples, oldest first) into U = [X(t-1)', ..., X(t-K)']'.
/// Throws InputError if the buffer does not hold K samples.
Vector build_regressor(std::span<const Sample> buffer, int k);

/// Inverse of build_regressor: splits U back into K samples ordered oldest first.
std::vector<Vector> unstack_regressor(const Vector& u, int p);

/// Convenience: a path of identical coefficient matrices.
CoeffPath constant_path(const ParamMatrix& phi, std::int64_t t_total);

}  // namespace tvvar
