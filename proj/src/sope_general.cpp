#include "tvvar/sope_general.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tvvar {

SymmetricRoot sym_sqrt_pair(const Matrix& sigma, double jitter) {
  if (sigma.rows() != sigma.cols()) throw InputError("sym_sqrt_pair: matrix must be square");
  if (!(jitter >= 0.0)) throw InputError("sym_sqrt_pair: jitter must be >= 0");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("sym_sqrt_pair: matrix is not symmetric");
  }
  const Eigen::Index p = sigma.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma + jitter * Matrix::Identity(p, p));
  if (eig.info() != Eigen::Success) throw NumericalError("sym_sqrt_pair: eigendecomposition failed");
  const Vector values = eig.eigenvalues().cwiseMax(jitter);
  if (values.minCoeff() <= 0.0) throw NumericalError("sym_sqrt_pair: matrix is singular and jitter is zero");
  const Vector root = values.cwiseSqrt();
  const Matrix& vecs = eig.eigenvectors();
  return {vecs * root.asDiagonal() * vecs.transpose(), vecs * root.cwiseInverse().asDiagonal() * vecs.transpose()};
}

GeneralSopeFilter::GeneralSopeFilter(ParamMatrix init, std::span<const Sample> lags, std::int64_t samples_seen,
                                     PenaltySpec penalty, GeneralSopeOptions options)
    : phi_prev_(init),
      phi_prev2_(std::move(init)),
      lags_(phi_prev_.p(), phi_prev_.k()),
      penalty_(penalty),
      options_(options),
      sigma_(Matrix::Identity(phi_prev_.p(), phi_prev_.p())),
      residual_(Vector::Zero(phi_prev_.p())),
      whitened_residual_(Vector::Zero(phi_prev_.p())),
      t_(samples_seen) {
  penalty_.validate();
  if (lags.size() != static_cast<std::size_t>(phi_prev_.k())) {
    throw InputError("GeneralSopeFilter: need exactly K lag samples");
  }
  if (samples_seen < 1) throw InputError("GeneralSopeFilter: samples_seen must be >= 1");
  if (!(options_.jitter_scale >= 0.0)) throw InputError("GeneralSopeFilter: jitter_scale must be >= 0");
  burn_in_ = options_.burn_in < 0 ? 10 * p() : options_.burn_in;
  for (const auto& s : lags) lags_.push(s.values);
  refresh_root();
}

GeneralSopeFilter GeneralSopeFilter::from_warmup(std::span<const Sample> warmup, int k, PenaltySpec penalty,
                                                 GeneralSopeOptions options) {
  penalty.validate();
  ParamMatrix init = ridge_least_squares(warmup, k, penalty.lambda);
  return GeneralSopeFilter(std::move(init), warmup.last(static_cast<std::size_t>(k)),
                           static_cast<std::int64_t>(warmup.size()), penalty, options);
}

void GeneralSopeFilter::refresh_root() {
  const double jitter =
      std::max(options_.jitter_scale * sigma_.trace() / static_cast<double>(p()), std::numeric_limits<double>::min());
  root_ = sym_sqrt_pair(sigma_, jitter);
}

Matrix GeneralSopeFilter::transform(const Matrix& w, const Matrix& a, const Matrix& v) const {
  const Eigen::Index pp = p();
  Matrix left = w * a;
  Matrix out(pp, a.cols());
  for (int lag = 0; lag < k(); ++lag) {
    out.middleCols(lag * pp, pp).noalias() = left.middleCols(lag * pp, pp) * v;
  }
  return out;
}

const ParamMatrix& GeneralSopeFilter::step(const Eigen::Ref<const Vector>& x) {
  if (x.size() != p()) throw InputError("GeneralSopeFilter::step: sample has wrong channel count");
  const Eigen::Index pp = p();
  const bool whiten = steps_ >= burn_in_;
  const Matrix identity = Matrix::Identity(pp, pp);
  const Matrix& w = whiten ? root_.inv_sqrt : identity;  // Sigma_{t-1}^{-1/2}
  const Matrix& v = whiten ? root_.sqrt : identity;      // Sigma_{t-1}^{1/2}

  const Vector& u = lags_.regressor();
  const Vector x_w = w * x;
  Vector u_w(u.size());
  for (int lag = 0; lag < k(); ++lag) u_w.segment(lag * pp, pp).noalias() = w * u.segment(lag * pp, pp);

  // Previous estimates are held in original coordinates and mapped into the current
  // whitened frame, so that a change in Sigma does not move the prior.
  const double beta = penalty_.beta;
  const Matrix prior = (1.0 + beta) * phi_prev_.entries() - beta * phi_prev2_.entries();
  Matrix phi_w = transform(w, prior, v);
  const double denom = penalty_.lambda + u_w.squaredNorm();
  const Vector innovation = x_w - phi_w * u_w;
  phi_w.noalias() += innovation * (u_w.transpose() / denom);

  phi_prev2_.entries() = transform(v, phi_w, w);
  std::swap(phi_prev_, phi_prev2_);

  residual_.noalias() = x - phi_prev_.entries() * u;
  whitened_residual_.noalias() = w * residual_;
  ++t_;
  const double td = static_cast<double>(t_);
  sigma_ = ((td - 1.0) / td) * sigma_;
  sigma_.noalias() += (residual_ * residual_.transpose()) / td;
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  refresh_root();

  lags_.push(x);
  ++steps_;
  return phi_prev_;
}

std::vector<ParamMatrix> run_gsope(std::span<const Sample> samples, int k, PenaltySpec penalty,
                                   GeneralSopeOptions options) {
  if (samples.empty()) throw InputError("run_gsope: empty input");
  const auto p = static_cast<int>(samples.front().values.size());
  const std::size_t warmup = sope_warmup_length(p, k);
  if (samples.size() <= warmup) {
    throw InputError("run_gsope: need more than " + std::to_string(warmup) + " samples");
  }
  auto filter = GeneralSopeFilter::from_warmup(samples.first(warmup), k, penalty, options);
  std::vector<ParamMatrix> out;
  out.reserve(samples.size() - warmup);
  for (std::size_t n = warmup; n < samples.size(); ++n) out.push_back(filter.step(samples[n].values));
  return out;
}

}  // namespace tvvar
