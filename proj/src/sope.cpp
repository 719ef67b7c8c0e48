#include "tvvar/sope.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvvar {

namespace {
constexpr double kDenominatorFloor = 1e-30;
}

void PenaltySpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("penalty: lambda must be finite and > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("penalty: beta must lie in [0, 1]");
}

std::size_t sope_warmup_length(int p, int k) {
  return std::max<std::size_t>(2 * static_cast<std::size_t>(k) * static_cast<std::size_t>(p), 50);
}

Matrix smw_apply(const Matrix& a_block, const Vector& u, double lambda) {
  if (!(lambda > 0.0)) throw InputError("smw_apply: lambda must be > 0");
  if (a_block.cols() != u.size()) throw InputError("smw_apply: dimension mismatch");
  const double denom = lambda * (lambda + u.squaredNorm());
  if (lambda + u.squaredNorm() <= kDenominatorFloor) return a_block / lambda;
  Matrix out = a_block / lambda;
  out.noalias() -= (a_block * u) * (u.transpose() / denom);
  return out;
}

ParamMatrix ridge_least_squares(std::span<const Sample> window, int k, double ridge) {
  if (k < 1) throw InputError("ridge_least_squares: k must be >= 1");
  if (window.size() < static_cast<std::size_t>(k) + 1) {
    throw InputError("ridge_least_squares: need at least K+1 samples, got " + std::to_string(window.size()));
  }
  const auto p = static_cast<int>(window.front().values.size());
  const Eigen::Index kp = regressor_length(p, k);
  Matrix gram = ridge * Matrix::Identity(kp, kp);
  Matrix cross = Matrix::Zero(p, kp);
  LagBuffer lags(p, k);
  for (std::size_t n = 0; n < window.size(); ++n) {
    const auto& x = window[n].values;
    if (lags.full()) {
      const Vector& u = lags.regressor();
      gram.selfadjointView<Eigen::Lower>().rankUpdate(u);
      cross.noalias() += x * u.transpose();
    }
    lags.push(x);
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge_least_squares: factorisation failed");
  Matrix phi = ldlt.solve(cross.transpose()).transpose();
  return ParamMatrix(std::move(phi), k);
}

SopeFilter::SopeFilter(ParamMatrix init, std::span<const Sample> lags, PenaltySpec penalty)
    : phi_prev_(init), phi_prev2_(std::move(init)), lags_(phi_prev_.p(), phi_prev_.k()), penalty_(penalty),
      residual_(phi_prev_.p()) {
  penalty_.validate();
  if (lags.size() != static_cast<std::size_t>(phi_prev_.k())) {
    throw InputError("SopeFilter: need exactly K lag samples");
  }
  for (const auto& s : lags) lags_.push(s.values);
}

SopeFilter SopeFilter::from_warmup(std::span<const Sample> warmup, int k, PenaltySpec penalty) {
  penalty.validate();
  ParamMatrix init = ridge_least_squares(warmup, k, penalty.lambda);
  return SopeFilter(std::move(init), warmup.last(static_cast<std::size_t>(k)), penalty);
}

const ParamMatrix& SopeFilter::step(const Eigen::Ref<const Vector>& x) {
  if (x.size() != p()) throw InputError("SopeFilter::step: sample has wrong channel count");
  const Vector& u = lags_.regressor();
  const double lambda = penalty_.lambda;
  const double beta = penalty_.beta;

  // Prior mean M = Phi(t-1) + beta (Phi(t-1) - Phi(t-2)), written over Phi(t-2).
  Matrix& next = phi_prev2_.entries();
  next = (1.0 + beta) * phi_prev_.entries() - beta * next;

  // (X U' + lambda M)(U U' + lambda I)^-1 = M + (X - M U) U' / (lambda + U'U)
  const double denom = lambda + u.squaredNorm();
  if (denom > kDenominatorFloor) {
    residual_.noalias() = x - next * u;
    next.noalias() += residual_ * (u.transpose() / denom);
  }

  std::swap(phi_prev_, phi_prev2_);
  lags_.push(x);
  ++steps_;
  return phi_prev_;
}

std::vector<ParamMatrix> run_sope(std::span<const Sample> samples, int k, PenaltySpec penalty) {
  if (samples.empty()) throw InputError("run_sope: empty input");
  const auto p = static_cast<int>(samples.front().values.size());
  const std::size_t warmup = sope_warmup_length(p, k);
  if (samples.size() <= warmup) {
    throw InputError("run_sope: need more than " + std::to_string(warmup) + " samples");
  }
  auto filter = SopeFilter::from_warmup(samples.first(warmup), k, penalty);
  std::vector<ParamMatrix> out;
  out.reserve(samples.size() - warmup);
  for (std::size_t n = warmup; n < samples.size(); ++n) out.push_back(filter.step(samples[n].values));
  return out;
}

}  // namespace tvvar
