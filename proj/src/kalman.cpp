#include "tvvar/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvvar {

namespace {

// In-place (A + A')/2, walked in square tiles so both triangles stay in cache.
void symmetrize(Matrix& a) {
  constexpr Eigen::Index kTile = 64;
  const Eigen::Index n = a.rows();
  for (Eigen::Index jb = 0; jb < n; jb += kTile) {
    const Eigen::Index jn = std::min(kTile, n - jb);
    for (Eigen::Index ib = 0; ib <= jb; ib += kTile) {
      const Eigen::Index in = std::min(kTile, n - ib);
      for (Eigen::Index j = jb; j < jb + jn; ++j) {
        const Eigen::Index iend = ib == jb ? j : ib + in;
        for (Eigen::Index i = ib; i < iend; ++i) {
          const double avg = 0.5 * (a(i, j) + a(j, i));
          a(i, j) = avg;
          a(j, i) = avg;
        }
      }
    }
  }
}

}  // namespace

Matrix build_observation_matrix(const Vector& u, int p) {
  if (p < 1 || u.size() % p != 0) throw InputError("build_observation_matrix: regressor length must be K*P");
  const Eigen::Index m = u.size();
  Matrix c = Matrix::Zero(p, p * m);
  for (int i = 0; i < p; ++i) c.block(i, i * m, 1, m) = u.transpose();
  return c;
}

std::size_t kalman_covariance_bytes(int p, int k) {
  const auto n = static_cast<std::size_t>(k) * static_cast<std::size_t>(p) * static_cast<std::size_t>(p);
  return n * n * sizeof(double);
}

KalmanFilter::KalmanFilter(int p, int k, KalmanConfig config)
    : p_(p), k_(k), m_(regressor_length(p, k)), n_(m_ * p), config_(std::move(config)), lags_(p, k), phi_(p, k) {
  if (p < 1 || k < 1) throw InputError("KalmanFilter: p and k must be >= 1");
  if (!(config_.q_sigma >= 0.0)) throw InputError("KalmanFilter: q_sigma must be >= 0");
  if (!(config_.init_cov > 0.0)) throw InputError("KalmanFilter: init_cov must be > 0");
  r_ = config_.r.size() == 0 ? Matrix::Identity(p, p) : config_.r;
  if (r_.rows() != p || r_.cols() != p) throw InputError("KalmanFilter: R must be P x P");
  a_ = Vector::Zero(n_);
  cov_ = config_.init_cov * Matrix::Identity(n_, n_);
  cp_.resize(p, n_);
  gain_t_.resize(p, n_);
  left_.resize(n_, 2 * p);
  right_.resize(2 * p, n_);
  s_.resize(p, p);
  innovation_.resize(p);
}

void KalmanFilter::prime(const Eigen::Ref<const Vector>& x) { lags_.push(x); }

const ParamMatrix* KalmanFilter::consume(const Eigen::Ref<const Vector>& x) {
  if (!ready()) {
    prime(x);
    return nullptr;
  }
  return &step(x);
}

const ParamMatrix& KalmanFilter::step(const Eigen::Ref<const Vector>& x) {
  if (!ready()) throw InputError("KalmanFilter::step: lag buffer not yet filled");
  if (x.size() != p_) throw InputError("KalmanFilter::step: sample has wrong channel count");
  const Vector& u = lags_.regressor();

  // Predict: random-walk transition leaves the mean unchanged.
  cov_.diagonal().array() += config_.q_sigma * config_.q_sigma;

  // C cov: row i is u' times the i-th block of m rows.
  for (int i = 0; i < p_; ++i) cp_.row(i).noalias() = u.transpose() * cov_.middleRows(i * m_, m_);
  for (int i = 0; i < p_; ++i) {
    for (int j = 0; j < p_; ++j) s_(i, j) = cp_.row(i).segment(j * m_, m_).dot(u);
  }
  s_ = 0.5 * (s_ + s_.transpose()).eval();
  s_ += r_;

  Eigen::LLT<Matrix> llt(s_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("KalmanFilter::step: innovation covariance is not positive definite");
  }
  gain_t_ = llt.solve(cp_);  // K' = S^-1 C cov

  for (int i = 0; i < p_; ++i) innovation_(i) = x(i) - a_.segment(i * m_, m_).dot(u);
  a_.noalias() += gain_t_.transpose() * innovation_;

  // Joseph form (I - K C) cov (I - K C)' + K R K' = cov - K C cov - cov C' K' + K S K',
  // applied as a single rank-2P update.
  left_.leftCols(p_) = gain_t_.transpose();
  left_.rightCols(p_) = cp_.transpose();
  right_.topRows(p_).noalias() = s_ * gain_t_;
  right_.topRows(p_) -= cp_;
  right_.bottomRows(p_) = -gain_t_;
  cov_.noalias() += left_ * right_;

  symmetrize(cov_);

  phi_.entries() = Eigen::Map<const RowMajorMatrix>(a_.data(), p_, m_);
  lags_.push(x);
  return phi_;
}

std::vector<ParamMatrix> run_kf(std::span<const Sample> samples, int k, const KalmanConfig& config, std::size_t skip) {
  if (samples.empty()) throw InputError("run_kf: empty input");
  const auto p = static_cast<int>(samples.front().values.size());
  if (samples.size() <= skip) throw InputError("run_kf: need more than " + std::to_string(skip) + " samples");
  KalmanFilter filter(p, k, config);
  std::vector<ParamMatrix> out;
  out.reserve(samples.size() - skip);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const ParamMatrix* phi = filter.consume(samples[n].values);
    if (n >= skip) out.push_back(phi ? *phi : filter.estimate());
  }
  return out;
}

}  // namespace tvvar
