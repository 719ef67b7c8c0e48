#include "tvvar/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tvvar {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::vector<int>> SimSpec::effective_groups() const {
  if (!groups.empty()) return groups;
  std::vector<int> all(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) all[static_cast<std::size_t>(i)] = i;
  return {all};
}

Matrix SimSpec::noise_covariance() const {
  if (noise_cov.size() == 0) return Matrix::Identity(p, p);
  return noise_cov;
}

void SimSpec::validate() const {
  if (p < 1) throw InputError("SimSpec: p must be >= 1");
  if (k < 1) throw InputError("SimSpec: k must be >= 1");
  if (t_total <= k) throw InputError("SimSpec: t_total must exceed k");
  if (amp_diag.lo > amp_diag.hi || amp_offdiag.lo > amp_offdiag.hi) {
    throw InputError("SimSpec: amplitude interval has lo > hi");
  }
  std::vector<int> seen(static_cast<std::size_t>(p), 0);
  for (const auto& g : effective_groups()) {
    for (int c : g) {
      if (c < 0 || c >= p) throw InputError("SimSpec: group member out of range: " + std::to_string(c));
      if (seen[static_cast<std::size_t>(c)]++) throw InputError("SimSpec: groups overlap at channel " + std::to_string(c));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InputError("SimSpec: groups do not cover every channel");
  }
  if (noise_cov.size() != 0) {
    if (noise_cov.rows() != p || noise_cov.cols() != p) throw InputError("SimSpec: noise_cov must be p x p");
  }
  for (const auto& d : discontinuities) {
    if (d.t < 0 || d.t >= t_total || d.row < 0 || d.row >= p || d.col < 0 || d.col >= p || d.lag < 1 || d.lag > k) {
      throw InputError("SimSpec: discontinuity out of range");
    }
  }
}

Matrix companion_matrix(const ParamMatrix& phi) {
  const Eigen::Index p = phi.p();
  const Eigen::Index kp = phi.entries().cols();
  Matrix c = Matrix::Zero(kp, kp);
  c.topRows(p) = phi.entries();
  if (kp > p) c.bottomLeftCorner(kp - p, kp - p).setIdentity();
  return c;
}

double companion_spectral_radius(const ParamMatrix& phi) {
  if (phi.p() == 0) return 0.0;
  if (phi.entries().isZero(0.0)) return 0.0;
  Eigen::EigenSolver<Matrix> solver(companion_matrix(phi), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("companion eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double max_spectral_radius(const CoeffPath& path) {
  double r = 0.0;
  for (const auto& phi : path) r = std::max(r, companion_spectral_radius(phi));
  return r;
}

namespace {

struct CosineTerm {
  int row;
  int col;  // absolute column in the P x KP block
  double amplitude;
  double phase;
};

CoeffPath evaluate_cosines(const SimSpec& spec, const std::vector<CosineTerm>& terms, double scale) {
  CoeffPath path;
  path.reserve(static_cast<std::size_t>(spec.t_total));
  const double big_t = static_cast<double>(spec.t_total);
  for (std::int64_t n = 0; n < spec.t_total; ++n) {
    ParamMatrix phi(spec.p, spec.k);
    const double arg = std::numbers::pi * static_cast<double>(n + 1) / big_t;
    for (const auto& term : terms) {
      phi(term.row, term.col) = scale * term.amplitude * std::cos(arg + term.phase);
    }
    path.push_back(std::move(phi));
  }
  return path;
}

bool path_is_stable(const CoeffPath& path, double limit) {
  return std::all_of(path.begin(), path.end(),
                     [limit](const ParamMatrix& phi) { return companion_spectral_radius(phi) < limit; });
}

}  // namespace

CoeffPath make_cosine_coeffs(const SimSpec& spec, Rng& rng) {
  spec.validate();
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  auto draw = [&rng](const Interval& iv) {
    if (iv.lo == iv.hi) return iv.lo;
    return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
  };

  std::vector<CosineTerm> terms;
  const auto groups = spec.effective_groups();
  for (int lag = 1; lag <= spec.k; ++lag) {
    for (const auto& g : groups) {
      for (int i : g) {
        for (int j : g) {
          const double a = draw(i == j ? spec.amp_diag : spec.amp_offdiag);
          const double b = phase_dist(rng);
          terms.push_back({i, (lag - 1) * spec.p + j, a, b});
        }
      }
    }
  }

  double scale = 1.0;
  CoeffPath path = evaluate_cosines(spec, terms, scale);
  int halvings = 0;
  while (!path_is_stable(path, spec.radius_limit)) {
    if (halvings == spec.max_halvings) {
      throw NumericalError("make_cosine_coeffs: stationarity not reached after " + std::to_string(halvings) +
                           " amplitude halvings");
    }
    scale *= 0.5;
    ++halvings;
    path = evaluate_cosines(spec, terms, scale);
  }

  if (!spec.discontinuities.empty()) {
    for (const auto& d : spec.discontinuities) {
      for (auto n = d.t; n < spec.t_total; ++n) {
        path[static_cast<std::size_t>(n)](d.row, (d.lag - 1) * spec.p + d.col) += d.delta;
      }
    }
    if (!path_is_stable(path, spec.radius_limit)) {
      throw NumericalError("make_cosine_coeffs: discontinuities break stationarity");
    }
  }
  return path;
}

Matrix covariance_factor(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw InputError("covariance must be square");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) throw InputError("covariance is not positive semidefinite");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<Sample> simulate_tvvar(const SimSpec& spec, const CoeffPath& path, Rng& rng) {
  spec.validate();
  if (static_cast<std::int64_t>(path.size()) != spec.t_total) throw InputError("simulate_tvvar: path length != t_total");
  for (const auto& phi : path) {
    if (phi.p() != spec.p || phi.k() != spec.k) throw InputError("simulate_tvvar: path dimensions do not match spec");
  }
  const Matrix factor = covariance_factor(spec.noise_covariance());
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(spec.p);
  auto innovation = [&]() -> Vector {
    for (int i = 0; i < spec.p; ++i) z(i) = normal(rng);
    return factor * z;
  };

  LagBuffer lags(spec.p, spec.k);
  for (int i = 0; i < spec.k; ++i) lags.push(innovation());
  for (std::int64_t b = 0; b < spec.burn_in(); ++b) {
    Vector x = path.front().entries() * lags.regressor() + innovation();
    lags.push(x);
  }

  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(spec.t_total));
  for (std::int64_t n = 0; n < spec.t_total; ++n) {
    Vector x = path[static_cast<std::size_t>(n)].entries() * lags.regressor() + innovation();
    lags.push(x);
    out.push_back({n, std::move(x)});
  }
  return out;
}

Vector build_regressor(std::span<const Sample> buffer, int k_expected) {
  if (k_expected < 1 || buffer.size() != static_cast<std::size_t>(k_expected)) {
    throw InputError("build_regressor: buffer must hold exactly K samples");
  }
  const Eigen::Index p = buffer.front().values.size();
  const auto k = static_cast<Eigen::Index>(buffer.size());
  Vector u(p * k);
  for (Eigen::Index lag = 0; lag < k; ++lag) {
    const auto& x = buffer[static_cast<std::size_t>(k - 1 - lag)].values;
    if (x.size() != p) throw InputError("build_regressor: ragged sample buffer");
    u.segment(lag * p, p) = x;
  }
  return u;
}

std::vector<Vector> unstack_regressor(const Vector& u, int p) {
  if (p < 1 || u.size() % p != 0) throw InputError("unstack_regressor: length is not a multiple of p");
  const auto k = u.size() / p;
  std::vector<Vector> out(static_cast<std::size_t>(k));
  for (Eigen::Index lag = 0; lag < k; ++lag) out[static_cast<std::size_t>(k - 1 - lag)] = u.segment(lag * p, p);
  return out;
}

CoeffPath constant_path(const ParamMatrix& phi, std::int64_t t_total) {
  return CoeffPath(static_cast<std::size_t>(t_total), phi);
}

}  // namespace tvvar
