#include "tvvar/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace tvvar {

FreqSpec FreqSpec::uniform(double sampling_hz, double spacing_hz) {
  if (!(sampling_hz > 0.0) || !(spacing_hz > 0.0)) throw InputError("FreqSpec: sampling rate and spacing must be > 0");
  FreqSpec f;
  f.sampling_hz = sampling_hz;
  const double nyq = sampling_hz / 2.0;
  for (std::int64_t i = 0;; ++i) {
    const double w = static_cast<double>(i) * spacing_hz;
    if (w > nyq * (1.0 + 1e-12)) break;
    f.grid.push_back(std::min(w, nyq));
  }
  return f;
}

void FreqSpec::validate() const {
  if (!(sampling_hz > 0.0)) throw InputError("FreqSpec: sampling rate must be > 0");
  if (grid.empty()) throw InputError("FreqSpec: empty frequency grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > nyquist()) throw InputError("FreqSpec: grid point outside [0, Nyquist]");
    if (i > 0 && grid[i] <= grid[i - 1]) throw InputError("FreqSpec: grid must be strictly ascending");
  }
}

void BandSpec::validate(const FreqSpec& freq) const {
  if (!(lo >= 0.0 && lo < hi && hi <= freq.nyquist())) {
    throw InputError("band '" + name + "' must satisfy 0 <= lo < hi <= Nyquist");
  }
}

CMatrix fourier_param_matrix(const ParamMatrix& phi, double omega_hz, double sampling_hz) {
  if (!(sampling_hz > 0.0)) throw InputError("fourier_param_matrix: sampling rate must be > 0");
  if (omega_hz < 0.0 || omega_hz > sampling_hz / 2.0) throw InputError("fourier_param_matrix: frequency above Nyquist");
  const int p = phi.p();
  CMatrix out = CMatrix::Identity(p, p);
  for (int l = 1; l <= phi.k(); ++l) {
    const double angle = -2.0 * std::numbers::pi * l * omega_hz / sampling_hz;
    const std::complex<double> z = std::polar(1.0, angle);
    out -= phi.lag(l).cast<std::complex<double>>() * z;
  }
  return out;
}

SpectralFrame spectral_frame(const ParamMatrix& phi, const Matrix& sigma_e, double omega_hz, double sampling_hz) {
  const int p = phi.p();
  if (sigma_e.rows() != p || sigma_e.cols() != p) throw InputError("spectral_frame: sigma_e must be P x P");
  SpectralFrame f;
  f.phi_omega = fourier_param_matrix(phi, omega_hz, sampling_hz);

  Eigen::PartialPivLU<CMatrix> lu_phi(f.phi_omega);
  const double rc_phi = lu_phi.rcond();
  f.h = lu_phi.inverse();
  f.s = f.h * sigma_e.cast<std::complex<double>>() * f.h.adjoint();
  f.s = (0.5 * (f.s + f.s.adjoint())).eval();

  Eigen::PartialPivLU<CMatrix> lu_s(f.s);
  const double rc_s = lu_s.rcond();
  f.g = lu_s.inverse();
  f.g = (0.5 * (f.g + f.g.adjoint())).eval();

  const Vector d = f.g.diagonal().real();
  f.gamma.resize(p, p);
  bool diag_ok = true;
  for (int i = 0; i < p; ++i) diag_ok = diag_ok && d(i) > 0.0;
  if (diag_ok) {
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < p; ++i) f.gamma(i, j) = f.g(i, j) / std::sqrt(d(i) * d(j));
      f.gamma(j, j) = 1.0;
    }
  } else {
    f.gamma.setConstant(std::numeric_limits<double>::quiet_NaN());
  }

  const double rc = std::min(rc_phi, rc_s);
  f.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  f.unstable = !(f.condition <= kUnstableCondition) || !diag_ok || !f.s.allFinite() || !f.g.allFinite();
  return f;
}

Matrix coherence(const CMatrix& s) {
  const auto p = s.rows();
  const Vector d = s.diagonal().real();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(d(i) > 0.0)) throw NumericalError("coherence: auto-spectrum is not positive");
  }
  Matrix out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) out(i, j) = std::min(1.0, std::norm(s(i, j)) / (d(i) * d(j)));
    out(j, j) = 1.0;
  }
  return out;
}

Matrix partial_coherence(const SpectralFrame& frame, PartialCoherenceScale scale) {
  if (frame.unstable) throw NumericalError("partial_coherence: spectral matrix is near-singular");
  Matrix out = frame.gamma.cwiseAbs().cwiseMin(1.0);
  if (scale == PartialCoherenceScale::squared) out = out.cwiseAbs2();
  return out;
}

Matrix pdc(const CMatrix& phi_omega) {
  const auto p = phi_omega.rows();
  Matrix out(p, p);
  for (Eigen::Index j = 0; j < phi_omega.cols(); ++j) {
    const double norm = phi_omega.col(j).norm();
    if (!(norm > 0.0)) throw NumericalError("pdc: column " + std::to_string(j) + " is zero");
    out.col(j) = phi_omega.col(j).cwiseAbs() / norm;
  }
  return out;
}

std::string to_string(Measure m) {
  switch (m) {
    case Measure::coherence:
      return "coherence";
    case Measure::partial_coherence:
      return "partial_coherence";
    case Measure::pdc:
      return "pdc";
  }
  return "unknown";
}

Measure measure_from_string(const std::string& name) {
  if (name == "coherence") return Measure::coherence;
  if (name == "partial_coherence") return Measure::partial_coherence;
  if (name == "pdc") return Measure::pdc;
  throw InputError("unknown connectivity measure: " + name);
}

const Matrix& ConnectivityFrame::measure(Measure m) const {
  switch (m) {
    case Measure::coherence:
      return coherence;
    case Measure::partial_coherence:
      return partial_coherence;
    case Measure::pdc:
      return pdc;
  }
  return coherence;
}

std::vector<double> band_grid(const BandSpec& band, const FreqSpec& freq) {
  std::vector<double> out;
  for (double w : freq.grid) {
    if (w >= band.lo && w <= band.hi) out.push_back(w);
  }
  return out;
}

ConnectivityFrame band_connectivity(const ParamMatrix& phi, const Matrix& sigma_e, const BandSpec& band,
                                    const FreqSpec& freq, const ConnectivityOptions& options) {
  band.validate(freq);
  const auto points = band_grid(band, freq);
  if (points.empty()) throw InputError("band '" + band.name + "' contains no grid frequency");

  const int p = phi.p();
  ConnectivityFrame out;
  out.band = band;
  out.coherence = Matrix::Zero(p, p);
  out.partial_coherence = Matrix::Zero(p, p);
  out.pdc = Matrix::Zero(p, p);
  out.points = static_cast<int>(points.size());
  int used = 0;
  for (double w : points) {
    const SpectralFrame f = spectral_frame(phi, sigma_e, w, freq.sampling_hz);
    if (f.unstable) {
      ++out.unstable_points;
      continue;
    }
    out.coherence += coherence(f);
    out.partial_coherence += partial_coherence(f, options.partial_scale);
    out.pdc += pdc(f.phi_omega);
    ++used;
  }
  if (used == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.coherence.setConstant(nan);
    out.partial_coherence.setConstant(nan);
    out.pdc.setConstant(nan);
  } else {
    out.coherence /= used;
    out.partial_coherence /= used;
    out.pdc /= used;
  }
  return out;
}

}  // namespace tvvar
