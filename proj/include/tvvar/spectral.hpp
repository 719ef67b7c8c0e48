#pragma once

// Parametric time-frequency connectivity from VAR coefficients:
//   Phi(w) = I - sum_l Phi_l exp(-i 2 pi l w / ws),  H = Phi(w)^-1,  S = H Sigma H*,
//   G = S^-1,  Gamma = Diag(G)^-1/2 G Diag(G)^-1/2
// with coherence |S_ij|^2 / (S_ii S_jj), partial coherence Gamma_ij, and partial directed
// coherence |Phi_ij(w)| / ||Phi_.j(w)||.

#include "tvvar/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tvvar {

struct FreqSpec {
  double sampling_hz = 1000.0;
  std::vector<double> grid;  // ascending, each in [0, sampling_hz / 2]

  /// Evenly spaced grid 0, spacing, 2*spacing, ... up to Nyquist.
  static FreqSpec uniform(double sampling_hz, double spacing_hz);
  void validate() const;
  [[nodiscard]] double nyquist() const { return sampling_hz / 2.0; }
};

struct BandSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;

  void validate(const FreqSpec& freq) const;
};

/// Condition number above which a frame is flagged unstable.
inline constexpr double kUnstableCondition = 1e12;

struct SpectralFrame {
  CMatrix phi_omega;
  CMatrix h;
  CMatrix s;
  CMatrix g;
  CMatrix gamma;
  double condition = 1.0;  // max of the estimated condition numbers of Phi(w) and S
  bool unstable = false;
};

CMatrix fourier_param_matrix(const ParamMatrix& phi, double omega_hz, double sampling_hz);

/// Full chain H, S, G, Gamma at one frequency. Never throws on near-singular input; the frame
/// is flagged unstable instead and its derived matrices may be non-finite.
SpectralFrame spectral_frame(const ParamMatrix& phi, const Matrix& sigma_e, double omega_hz, double sampling_hz);

/// Squared coherence from a spectral matrix. Throws NumericalError on a non-positive auto-spectrum.
Matrix coherence(const CMatrix& s);
inline Matrix coherence(const SpectralFrame& frame) { return coherence(frame.s); }

enum class PartialCoherenceScale { magnitude, squared };

/// |Gamma_ij| (or |Gamma_ij|^2). Throws NumericalError for an unstable frame.
Matrix partial_coherence(const SpectralFrame& frame, PartialCoherenceScale scale = PartialCoherenceScale::magnitude);

/// Column-normalised magnitudes of Phi(w). Throws NumericalError on an all-zero column.
Matrix pdc(const CMatrix& phi_omega);

enum class Measure { coherence, partial_coherence, pdc };
std::string to_string(Measure m);
Measure measure_from_string(const std::string& name);
inline bool is_directed(Measure m) { return m == Measure::pdc; }

struct ConnectivityFrame {
  std::int64_t t = 0;
  BandSpec band;
  Matrix coherence;
  Matrix partial_coherence;
  Matrix pdc;
  int points = 0;           // grid points inside the band
  int unstable_points = 0;  // of which flagged unstable and left out of the averages

  [[nodiscard]] const Matrix& measure(Measure m) const;
  [[nodiscard]] bool unstable() const { return unstable_points > 0; }
};

struct ConnectivityOptions {
  PartialCoherenceScale partial_scale = PartialCoherenceScale::magnitude;
};

/// Frequencies of `freq.grid` inside [band.lo, band.hi].
std::vector<double> band_grid(const BandSpec& band, const FreqSpec& freq);

/// Uniform average of each measure over the grid points in the band. Unstable points are
/// skipped; if every point is unstable the matrices are NaN.
ConnectivityFrame band_connectivity(const ParamMatrix& phi, const Matrix& sigma_e, const BandSpec& band,
                                    const FreqSpec& freq, const ConnectivityOptions& options = {});

}  // namespace tvvar
