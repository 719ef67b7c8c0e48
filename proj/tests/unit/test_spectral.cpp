#include "oracles.hpp"
#include "tvvar/model.hpp"
#include "tvvar/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <complex>
#include <numbers>

using namespace tvvar;
using cd = std::complex<double>;

namespace {

ParamMatrix scalar(double v) {
  ParamMatrix p(1, 1);
  p(0, 0) = v;
  return p;
}

ParamMatrix random_stable(std::mt19937_64& rng, int p, int k) {
  while (true) {
    ParamMatrix phi(oracle::random_matrix(rng, p, p * k, 0.3), k);
    if (oracle::spectral_radius(phi.entries()) < 0.9) return phi;
  }
}

}  // namespace

TEST(Fourier, Examples) {
  const ParamMatrix zero(3, 2);
  EXPECT_TRUE(fourier_param_matrix(zero, 17.0, 100.0).isApprox(CMatrix::Identity(3, 3)));
  std::mt19937_64 rng(1);
  ParamMatrix phi(oracle::random_matrix(rng, 2, 2), 1);
  EXPECT_TRUE(
      fourier_param_matrix(phi, 0.0, 100.0).isApprox((Matrix::Identity(2, 2) - phi.entries()).cast<cd>(), 1e-15));
  const CMatrix q = fourier_param_matrix(scalar(0.5), 25.0, 100.0);
  EXPECT_NEAR(q(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(q(0, 0).imag(), 0.5, 1e-15);
  EXPECT_THROW(fourier_param_matrix(phi, 60.0, 100.0), InputError);
}

TEST(Frame, WhiteNoiseIsIdentityEverywhere) {
  const ParamMatrix zero(3, 1);
  for (double w : {0.0, 10.0, 50.0}) {
    const auto f = spectral_frame(zero, Matrix::Identity(3, 3), w, 100.0);
    for (const CMatrix* m : {&f.h, &f.s, &f.g, &f.gamma}) EXPECT_TRUE(m->isApprox(CMatrix::Identity(3, 3)));
    EXPECT_FALSE(f.unstable);
  }
}

TEST(Frame, Ar1SpectrumAtZeroIsFour) {
  const auto f = spectral_frame(scalar(0.5), Matrix::Identity(1, 1), 0.0, 1000.0);
  EXPECT_NEAR(f.s(0, 0).real(), 4.0, 1e-14);
  EXPECT_NEAR(f.s(0, 0).imag(), 0.0, 1e-14);
}

TEST(Frame, MatchesDirectSpectrumOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto phi = random_stable(rng, 3, 2);
    const Matrix sigma = oracle::random_spd(rng, 3);
    const double w = 500.0 * (trial + 0.5) / 30.0;
    const auto f = spectral_frame(phi, sigma, w, 1000.0);
    const CMatrix s = oracle::spectrum(phi.entries(), sigma, w, 1000.0);
    EXPECT_LE((f.s - s).norm(), 1e-10 * s.norm());
    EXPECT_LE((f.g * f.s - CMatrix::Identity(3, 3)).norm(), 1e-8);
  }
}

TEST(Frame, SingularPhiIsFlaggedNotThrown) {
  // Unit root at w = 0: I - Phi = 0.
  const auto f = spectral_frame(scalar(1.0), Matrix::Identity(1, 1), 0.0, 100.0);
  EXPECT_TRUE(f.unstable);
  EXPECT_THROW(partial_coherence(f), NumericalError);
}

TEST(Coherence, Examples) {
  const Matrix c = coherence(CMatrix::Identity(3, 3));
  EXPECT_TRUE(c.isApprox(Matrix::Identity(3, 3)));
  CMatrix s(2, 2);
  s << 2, 2, 2, 2;
  EXPECT_NEAR(coherence(s)(0, 1), 1.0, 1e-15);
  CMatrix z = CMatrix::Zero(2, 2);
  z(0, 0) = 1.0;
  EXPECT_THROW(coherence(z), NumericalError);
}

TEST(Coherence, BlockDiagonalModelHasZeroCrossGroupCoherence) {
  SimSpec s;
  s.p = 5;
  s.k = 1;
  s.t_total = 50;
  s.groups = {{0, 1, 2}, {3, 4}};
  Rng rng(3);
  const auto path = make_cosine_coeffs(s, rng);
  for (double w : {0.0, 7.0, 40.0}) {
    const Matrix c = coherence(spectral_frame(path[10], Matrix::Identity(5, 5), w, 100.0));
    for (int i = 0; i < 3; ++i)
      for (int j = 3; j < 5; ++j) EXPECT_EQ(c(i, j), 0.0);
  }
}

TEST(PartialCoherence, TwoChannelEqualsCoherenceMagnitude) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_stable(rng, 2, 1);
    const auto f = spectral_frame(phi, oracle::random_spd(rng, 2), 12.0, 100.0);
    const double direct = std::abs(f.s(0, 1)) / std::sqrt(f.s(0, 0).real() * f.s(1, 1).real());
    EXPECT_NEAR(partial_coherence(f)(0, 1), direct, 1e-10);
    EXPECT_NEAR(partial_coherence(f, PartialCoherenceScale::squared)(0, 1), direct * direct, 1e-10);
    EXPECT_DOUBLE_EQ(partial_coherence(f)(0, 0), 1.0);
  }
}

TEST(Pdc, Examples) {
  EXPECT_TRUE(pdc(CMatrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  CMatrix a(2, 2);
  a << 1.0, -0.3, -0.4, 1.0;
  const Matrix p = pdc(a);
  EXPECT_NEAR(p(1, 0), 0.4 / std::sqrt(1.16), 1e-15);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(p.col(j).squaredNorm(), 1.0, 1e-14);
  CMatrix z = CMatrix::Identity(2, 2);
  z(1, 1) = 0.0;
  EXPECT_THROW(pdc(z), NumericalError);
}

TEST(Band, WhiteNoiseHasZeroOffDiagonal) {
  const auto freq = FreqSpec::uniform(100.0, 1.0);
  const auto f = band_connectivity(ParamMatrix(3, 1), Matrix::Identity(3, 3), {"b", 4.0, 12.0}, freq);
  EXPECT_EQ(f.points, 9);
  for (const Matrix* m : {&f.coherence, &f.partial_coherence, &f.pdc}) {
    EXPECT_TRUE(m->isApprox(Matrix::Identity(3, 3)));
  }
}

TEST(Band, SinglePointEqualsPointwise) {
  std::mt19937_64 rng(5);
  const auto phi = random_stable(rng, 3, 1);
  const Matrix sigma = oracle::random_spd(rng, 3);
  const auto freq = FreqSpec::uniform(100.0, 1.0);
  const auto f = band_connectivity(phi, sigma, {"one", 9.5, 10.5}, freq);
  ASSERT_EQ(f.points, 1);
  const auto sf = spectral_frame(phi, sigma, 10.0, 100.0);
  EXPECT_TRUE(f.coherence.isApprox(coherence(sf), 1e-14));
  EXPECT_TRUE(f.partial_coherence.isApprox(partial_coherence(sf), 1e-14));
  EXPECT_TRUE(f.pdc.isApprox(pdc(sf.phi_omega), 1e-14));
}

TEST(Band, TwoPointsAreArithmeticMean) {
  std::mt19937_64 rng(6);
  const auto phi = random_stable(rng, 2, 2);
  const Matrix sigma = oracle::random_spd(rng, 2);
  const auto freq = FreqSpec::uniform(100.0, 1.0);
  const auto f = band_connectivity(phi, sigma, {"two", 10.0, 11.0}, freq);
  ASSERT_EQ(f.points, 2);
  const auto a = spectral_frame(phi, sigma, 10.0, 100.0);
  const auto b = spectral_frame(phi, sigma, 11.0, 100.0);
  EXPECT_TRUE(f.coherence.isApprox(0.5 * (coherence(a) + coherence(b)), 1e-14));
  EXPECT_TRUE(f.pdc.isApprox(0.5 * (pdc(a.phi_omega) + pdc(b.phi_omega)), 1e-14));
}

TEST(Band, EmptyOrOutOfRangeBandThrows) {
  const auto freq = FreqSpec::uniform(100.0, 1.0);
  EXPECT_THROW(band_connectivity(ParamMatrix(2, 1), Matrix::Identity(2, 2), {"gap", 10.2, 10.8}, freq), InputError);
  EXPECT_THROW(band_connectivity(ParamMatrix(2, 1), Matrix::Identity(2, 2), {"hi", 40.0, 60.0}, freq), InputError);
  EXPECT_THROW(band_connectivity(ParamMatrix(2, 1), Matrix::Identity(2, 2), {"neg", 12.0, 4.0}, freq), InputError);
}

TEST(FreqSpec, UniformGridReachesNyquist) {
  const auto f = FreqSpec::uniform(1000.0, 1.0);
  EXPECT_EQ(f.grid.size(), 501u);
  EXPECT_DOUBLE_EQ(f.grid.back(), 500.0);
  EXPECT_NO_THROW(f.validate());
}

TEST(Continuity, SmallPerturbationGivesSmallChange) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_stable(rng, 3, 2);
    ParamMatrix bumped = phi;
    bumped.entries() += oracle::random_matrix(rng, 3, 6, 1.0).cwiseSign() * 1e-3;
    const auto a = spectral_frame(phi, Matrix::Identity(3, 3), 20.0, 100.0);
    const auto b = spectral_frame(bumped, Matrix::Identity(3, 3), 20.0, 100.0);
    if (a.unstable || b.unstable) continue;
    const double change = (coherence(a) - coherence(b)).cwiseAbs().maxCoeff();
    // Bounded by a modest multiple of eps times the sensitivity of H.
    EXPECT_LE(change, 1e-3 * 50.0 * a.h.norm() * a.h.norm());
  }
}

TEST(Periodogram, FrozenVarSpectrumMatchesSegmentAverage) {
  // Averaged raw periodograms of a long simulated series estimate S(w); each entry's error
  // is compared with its own Monte-Carlo standard error.
  std::mt19937_64 rng(8);
  ParamMatrix phi(2, 1);
  phi.entries() << 0.5, 0.2, -0.3, 0.4;
  const int n = 256, segments = 600;
  SimSpec s;
  s.p = 2;
  s.k = 1;
  s.t_total = static_cast<std::int64_t>(n) * segments + 1000;
  Rng sim(9);
  const auto xs = simulate_tvvar(s, constant_path(phi, s.t_total), sim);
  const int bin = 32;
  const double fs = 1.0;
  const double w = fs * bin / n;
  std::vector<CMatrix> per;
  for (int seg = 0; seg < segments; ++seg) {
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(2);
    for (int t = 0; t < n; ++t) {
      const auto& x = xs[static_cast<std::size_t>(1000 + seg * n + t)].values;
      d += x.cast<cd>() * std::polar(1.0, -2.0 * std::numbers::pi * bin * t / n);
    }
    per.push_back(d * d.adjoint() / static_cast<double>(n));
  }
  CMatrix mean = CMatrix::Zero(2, 2);
  for (const auto& m : per) mean += m;
  mean /= static_cast<double>(segments);
  const CMatrix truth = spectral_frame(phi, Matrix::Identity(2, 2), w, fs).s;
  for (int i = 0; i < 2; ++i) {
    for (int j = i; j < 2; ++j) {
      double vr = 0, vi = 0;
      for (const auto& m : per) {
        vr += std::pow(m(i, j).real() - mean(i, j).real(), 2);
        vi += std::pow(m(i, j).imag() - mean(i, j).imag(), 2);
      }
      const double se_r = std::sqrt(vr / (segments - 1) / segments);
      const double se_i = std::sqrt(vi / (segments - 1) / segments);
      EXPECT_LE(std::abs(mean(i, j).real() - truth(i, j).real()), 3.0 * se_r + 1e-12) << i << j;
      if (i != j) EXPECT_LE(std::abs(mean(i, j).imag() - truth(i, j).imag()), 3.0 * se_i + 1e-12) << i << j;
    }
  }
}
