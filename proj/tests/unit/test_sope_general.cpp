#include "oracles.hpp"
#include "tvvar/model.hpp"
#include "tvvar/sope.hpp"
#include "tvvar/sope_general.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

using namespace tvvar;

namespace {

std::vector<Sample> constant_var(const Matrix& phi, int k, const Matrix& noise, std::int64_t t_total,
                                 std::uint64_t seed) {
  SimSpec s;
  s.p = static_cast<int>(phi.rows());
  s.k = k;
  s.t_total = t_total;
  s.noise_cov = noise;
  Rng rng(seed);
  return simulate_tvvar(s, constant_path(ParamMatrix(phi, k), t_total), rng);
}

}  // namespace

TEST(SymSqrt, Examples) {
  const auto id = sym_sqrt_pair(Matrix::Identity(3, 3), 0.0);
  EXPECT_TRUE(id.sqrt.isApprox(Matrix::Identity(3, 3)));
  EXPECT_TRUE(id.inv_sqrt.isApprox(Matrix::Identity(3, 3)));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  const auto r = sym_sqrt_pair(d, 0.0);
  EXPECT_NEAR(r.sqrt(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r.sqrt(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r.inv_sqrt(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(r.inv_sqrt(1, 1), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.sqrt(0, 1), 0.0, 1e-14);
}

TEST(SymSqrt, ReconstructsRandomPsd) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = oracle::random_spd(rng, 5);
    const double jitter = 1e-6;
    const auto r = sym_sqrt_pair(s, jitter);
    const Matrix target = s + jitter * Matrix::Identity(5, 5);
    EXPECT_LE((r.sqrt * r.sqrt - target).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((r.sqrt * r.inv_sqrt - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((r.sqrt - r.sqrt.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SymSqrt, ClampsAtJitterAndRejectsAsymmetry) {
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  const auto r = sym_sqrt_pair(singular, 1e-8);
  EXPECT_TRUE(r.inv_sqrt.allFinite());
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(sym_sqrt_pair(asym, 0.0), InputError);
}

TEST(Gsope, ScalarRecursionMatchesHandComputation) {
  std::mt19937_64 rng(2);
  std::vector<Sample> xs;
  for (int t = 0; t < 400; ++t) xs.push_back({t, oracle::random_vector(rng, 1)});
  const PenaltySpec pen{30.0, 0.5};
  const auto est = run_gsope(xs, 2, pen, {3, 1e-8});

  // Scalar version: whitening divides by sqrt(sigma) and cancels in the back-transform,
  // leaving an effective penalty of sigma * lambda.
  const std::size_t w = sope_warmup_length(1, 2);
  const auto init = ridge_least_squares(std::span(xs).first(w), 2, pen.lambda);
  double phi1[2] = {init(0, 0), init(0, 1)};
  double phi2[2] = {phi1[0], phi1[1]};
  double sigma = 1.0;
  double t = static_cast<double>(w);
  for (std::size_t n = w; n < xs.size(); ++n) {
    const double u0 = xs[n - 1].values(0), u1 = xs[n - 2].values(0);
    const double x = xs[n].values(0);
    const double s = (n - w) >= 3 ? sigma * (1.0 + 1e-8) : 1.0;
    const double m0 = phi1[0] + pen.beta * (phi1[0] - phi2[0]);
    const double m1 = phi1[1] + pen.beta * (phi1[1] - phi2[1]);
    const double e = x - m0 * u0 - m1 * u1;
    const double d = s * pen.lambda + u0 * u0 + u1 * u1;
    const double n0 = m0 + e * u0 / d, n1 = m1 + e * u1 / d;
    phi2[0] = phi1[0];
    phi2[1] = phi1[1];
    phi1[0] = n0;
    phi1[1] = n1;
    const double r = x - n0 * u0 - n1 * u1;
    t += 1.0;
    sigma = (t - 1.0) / t * sigma + r * r / t;
    const auto& got = est[n - w];
    EXPECT_NEAR(got(0, 0), n0, 1e-10 * std::max(1.0, std::abs(n0)));
    EXPECT_NEAR(got(0, 1), n1, 1e-10 * std::max(1.0, std::abs(n1)));
  }
}

TEST(Gsope, IdentityCovarianceDataAgreesWithSope) {
  Matrix phi(2, 2);
  phi << 0.5, 0.2, -0.1, 0.4;
  const auto xs = constant_var(phi, 1, Matrix(), 6000, 3);
  const PenaltySpec pen{1000.0, 0.9};
  const auto a = run_sope(xs, 1, pen);
  const auto b = run_gsope(xs, 1, pen);
  ASSERT_EQ(a.size(), b.size());
  double early = 0, late = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double gap = (a[i].entries() - b[i].entries()).cwiseAbs().maxCoeff();
    if (i >= 500) EXPECT_LE(gap, 1e-2) << "i=" << i;
    if (i >= 500 && i < 1500) early = std::max(early, gap);
    if (i >= a.size() - 1000) late = std::max(late, gap);
  }
  EXPECT_LE(late, early);
}

TEST(Gsope, RecoversDiagonalNoiseCovariance) {
  Matrix phi(2, 2);
  phi << 0.4, 0.0, 0.1, 0.3;
  Matrix noise = Matrix::Zero(2, 2);
  noise.diagonal() << 1.0, 25.0;
  const auto xs = constant_var(phi, 1, noise, 10000, 4);
  const auto w = sope_warmup_length(2, 1);
  auto f = GeneralSopeFilter::from_warmup(std::span(xs).first(w), 1, {1000.0, 0.9});
  for (std::size_t n = w; n < xs.size(); ++n) f.step(xs[n].values);
  EXPECT_NEAR(f.covariance()(0, 0), 1.0, 0.2);
  EXPECT_NEAR(f.covariance()(1, 1), 25.0, 5.0);
}

TEST(Gsope, ZeroSeriesDecaysCovarianceAndKeepsZero) {
  std::vector<Sample> zeros(300, Sample{0, Vector::Zero(2)});
  const auto w = sope_warmup_length(2, 1);
  auto f = GeneralSopeFilter::from_warmup(std::span(zeros).first(w), 1, {});
  for (std::size_t n = w; n < zeros.size(); ++n) {
    EXPECT_TRUE(f.step(zeros[n].values).entries().isZero(0.0));
    const double t = static_cast<double>(f.time_index());
    EXPECT_NEAR(f.covariance()(0, 0), static_cast<double>(w) / t, 1e-12);
  }
}

TEST(Gsope, ExactFitStaysFinite) {
  std::mt19937_64 rng(5);
  std::vector<Sample> warm;
  for (int t = 0; t < 50; ++t) warm.push_back({t, oracle::random_vector(rng, 2)});
  auto f = GeneralSopeFilter::from_warmup(warm, 1, {10.0, 0.0}, {0, 1e-8});
  double prev_trace = f.covariance().trace();
  for (int t = 0; t < 500; ++t) {
    const Vector x = f.estimate().entries() * f.lags().regressor();
    const auto& phi = f.step(x);
    EXPECT_TRUE(phi.all_finite());
    EXPECT_LE(f.last_residual().norm(), 1e-8 * std::max(1.0, x.norm()));
    EXPECT_LE(f.covariance().trace(), prev_trace * (1.0 + 1e-12));
    prev_trace = f.covariance().trace();
  }
  EXPECT_TRUE(f.covariance_root().inv_sqrt.allFinite());
}

TEST(Gsope, CovarianceMatchesBatchResidualAverage) {
  Matrix phi(3, 3);
  phi << 0.3, 0.1, 0, 0.1, 0.2, 0, 0, 0.1, 0.4;
  Matrix noise(3, 3);
  noise << 1.0, 0.3, 0.0, 0.3, 2.0, 0.5, 0.0, 0.5, 1.5;
  const auto xs = constant_var(phi, 1, noise, 2000, 6);
  const auto w = sope_warmup_length(3, 1);
  auto f = GeneralSopeFilter::from_warmup(std::span(xs).first(w), 1, {500.0, 0.9});
  Matrix acc = static_cast<double>(w) * Matrix::Identity(3, 3);
  for (std::size_t n = w; n < xs.size(); ++n) {
    const SymmetricRoot before = f.covariance_root();
    const bool whitened = static_cast<int>(n - w) >= f.burn_in();
    f.step(xs[n].values);
    const Vector& r = f.last_residual();
    acc += r * r.transpose();
    // Whitened residual is the Sigma^{-1/2}-weighted original residual.
    const Vector expect = whitened ? Vector(before.inv_sqrt * r) : r;
    EXPECT_LE((f.last_whitened_residual() - expect).norm(), 1e-10 * std::max(1.0, r.norm()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(f.covariance());
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    EXPECT_LE((f.covariance() - f.covariance().transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
  const Matrix batch = acc / static_cast<double>(f.time_index());
  EXPECT_LE((f.covariance() - batch).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gsope, WhitenedStepIsGeneralizedLeastSquares) {
  // The dense penalized solve in whitened coordinates, mapped back, must equal one step.
  std::mt19937_64 rng(7);
  const int p = 2, k = 2;
  const Matrix init = oracle::random_matrix(rng, p, p * k, 0.2);
  std::vector<Sample> lags{{0, oracle::random_vector(rng, p)}, {1, oracle::random_vector(rng, p)}};
  GeneralSopeFilter f(ParamMatrix(init, k), lags, 1, {5.0, 0.3}, {0, 0.0});
  // Feed one step so Sigma moves away from I, then compare the next one.
  f.step(oracle::random_vector(rng, p));
  const Matrix s = f.covariance();
  const auto r = sym_sqrt_pair(s, 0.0);
  const Matrix phi1 = f.estimate().entries();
  const Matrix phi2 = f.previous_estimate().entries();
  const Vector u = f.lags().regressor();
  const Vector x = oracle::random_vector(rng, p);

  auto to_white = [&](const Matrix& a) {
    Matrix out = r.inv_sqrt * a;
    for (int l = 0; l < k; ++l) out.middleCols(l * p, p) = out.middleCols(l * p, p) * r.sqrt;
    return out;
  };
  Vector uw(p * k);
  for (int l = 0; l < k; ++l) uw.segment(l * p, p) = r.inv_sqrt * u.segment(l * p, p);
  Matrix bw = oracle::penalized_ls(r.inv_sqrt * x, uw, to_white(phi1), to_white(phi2), 5.0, 0.3);
  Matrix back = r.sqrt * bw;
  for (int l = 0; l < k; ++l) back.middleCols(l * p, p) = back.middleCols(l * p, p) * r.inv_sqrt;
  EXPECT_LE((f.step(x).entries() - back).norm(), 1e-10 * std::max(1.0, back.norm()));
}
