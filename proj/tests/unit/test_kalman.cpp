#include "oracles.hpp"
#include "tvvar/kalman.hpp"
#include "tvvar/model.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

using namespace tvvar;

TEST(Observation, Examples) {
  Vector u(3);
  u << 1, 2, 3;
  const Matrix c1 = build_observation_matrix(u, 1);
  EXPECT_TRUE(c1.isApprox(u.transpose()));
  Vector v(2);
  v << 3, 4;
  Matrix expect(2, 4);
  expect << 3, 4, 0, 0, 0, 0, 3, 4;
  EXPECT_TRUE(build_observation_matrix(v, 2).isApprox(expect));
  EXPECT_THROW(build_observation_matrix(u, 2), InputError);
}

TEST(Observation, ReshapeConsistency) {
  std::mt19937_64 rng(1);
  for (int p = 1; p <= 4; ++p) {
    for (int k = 1; k <= 3; ++k) {
      const Matrix phi = oracle::random_matrix(rng, p, p * k);
      const Vector u = oracle::random_vector(rng, p * k);
      Vector a(p * p * k);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p * k; ++j) a(i * p * k + j) = phi(i, j);
      EXPECT_LE((build_observation_matrix(u, p) * a - phi * u).norm(), 1e-12);
    }
  }
}

TEST(Kalman, MemoryArithmetic) {
  EXPECT_EQ(kalman_covariance_bytes(3, 2), 18u * 18u * 8u);
  EXPECT_EQ(kalman_covariance_bytes(50, 3), 7500u * 7500u * 8u);
}

TEST(Kalman, ZeroRegressorOnlyInflatesCovariance) {
  KalmanFilter f(2, 1, {0.1, Matrix(), 1.0});
  f.prime(Vector::Zero(2));
  const Matrix before = f.covariance();
  const Vector a0 = f.state();
  f.step((Vector(2) << 1.0, -2.0).finished());
  EXPECT_TRUE(f.state().isApprox(a0));
  EXPECT_TRUE(f.covariance().isApprox(before + 0.01 * Matrix::Identity(4, 4), 1e-14));
}

TEST(Kalman, PrimingAndReadiness) {
  KalmanFilter f(2, 3, {});
  EXPECT_EQ(f.consume(Vector::Ones(2)), nullptr);
  EXPECT_EQ(f.consume(Vector::Ones(2)), nullptr);
  EXPECT_FALSE(f.ready());
  EXPECT_EQ(f.consume(Vector::Ones(2)), nullptr);
  EXPECT_TRUE(f.ready());
  EXPECT_NE(f.consume(Vector::Ones(2)), nullptr);
}

TEST(Kalman, StepBeforeReadyThrows) {
  KalmanFilter f(2, 1, {});
  EXPECT_THROW(f.step(Vector::Zero(2)), InputError);
}

TEST(Kalman, MatchesDenseTextbookFilter) {
  std::mt19937_64 rng(2);
  for (int p = 1; p <= 3; ++p) {
    for (int k = 1; k <= 2; ++k) {
      const double q = 0.05;
      KalmanFilter f(p, k, {q, Matrix(), 1.0});
      oracle::DenseKalman ref(p * p * k, p, q * q, 1.0);
      std::vector<Vector> hist;
      for (int t = 0; t < 60; ++t) {
        const Vector x = oracle::random_vector(rng, p);
        if (static_cast<int>(hist.size()) >= k) {
          Vector u(p * k);
          for (int l = 0; l < k; ++l) u.segment(l * p, p) = hist[hist.size() - 1 - static_cast<std::size_t>(l)];
          ref.step(x, u);
          const Matrix got = f.consume(x)->entries();
          EXPECT_LE((got - ref.phi(p)).norm(), 1e-9 * std::max(1.0, ref.phi(p).norm()));
          EXPECT_LE((f.covariance() - ref.cov).cwiseAbs().maxCoeff(), 1e-9);
        } else {
          EXPECT_EQ(f.consume(x), nullptr);
        }
        hist.push_back(x);
      }
    }
  }
}

TEST(Kalman, WithoutStateNoiseEqualsRls) {
  std::mt19937_64 rng(3);
  const int p = 3, k = 2;
  KalmanFilter f(p, k, {0.0, Matrix(), 1.0});
  oracle::Rls rls(p, p * k, 1.0);
  std::vector<Vector> hist;
  for (int t = 0; t < 300; ++t) {
    const Vector x = oracle::random_vector(rng, p);
    if (static_cast<int>(hist.size()) >= k) {
      Vector u(p * k);
      for (int l = 0; l < k; ++l) u.segment(l * p, p) = hist[hist.size() - 1 - static_cast<std::size_t>(l)];
      rls.step(x, u);
      EXPECT_LE((f.consume(x)->entries() - rls.phi).norm(), 1e-8);
    } else {
      f.consume(x);
    }
    hist.push_back(x);
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(4);
  KalmanFilter f(3, 2, {1e-3, Matrix(), 1.0});
  for (int t = 0; t < 500; ++t) {
    f.consume(oracle::random_vector(rng, 3, 3.0));
    if (t % 50 == 49) {
      const Matrix& c = f.covariance();
      EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
    }
  }
}

TEST(Kalman, ZeroDataStaysAtZero) {
  std::vector<Sample> zeros(100, Sample{0, Vector::Zero(2)});
  for (const auto& phi : run_kf(zeros, 2, {}, 10)) EXPECT_TRUE(phi.entries().isZero(0.0));
}

TEST(Kalman, RunKfAlignsWithSkip) {
  std::mt19937_64 rng(5);
  std::vector<Sample> xs;
  for (int t = 0; t < 120; ++t) xs.push_back({t, oracle::random_vector(rng, 2)});
  EXPECT_EQ(run_kf(xs, 2, {}, 50).size(), 70u);
  EXPECT_THROW(run_kf(xs, 2, {}, 120), InputError);
}

TEST(Kalman, ConstantCoefficientErrorShrinksWithT) {
  // Without state noise the filter is a growing-window least squares; averaged over
  // replicates the squared error keeps falling.
  Matrix phi(2, 2);
  phi << 0.5, 0.1, -0.2, 0.3;
  SimSpec s;
  s.p = 2;
  s.k = 1;
  s.t_total = 8000;
  std::vector<double> err(static_cast<std::size_t>(s.t_total) - 1, 0.0);
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    Rng rng(derive_seed(6, rep));
    const auto xs = simulate_tvvar(s, constant_path(ParamMatrix(phi, 1), s.t_total), rng);
    KalmanFilter f(2, 1, {0.0, Matrix(), 1.0});
    std::size_t n = 0;
    for (const auto& x : xs) {
      if (const auto* e = f.consume(x.values)) err[n++] += (e->entries() - phi).squaredNorm();
    }
  }
  auto mean = [&](std::size_t lo, std::size_t hi) {
    double s2 = 0;
    for (std::size_t i = lo; i < hi; ++i) s2 += err[i];
    return s2 / static_cast<double>(hi - lo);
  };
  EXPECT_GT(mean(0, 1000), mean(1000, 4000));
  EXPECT_GT(mean(1000, 4000), mean(4000, err.size()));
}

TEST(Kalman, CustomObservationNoise) {
  std::mt19937_64 rng(7);
  Matrix r(2, 2);
  r << 2.0, 0.3, 0.3, 1.0;
  KalmanFilter f(2, 1, {0.01, r, 1.0});
  oracle::DenseKalman ref(4, 2, 1e-4, 1.0);
  ref.r = r;
  Vector prev = oracle::random_vector(rng, 2);
  f.prime(prev);
  for (int t = 0; t < 40; ++t) {
    const Vector x = oracle::random_vector(rng, 2);
    ref.step(x, prev);
    EXPECT_LE((f.step(x).entries() - ref.phi(2)).norm(), 1e-9);
    prev = x;
  }
}
