#pragma once

// Uniform streaming front end over the three estimators. Every method emits its first
// estimate at the same sample index (the SOPE warmup length), so outputs line up.

#include "tvvar/kalman.hpp"
#include "tvvar/sope.hpp"
#include "tvvar/sope_general.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tvvar {

enum class Method { sope, gsope, kf };
std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct Hyper {
  double lambda = 5000.0;
  double beta = 0.9;
  double q_sigma = 1e-5;
};

struct EstimatorConfig {
  Method method = Method::sope;
  int p = 1;
  int k = 1;
  Hyper hyper;
  GeneralSopeOptions general;
  double kf_init_cov = 1.0;
};

class OnlineEstimator {
 public:
  explicit OnlineEstimator(EstimatorConfig config);

  /// Feeds X(t). Returns the estimate for this sample once past the warmup, else nullptr.
  const ParamMatrix* push(const Eigen::Ref<const Vector>& x);

  /// Latest estimate without consuming a sample: the Kalman filter has one as soon as it
  /// has stepped, the SOPE variants only after warmup.
  [[nodiscard]] const ParamMatrix* current() const;

  [[nodiscard]] std::size_t warmup_length() const { return warmup_; }
  [[nodiscard]] std::size_t samples_seen() const { return seen_; }
  [[nodiscard]] const EstimatorConfig& config() const { return config_; }

  /// Innovation covariance to use for spectra: the running estimate for gsope, else identity.
  [[nodiscard]] Matrix noise_covariance() const;

  /// The constant estimate held during warmup (SOPE variants), available once warmup ends.
  [[nodiscard]] std::optional<ParamMatrix> initial_estimate() const { return initial_; }

 private:
  EstimatorConfig config_;
  std::size_t warmup_;
  std::size_t seen_ = 0;
  std::vector<Sample> pending_;
  std::optional<ParamMatrix> initial_;
  std::variant<std::monostate, SopeFilter, GeneralSopeFilter, KalmanFilter> filter_;
};

/// Batch helper: one estimate per sample past the warmup.
std::vector<ParamMatrix> run_estimator(const EstimatorConfig& config, std::span<const Sample> samples);

}  // namespace tvvar
