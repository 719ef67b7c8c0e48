#include "tvvar/estimator.hpp"

namespace tvvar {

std::string to_string(Method m) {
  switch (m) {
    case Method::sope:
      return "sope";
    case Method::gsope:
      return "gsope";
    case Method::kf:
      return "kf";
  }
  return "sope";
}

Method method_from_string(const std::string& name) {
  if (name == "sope") return Method::sope;
  if (name == "gsope") return Method::gsope;
  if (name == "kf") return Method::kf;
  throw InputError("unknown method: " + name + " (expected sope, gsope or kf)");
}

OnlineEstimator::OnlineEstimator(EstimatorConfig config)
    : config_(std::move(config)), warmup_(sope_warmup_length(config_.p, config_.k)) {
  if (config_.p < 1 || config_.k < 1) throw InputError("estimator: p and k must be >= 1");
  if (config_.method == Method::kf) {
    filter_.emplace<KalmanFilter>(config_.p, config_.k,
                                  KalmanConfig{config_.hyper.q_sigma, Matrix(), config_.kf_init_cov});
  } else {
    PenaltySpec{config_.hyper.lambda, config_.hyper.beta}.validate();
    pending_.reserve(warmup_);
  }
}

const ParamMatrix* OnlineEstimator::push(const Eigen::Ref<const Vector>& x) {
  if (x.size() != config_.p) throw InputError("estimator: sample has " + std::to_string(x.size()) + " channels, expected " + std::to_string(config_.p));
  const std::size_t n = seen_++;
  const PenaltySpec penalty{config_.hyper.lambda, config_.hyper.beta};

  if (auto* kf = std::get_if<KalmanFilter>(&filter_)) {
    const ParamMatrix* phi = kf->consume(x);
    if (n < warmup_) return nullptr;
    return phi ? phi : &kf->estimate();
  }

  if (n < warmup_) {
    pending_.push_back({static_cast<std::int64_t>(n), x});
    if (pending_.size() == warmup_) {
      if (config_.method == Method::sope) {
        auto& f = filter_.emplace<SopeFilter>(SopeFilter::from_warmup(pending_, config_.k, penalty));
        initial_ = f.estimate();
      } else {
        auto& f = filter_.emplace<GeneralSopeFilter>(
            GeneralSopeFilter::from_warmup(pending_, config_.k, penalty, config_.general));
        initial_ = f.estimate();
      }
      pending_.clear();
      pending_.shrink_to_fit();
    }
    return nullptr;
  }
  if (auto* s = std::get_if<SopeFilter>(&filter_)) return &s->step(x);
  return &std::get<GeneralSopeFilter>(filter_).step(x);
}

const ParamMatrix* OnlineEstimator::current() const {
  if (const auto* kf = std::get_if<KalmanFilter>(&filter_)) return seen_ > static_cast<std::size_t>(config_.k) ? &kf->estimate() : nullptr;
  if (const auto* s = std::get_if<SopeFilter>(&filter_)) return &s->estimate();
  if (const auto* g = std::get_if<GeneralSopeFilter>(&filter_)) return &g->estimate();
  return nullptr;
}

Matrix OnlineEstimator::noise_covariance() const {
  if (const auto* g = std::get_if<GeneralSopeFilter>(&filter_)) return g->covariance();
  return Matrix::Identity(config_.p, config_.p);
}

std::vector<ParamMatrix> run_estimator(const EstimatorConfig& config, std::span<const Sample> samples) {
  OnlineEstimator est(config);
  std::vector<ParamMatrix> out;
  if (samples.size() > est.warmup_length()) out.reserve(samples.size() - est.warmup_length());
  for (const auto& s : samples) {
    if (const ParamMatrix* phi = est.push(s.values)) out.push_back(*phi);
  }
  return out;
}

}  // namespace tvvar
