#pragma once

// Timing and accuracy studies: per-iteration latency of each estimator, MSE sweeps over
// hyperparameters on simulated cosine designs, quantile envelopes for transferred
// hyperparameters, and transient error after coefficient jumps.

#include "tvvar/estimator.hpp"
#include "tvvar/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tvvar {

inline constexpr std::size_t kDefaultKalmanBudget = std::size_t{4} << 30;  // 4 GiB

struct TimingOptions {
  int iterations = 1000;
  int warmup_iterations = -1;  // negative selects max(50, K+1)
  std::size_t kf_memory_budget = kDefaultKalmanBudget;
  std::uint64_t seed = 0;
  Hyper hyper;
};

struct TimingRow {
  Method method = Method::sope;
  int p = 0;
  int k = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  int iterations = 0;
  int warmup_iterations = 0;
  bool refused = false;
  std::size_t required_bytes = 0;
  std::string note;
};

/// Drives the estimator on simulated data and times each step after the warmup iterations.
/// The Kalman filter refuses (refused = true, no timings) when its covariance would exceed
/// the memory budget.
TimingRow time_per_iteration(Method method, int p, int k, const TimingOptions& options);

/// Aligned K-rows by P-columns table of mean milliseconds; refused cells print "refused".
std::string format_timing_table(std::span<const TimingRow> rows, Method method);

struct SweepOptions {
  int replicates = 200;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 selects std::thread::hardware_concurrency()
};

struct MseRow {
  Method method = Method::sope;
  Hyper hyper;
  double per_param_mse = 0.0;
  double warmup_mse = 0.0;  // error over the warmup region, reported separately
  int replicates = 0;
  std::string sim_digest;
};

/// Mean of (estimate - truth)^2 over every entry and every estimate; estimates[i] is
/// compared with truth[offset + i].
double per_param_mse(std::span<const ParamMatrix> estimates, const CoeffPath& truth, std::size_t offset);

/// Stable hex digest of a simulation design.
std::string sim_digest(const SimSpec& spec);

/// The design's coefficient path, drawn once from spec.seed. Replicate r simulates fresh data
/// from derive_seed(spec.seed, r + 1) on this path; every hyperparameter sees the same data.
std::vector<MseRow> mse_sweep(Method method, std::span<const Hyper> grid, const SimSpec& spec,
                              const SweepOptions& options);

/// Index of the smallest per_param_mse.
std::size_t best_row(std::span<const MseRow> rows);

/// Mean squared error per parameter at each post-warmup sample index, averaged over replicates.
std::vector<double> error_profile(Method method, const Hyper& hyper, const SimSpec& spec, const SweepOptions& options);

struct EntryRef {
  int row = 0;
  int col = 0;
  int lag = 1;
};

struct Envelope {
  EntryRef entry;
  std::vector<double> truth;
  std::vector<double> lower;  // 2.5 %
  std::vector<double> median;
  std::vector<double> upper;  // 97.5 %
  double coverage = 0.0;      // fraction of samples with truth inside [lower, upper]
};

struct TransferReport {
  Method method = Method::sope;
  Hyper hyper;
  int replicates = 0;
  std::size_t first_index = 0;  // sample index of the first envelope point
  double per_param_mse = 0.0;
  std::vector<Envelope> envelopes;
};

/// Runs `method` with fixed hyperparameters on `spec` and reports pointwise quantile
/// envelopes of the requested entries over replicates.
TransferReport transfer_study(Method method, const Hyper& hyper, const SimSpec& spec, std::span<const EntryRef> entries,
                              const SweepOptions& options);

/// Default P=3, K=2 cosine design used for the hyperparameter sweeps.
SimSpec sweep_design(std::uint64_t seed = 0);
/// Default P=6, K=5 design for transferring hyperparameters.
SimSpec transfer_design(std::uint64_t seed = 0);
/// P=5, K=1 two-group design {0,1,2}, {3,4}.
SimSpec two_group_design(std::uint64_t seed = 0);

std::vector<double> log_grid(double lo, double hi, int points);

}  // namespace tvvar
