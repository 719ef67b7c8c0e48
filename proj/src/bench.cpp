#include "tvvar/bench.hpp"

#include "tvvar/network.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace tvvar {

namespace {

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
}

double squared_error(const ParamMatrix& estimate, const ParamMatrix& truth) {
  return (estimate.entries() - truth.entries()).squaredNorm();
}

SimSpec timing_design(int p, int k, std::int64_t length, std::uint64_t seed) {
  SimSpec spec;
  spec.p = p;
  spec.k = k;
  spec.t_total = length;
  spec.seed = seed;
  return spec;
}

}  // namespace

TimingRow time_per_iteration(Method method, int p, int k, const TimingOptions& options) {
  if (options.iterations < 100) throw InputError("time_per_iteration: need at least 100 timed iterations");
  TimingRow row;
  row.method = method;
  row.p = p;
  row.k = k;
  row.warmup_iterations = options.warmup_iterations < 0 ? std::max(50, k + 1) : options.warmup_iterations;
  row.iterations = options.iterations;
  row.required_bytes = method == Method::kf ? kalman_covariance_bytes(p, k) : 0;
  if (method == Method::kf && row.required_bytes > options.kf_memory_budget) {
    row.refused = true;
    row.iterations = 0;
    std::ostringstream note;
    note << "state covariance needs (K*P^2)^2 = " << row.required_bytes << " bytes, budget "
         << options.kf_memory_budget << " bytes";
    row.note = note.str();
    return row;
  }

  // Data content does not affect step cost; a stable diagonal VAR(1) keeps it bounded.
  const std::int64_t total = k + row.warmup_iterations + row.iterations;
  const SimSpec spec = timing_design(p, k, total, options.seed);
  ParamMatrix truth(p, k);
  truth.lag(1).diagonal().setConstant(0.5);
  Rng rng(options.seed);
  const auto data = simulate_tvvar(spec, constant_path(truth, total), rng);
  const std::span<const Sample> lags(data.data(), static_cast<std::size_t>(k));
  const PenaltySpec penalty{options.hyper.lambda, options.hyper.beta};

  std::variant<std::monostate, SopeFilter, GeneralSopeFilter, KalmanFilter> filter;
  switch (method) {
    case Method::sope:
      filter.emplace<SopeFilter>(ParamMatrix(p, k), lags, penalty);
      break;
    case Method::gsope:
      filter.emplace<GeneralSopeFilter>(ParamMatrix(p, k), lags, k, penalty);
      break;
    case Method::kf: {
      auto& kf = filter.emplace<KalmanFilter>(p, k, KalmanConfig{options.hyper.q_sigma, Matrix(), 1.0});
      for (const auto& s : lags) kf.prime(s.values);
      break;
    }
  }

  using clock = std::chrono::steady_clock;
  std::vector<double> samples_ms;
  samples_ms.reserve(static_cast<std::size_t>(row.iterations));
  double sink = 0.0;
  for (int i = 0; i < row.warmup_iterations + row.iterations; ++i) {
    const auto& x = data[static_cast<std::size_t>(k + i)].values;
    const auto t0 = clock::now();
    const ParamMatrix& est = std::visit(
        [&x](auto& f) -> const ParamMatrix& {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, std::monostate>) {
            throw Error("time_per_iteration: no filter");
          } else {
            return f.step(x);
          }
        },
        filter);
    const auto t1 = clock::now();
    sink += est(0, 0);
    if (i >= row.warmup_iterations) samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  if (!std::isfinite(sink)) row.note = "non-finite estimate during timing";

  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  row.mean_ms = sum / static_cast<double>(samples_ms.size());
  row.p50_ms = quantile_linear(samples_ms, 0.5);
  row.p95_ms = quantile_linear(samples_ms, 0.95);
  return row;
}

std::string format_timing_table(std::span<const TimingRow> rows, Method method) {
  std::set<int> ps;
  std::set<int> ks;
  std::map<std::pair<int, int>, const TimingRow*> cells;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    ps.insert(r.p);
    ks.insert(r.k);
    cells[{r.k, r.p}] = &r;
  }
  std::ostringstream out;
  out << "Execution time per iteration for " << to_string(method) << " (ms)\n";
  out << std::setw(8) << "";
  for (int p : ps) out << std::setw(12) << ("P=" + std::to_string(p));
  out << '\n';
  for (int k : ks) {
    out << std::setw(8) << ("K=" + std::to_string(k));
    for (int p : ps) {
      const auto it = cells.find({k, p});
      if (it == cells.end()) {
        out << std::setw(12) << "-";
      } else if (it->second->refused) {
        out << std::setw(12) << "refused";
      } else {
        std::ostringstream cell;
        cell << std::setprecision(4) << it->second->mean_ms;
        out << std::setw(12) << cell.str();
      }
    }
    out << '\n';
  }
  return out.str();
}

double per_param_mse(std::span<const ParamMatrix> estimates, const CoeffPath& truth, std::size_t offset) {
  if (estimates.empty()) throw InputError("per_param_mse: no estimates");
  if (offset + estimates.size() > truth.size()) throw InputError("per_param_mse: truth path too short");
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) total += squared_error(estimates[i], truth[offset + i]);
  const auto entries = static_cast<double>(estimates.front().entries().size());
  return total / (entries * static_cast<double>(estimates.size()));
}

std::string sim_digest(const SimSpec& spec) {
  std::ostringstream s;
  s << std::setprecision(17) << spec.p << ';' << spec.k << ';' << spec.t_total << ';' << spec.seed << ';'
    << spec.amp_diag.lo << ',' << spec.amp_diag.hi << ';' << spec.amp_offdiag.lo << ',' << spec.amp_offdiag.hi << ';'
    << spec.radius_limit << ';' << spec.max_halvings << ';';
  for (const auto& g : spec.effective_groups()) {
    for (int c : g) s << c << ',';
    s << '|';
  }
  const Matrix cov = spec.noise_covariance();
  for (Eigen::Index i = 0; i < cov.size(); ++i) s << cov.data()[i] << ',';
  for (const auto& d : spec.discontinuities) s << d.t << ':' << d.row << ':' << d.col << ':' << d.lag << ':' << d.delta << ',';
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct ReplicateErrors {
  std::vector<double> post;    // per hyper, summed squared error past warmup
  std::vector<double> warmup;  // per hyper, summed squared error over [K, warmup)
};

EstimatorConfig config_for(Method method, const SimSpec& spec, const Hyper& hyper) {
  EstimatorConfig cfg;
  cfg.method = method;
  cfg.p = spec.p;
  cfg.k = spec.k;
  cfg.hyper = hyper;
  return cfg;
}

// Runs one estimator over `data` and calls visit(n, estimate) for every sample index n >= K
// where an estimate exists online (the Kalman filter during warmup, everyone afterwards).
template <typename Visit>
void drive(const EstimatorConfig& cfg, const std::vector<Sample>& data, Visit&& visit) {
  OnlineEstimator est(cfg);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const ParamMatrix* phi = est.push(data[n].values);
    if (!phi) phi = est.current();
    if (phi && n >= static_cast<std::size_t>(cfg.k)) visit(n, *phi);
  }
}

}  // namespace

std::vector<MseRow> mse_sweep(Method method, std::span<const Hyper> grid, const SimSpec& spec,
                              const SweepOptions& options) {
  if (grid.empty()) throw InputError("mse_sweep: empty hyperparameter grid");
  if (options.replicates < 1) throw InputError("mse_sweep: need at least one replicate");
  spec.validate();
  Rng path_rng(spec.seed);
  const CoeffPath path = make_cosine_coeffs(spec, path_rng);
  const std::size_t warmup = sope_warmup_length(spec.p, spec.k);
  if (static_cast<std::size_t>(spec.t_total) <= warmup) throw InputError("mse_sweep: series shorter than warmup");

  std::vector<ReplicateErrors> per_rep(static_cast<std::size_t>(options.replicates));
  parallel_for(options.replicates, options.threads, [&](int r) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(r) + 1));
    const auto data = simulate_tvvar(spec, path, rng);
    auto& errs = per_rep[static_cast<std::size_t>(r)];
    errs.post.assign(grid.size(), 0.0);
    errs.warmup.assign(grid.size(), 0.0);
    for (std::size_t h = 0; h < grid.size(); ++h) {
      drive(config_for(method, spec, grid[h]), data, [&](std::size_t n, const ParamMatrix& phi) {
        const double e = squared_error(phi, path[n]);
        (n >= warmup ? errs.post[h] : errs.warmup[h]) += e;
      });
    }
  });

  const double entries = static_cast<double>(spec.p) * spec.p * spec.k;
  const double post_count = entries * static_cast<double>(static_cast<std::size_t>(spec.t_total) - warmup) * options.replicates;
  const double warm_count = entries * static_cast<double>(warmup - static_cast<std::size_t>(spec.k)) * options.replicates;
  const std::string digest = sim_digest(spec);
  std::vector<MseRow> rows;
  for (std::size_t h = 0; h < grid.size(); ++h) {
    double post = 0.0;
    double warm = 0.0;
    for (const auto& r : per_rep) {
      post += r.post[h];
      warm += r.warmup[h];
    }
    MseRow row;
    row.method = method;
    row.hyper = grid[h];
    row.per_param_mse = post / post_count;
    row.warmup_mse = method == Method::kf ? warm / warm_count : std::nan("");
    row.replicates = options.replicates;
    row.sim_digest = digest;
    rows.push_back(row);
  }
  return rows;
}

std::size_t best_row(std::span<const MseRow> rows) {
  if (rows.empty()) throw InputError("best_row: no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].per_param_mse < rows[best].per_param_mse) best = i;
  }
  return best;
}

std::vector<double> error_profile(Method method, const Hyper& hyper, const SimSpec& spec, const SweepOptions& options) {
  if (options.replicates < 1) throw InputError("error_profile: need at least one replicate");
  spec.validate();
  Rng path_rng(spec.seed);
  const CoeffPath path = make_cosine_coeffs(spec, path_rng);
  const std::size_t warmup = sope_warmup_length(spec.p, spec.k);
  if (static_cast<std::size_t>(spec.t_total) <= warmup) throw InputError("error_profile: series shorter than warmup");
  const std::size_t len = static_cast<std::size_t>(spec.t_total) - warmup;

  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(options.replicates));
  parallel_for(options.replicates, options.threads, [&](int r) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(r) + 1));
    const auto data = simulate_tvvar(spec, path, rng);
    auto& prof = per_rep[static_cast<std::size_t>(r)];
    prof.assign(len, 0.0);
    drive(config_for(method, spec, hyper), data, [&](std::size_t n, const ParamMatrix& phi) {
      if (n >= warmup) prof[n - warmup] = squared_error(phi, path[n]);
    });
  });

  const double scale = 1.0 / (static_cast<double>(spec.p) * spec.p * spec.k * options.replicates);
  std::vector<double> out(len, 0.0);
  for (const auto& prof : per_rep) {
    for (std::size_t i = 0; i < len; ++i) out[i] += prof[i];
  }
  for (double& v : out) v *= scale;
  return out;
}

TransferReport transfer_study(Method method, const Hyper& hyper, const SimSpec& spec, std::span<const EntryRef> entries,
                              const SweepOptions& options) {
  if (options.replicates < 1) throw InputError("transfer_study: need at least one replicate");
  spec.validate();
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= spec.p || e.col < 0 || e.col >= spec.p || e.lag < 1 || e.lag > spec.k) {
      throw InputError("transfer_study: entry out of range");
    }
  }
  Rng path_rng(spec.seed);
  const CoeffPath path = make_cosine_coeffs(spec, path_rng);
  const std::size_t warmup = sope_warmup_length(spec.p, spec.k);
  if (static_cast<std::size_t>(spec.t_total) <= warmup) throw InputError("transfer_study: series shorter than warmup");
  const std::size_t len = static_cast<std::size_t>(spec.t_total) - warmup;
  const auto reps = static_cast<std::size_t>(options.replicates);

  // values[e][i * reps + r]
  std::vector<std::vector<double>> values(entries.size(), std::vector<double>(len * reps));
  std::vector<double> sq(reps, 0.0);
  parallel_for(options.replicates, options.threads, [&](int r) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(r) + 1));
    const auto data = simulate_tvvar(spec, path, rng);
    const auto rr = static_cast<std::size_t>(r);
    drive(config_for(method, spec, hyper), data, [&](std::size_t n, const ParamMatrix& phi) {
      if (n < warmup) return;
      const std::size_t i = n - warmup;
      for (std::size_t e = 0; e < entries.size(); ++e) {
        values[e][i * reps + rr] = phi(entries[e].row, (entries[e].lag - 1) * spec.p + entries[e].col);
      }
      sq[rr] += squared_error(phi, path[n]);
    });
  });

  TransferReport report;
  report.method = method;
  report.hyper = hyper;
  report.replicates = options.replicates;
  report.first_index = warmup;
  double total = 0.0;
  for (double v : sq) total += v;
  report.per_param_mse = total / (static_cast<double>(spec.p) * spec.p * spec.k * static_cast<double>(len * reps));

  for (std::size_t e = 0; e < entries.size(); ++e) {
    Envelope env;
    env.entry = entries[e];
    std::size_t covered = 0;
    std::vector<double> column(reps);
    for (std::size_t i = 0; i < len; ++i) {
      std::copy_n(values[e].begin() + static_cast<std::ptrdiff_t>(i * reps), reps, column.begin());
      const double truth = path[warmup + i](entries[e].row, (entries[e].lag - 1) * spec.p + entries[e].col);
      double lo = column.front();
      double mid = column.front();
      double hi = column.front();
      if (reps > 1) {
        lo = quantile_linear(column, 0.025);
        mid = quantile_linear(column, 0.5);
        hi = quantile_linear(column, 0.975);
      }
      env.truth.push_back(truth);
      env.lower.push_back(lo);
      env.median.push_back(mid);
      env.upper.push_back(hi);
      if (truth >= lo && truth <= hi) ++covered;
    }
    env.coverage = static_cast<double>(covered) / static_cast<double>(len);
    report.envelopes.push_back(std::move(env));
  }
  return report;
}

SimSpec sweep_design(std::uint64_t seed) {
  SimSpec s;
  s.p = 3;
  s.k = 2;
  s.t_total = 2000;
  s.seed = seed;
  return s;
}

SimSpec transfer_design(std::uint64_t seed) {
  SimSpec s;
  s.p = 6;
  s.k = 5;
  s.t_total = 2000;
  s.seed = seed;
  return s;
}

SimSpec two_group_design(std::uint64_t seed) {
  SimSpec s;
  s.p = 5;
  s.k = 1;
  s.t_total = 2000;
  s.groups = {{0, 1, 2}, {3, 4}};
  s.seed = seed;
  return s;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw InputError("log_grid: need 0 < lo <= hi and points >= 1");
  std::vector<double> out;
  if (points == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
  return out;
}

}  // namespace tvvar
