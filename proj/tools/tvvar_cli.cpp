// tvvar: simulate, estimate, connectivity, network and bench subcommands.
// Exit codes: 0 ok, 2 usage, 3 bad input, 4 numerical failure, 1 anything else.

#include "tvvar/config.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

namespace {

using namespace tvvar;

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitOther = 1;

struct Flags {
  std::string config;
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> q_sigma;
  std::optional<int> order;
  std::optional<int> channels;
  std::optional<std::int64_t> samples;
  std::optional<std::string> bands;
  std::vector<double> quantiles;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::string> coefficients;
  std::optional<std::string> dump;
  std::optional<double> fs;
  std::optional<double> spacing;
  std::optional<std::string> events;
  std::optional<std::int64_t> half_width;
  std::optional<std::string> quantile_mode;
  std::vector<std::string> measures;
  std::optional<int> replicates;
  std::optional<int> threads;
  std::optional<int> iterations;
  std::optional<std::string> design;
  std::optional<std::size_t> budget;
  std::vector<int> grid_p;
  std::vector<int> grid_k;
  int stride = 1;
  bool print_config = false;
};

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    c.simulation.seed = *f.seed;
  }
  if (f.method) c.method = method_from_string(*f.method);
  if (f.lambda) c.hyper.lambda = *f.lambda;
  if (f.beta) c.hyper.beta = *f.beta;
  if (f.q_sigma) c.hyper.q_sigma = *f.q_sigma;
  if (f.order) {
    c.k = *f.order;
    c.simulation.k = *f.order;
  }
  if (f.channels) {
    c.p = *f.channels;
    c.simulation.p = *f.channels;
  }
  if (f.samples) c.simulation.t_total = *f.samples;
  if (f.fs) c.freq.sampling_hz = *f.fs;
  if (f.spacing) c.freq.spacing_hz = *f.spacing;
  if (f.bands) c.freq.bands = parse_bands(*f.bands);
  if (!f.quantiles.empty()) c.network.quantiles = f.quantiles;
  if (f.quantile_mode) c.network.mode = quantile_mode_from_string(*f.quantile_mode);
  if (!f.measures.empty()) {
    c.network.measures.clear();
    for (const auto& m : f.measures) c.network.measures.push_back(measure_from_string(m));
  }
  if (f.events) {
    if (!c.events) c.events = EventSpec{};
    c.events->events = parse_events(*f.events);
  }
  if (f.half_width) {
    if (!c.events) c.events = EventSpec{};
    c.events->half_width = *f.half_width;
  }
  if (f.input) c.io.input = *f.input;
  if (f.output) c.io.output = *f.output;
  if (f.coefficients) c.io.coefficients = *f.coefficients;
  if (f.dump) c.io.dump = *f.dump;
  if (f.replicates) c.bench.sweep.replicates = *f.replicates;
  if (f.threads) c.bench.sweep.threads = *f.threads;
  if (f.design) c.bench.sweep.design = *f.design;
  if (f.iterations) c.bench.timing.iterations = *f.iterations;
  if (f.budget) c.bench.timing.kf_memory_budget = *f.budget;
  if (!f.grid_p.empty()) c.bench.timing.p = f.grid_p;
  if (!f.grid_k.empty()) c.bench.timing.k = f.grid_k;
  if (f.method) c.bench.timing.methods = {c.method};
  c.validate();
  return c;
}

// Owns a file stream when the path is not "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw InputError("cannot open " + path + " for writing");
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw InputError("cannot open " + path);
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

int cmd_simulate(const RunConfig& c) {
  SimSpec spec = c.simulation;
  spec.validate();
  Rng path_rng(spec.seed);
  const CoeffPath path = make_cosine_coeffs(spec, path_rng);
  Rng data_rng(derive_seed(spec.seed, 1));
  const auto data = simulate_tvvar(spec, path, data_rng);

  Output out(c.io.output);
  write_csv(out.get(), data);
  out.get().flush();
  if (!c.io.coefficients.empty()) {
    Output coeffs(c.io.coefficients);
    for (std::size_t n = 0; n < path.size(); ++n) {
      coeffs.get() << params_record(static_cast<std::int64_t>(n), path[n], "truth").to_json().dump() << '\n';
    }
  }
  std::cerr << "simulated " << data.size() << " samples, p=" << spec.p << " k=" << spec.k
            << ", max companion radius " << max_spectral_radius(path) << '\n';
  return 0;
}

// Streams CSV rows through the estimator; `emit` sees (t, phi, estimator) for each estimate.
template <typename Emit>
void stream_estimates(const RunConfig& c, Emit&& emit) {
  Input in(c.io.input);
  CsvReader reader(in.get());
  OnlineEstimator est(c.estimator(reader.channels()));
  while (auto s = reader.next()) {
    if (const ParamMatrix* phi = est.push(s->values)) {
      if (!phi->all_finite()) throw NumericalError("non-finite estimate at t=" + std::to_string(s->t));
      emit(s->t, *phi, est);
    }
  }
}

int cmd_estimate(const RunConfig& c) {
  Output out(c.io.output);
  const std::string name = to_string(c.method);
  stream_estimates(c, [&](std::int64_t t, const ParamMatrix& phi, const OnlineEstimator&) {
    write_record(out.get(), params_record(t, phi, name));
  });
  return 0;
}

int cmd_connectivity(const RunConfig& c, int stride) {
  if (stride < 1) throw InputError("--stride must be >= 1");
  Output out(c.io.output);
  const FreqSpec freq = c.freq.spec();
  const ConnectivityOptions opts{c.freq.partial_scale};
  std::int64_t unstable = 0;
  std::int64_t emitted = 0;
  stream_estimates(c, [&](std::int64_t t, const ParamMatrix& phi, const OnlineEstimator& est) {
    if (emitted++ % stride != 0) return;
    const Matrix sigma = est.noise_covariance();
    for (const auto& band : c.freq.bands) {
      ConnectivityFrame frame = band_connectivity(phi, sigma, band, freq, opts);
      frame.t = t;
      if (frame.unstable()) ++unstable;
      write_record(out.get(), connectivity_record(frame));
    }
  });
  if (unstable > 0) std::cerr << unstable << " frame(s) had near-singular grid points\n";
  return 0;
}

int cmd_network(const RunConfig& c) {
  if (!c.events || c.events->events.empty()) throw InputError("network: no events given (use --events or the config)");
  Input in(c.io.input);
  const auto records = read_records(in.get(), "connectivity");
  if (records.empty()) throw InputError("network: no connectivity records in input");

  std::map<std::string, std::vector<ConnectivityFrame>> by_band;
  std::vector<std::string> order;
  for (const auto& r : records) {
    auto frame = connectivity_from_record(r);
    auto [it, inserted] = by_band.try_emplace(frame.band.name);
    if (inserted) order.push_back(frame.band.name);
    if (!it->second.empty() && it->second.back().t >= frame.t) {
      throw InputError("network: connectivity records for band " + frame.band.name + " are not ascending in t");
    }
    it->second.push_back(std::move(frame));
  }

  Output out(c.io.output);
  for (const auto& band : order) {
    for (auto measure : c.network.measures) {
      NetworkOptions opts{c.network.quantiles, c.network.mode, measure};
      for (const auto& net : event_networks(by_band[band], *c.events, opts)) write_record(out.get(), network_record(net));
    }
  }
  return 0;
}

SimSpec design_for(const RunConfig& c) {
  const auto& d = c.bench.sweep.design;
  if (d == "sweep") return sweep_design(c.seed);
  if (d == "transfer") return transfer_design(c.seed);
  if (d == "two_group") return two_group_design(c.seed);
  if (d == "config") {
    SimSpec s = c.simulation;
    s.seed = c.seed;
    return s;
  }
  throw InputError("unknown design '" + d + "' (expected sweep, transfer, two_group or config)");
}

void maybe_dump(const RunConfig& c, const std::string& name, const Matrix& m) {
  if (c.io.dump.empty()) return;
  std::ofstream f(c.io.dump, std::ios::binary | std::ios::app);
  if (!f) throw InputError("cannot open " + c.io.dump);
  write_matrix_dump(f, name, m);
}

int cmd_bench_time(const RunConfig& c) {
  Output out(c.io.output);
  TimingOptions opts;
  opts.iterations = c.bench.timing.iterations;
  opts.warmup_iterations = c.bench.timing.warmup_iterations;
  opts.kf_memory_budget = c.bench.timing.kf_memory_budget;
  opts.seed = c.seed;
  opts.hyper = c.hyper;
  for (auto method : c.bench.timing.methods) {
    std::vector<TimingRow> rows;
    for (int k : c.bench.timing.k) {
      for (int p : c.bench.timing.p) {
        rows.push_back(time_per_iteration(method, p, k, opts));
        write_record(out.get(), timing_record(rows.back()));
      }
    }
    std::cerr << format_timing_table(rows, method) << '\n';
    Matrix m(static_cast<Eigen::Index>(c.bench.timing.k.size()), static_cast<Eigen::Index>(c.bench.timing.p.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const auto& r = rows[static_cast<std::size_t>(i * m.cols() + j)];
        m(i, j) = r.refused ? std::numeric_limits<double>::quiet_NaN() : r.mean_ms;
      }
    }
    maybe_dump(c, "timing_" + to_string(method), m);
  }
  return 0;
}

int cmd_bench_mse(const RunConfig& c) {
  Output out(c.io.output);
  const SimSpec spec = design_for(c);
  const SweepOptions opts{c.bench.sweep.replicates, c.seed, c.bench.sweep.threads};
  const auto& methods = c.bench.timing.methods;
  for (auto method : methods) {
    std::vector<Hyper> grid;
    if (method == Method::kf) {
      const auto sigmas = c.bench.sweep.q_sigma.empty() ? log_grid(1e-7, 1e-3, 9) : c.bench.sweep.q_sigma;
      for (double s : sigmas) grid.push_back({c.hyper.lambda, c.hyper.beta, s});
    } else {
      const auto lambdas = c.bench.sweep.lambda.empty() ? log_grid(1e2, 1e6, 9) : c.bench.sweep.lambda;
      for (double l : lambdas) grid.push_back({l, c.bench.sweep.beta, c.hyper.q_sigma});
    }
    const auto rows = mse_sweep(method, grid, spec, opts);
    Matrix m(static_cast<Eigen::Index>(rows.size()), 2);
    std::cerr << to_string(method) << (method == Method::kf ? "  q_sigma" : "  lambda") << "        mse\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      write_record(out.get(), mse_record(rows[i]));
      const double h = method == Method::kf ? rows[i].hyper.q_sigma : rows[i].hyper.lambda;
      m(static_cast<Eigen::Index>(i), 0) = h;
      m(static_cast<Eigen::Index>(i), 1) = rows[i].per_param_mse;
      std::cerr << "  " << format_double(h) << "  " << format_double(rows[i].per_param_mse) << '\n';
    }
    if (!rows.empty()) {
      const auto& best = rows[best_row(rows)];
      std::cerr << "  best " << format_double(method == Method::kf ? best.hyper.q_sigma : best.hyper.lambda) << " mse "
                << format_double(best.per_param_mse) << '\n';
    }
    maybe_dump(c, "mse_" + to_string(method), m);
  }
  return 0;
}

int cmd_bench_transfer(const RunConfig& c) {
  Output out(c.io.output);
  SimSpec spec = design_for(c);
  const SweepOptions opts{c.bench.sweep.replicates, c.seed, c.bench.sweep.threads};
  for (auto method : c.bench.timing.methods) {
    const auto report = transfer_study(method, c.hyper, spec, c.bench.transfer_entries, opts);
    write_record(out.get(), transfer_record(report));
    std::cerr << to_string(method) << " transfer mse " << format_double(report.per_param_mse) << '\n';
    for (const auto& e : report.envelopes) {
      std::cerr << "  phi_" << e.entry.lag << "(" << e.entry.row << "," << e.entry.col << ") coverage "
                << format_double(e.coverage) << '\n';
    }
  }
  return 0;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration; flags override it")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--input,-i", f.input, "input path, - for stdin");
  sub->add_option("--output,-o", f.output, "output path, - for stdout");
  sub->add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
}

void add_estimator(CLI::App* sub, Flags& f) {
  sub->add_option("--method", f.method, "sope, gsope or kf")->check(CLI::IsMember({"sope", "gsope", "kf"}));
  sub->add_option("--lambda,--alpha", f.lambda, "SOPE penalty weight");
  sub->add_option("--beta", f.beta, "SOPE extrapolation weight in [0, 1]");
  sub->add_option("--q-sigma", f.q_sigma, "Kalman state noise standard deviation");
  sub->add_option("--order,-k", f.order, "number of lags K");
}

void add_freq(CLI::App* sub, Flags& f) {
  sub->add_option("--bands", f.bands, "bands as name:lo-hi,name:lo-hi (Hz)");
  sub->add_option("--fs", f.fs, "sampling rate in Hz");
  sub->add_option("--spacing", f.spacing, "frequency grid spacing in Hz");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online estimation and spectral connectivity for time-varying VAR models"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "simulate a cosine tv-VAR design to CSV");
  add_common(sim, f);
  sim->add_option("--order,-k", f.order, "number of lags K");
  sim->add_option("--channels,-p", f.channels, "number of channels P");
  sim->add_option("--samples,-n", f.samples, "number of samples T");
  sim->add_option("--coefficients", f.coefficients, "write the true coefficients here (JSON lines)");

  auto* est = app.add_subcommand("estimate", "stream coefficient estimates for a CSV");
  add_common(est, f);
  add_estimator(est, f);

  auto* con = app.add_subcommand("connectivity", "band coherence, partial coherence and PDC per sample");
  add_common(con, f);
  add_estimator(con, f);
  add_freq(con, f);
  con->add_option("--stride", f.stride, "emit every n-th estimate")->check(CLI::PositiveNumber);

  auto* net = app.add_subcommand("network", "classify edges around events from connectivity records");
  add_common(net, f);
  net->add_option("--events", f.events, "events as label@t,label@t (sample indices)");
  net->add_option("--half-width", f.half_width, "window half width in samples");
  net->add_option("--quantile,-q", f.quantiles, "threshold quantile(s)");
  net->add_option("--quantile-mode", f.quantile_mode, "epoch or pre_event")
      ->check(CLI::IsMember({"epoch", "pre_event"}));
  net->add_option("--measure", f.measures, "coherence, partial_coherence or pdc")
      ->check(CLI::IsMember({"coherence", "partial_coherence", "pdc"}));

  auto* bench = app.add_subcommand("bench", "timing and accuracy studies");
  bench->require_subcommand(1);
  auto* btime = bench->add_subcommand("time", "per-iteration timing grid");
  auto* bmse = bench->add_subcommand("mse", "hyperparameter MSE sweep");
  auto* btransfer = bench->add_subcommand("transfer", "quantile envelopes at fixed hyperparameters");
  for (auto* sub : {btime, bmse, btransfer}) {
    add_common(sub, f);
    add_estimator(sub, f);
    sub->add_option("--dump", f.dump, "append binary matrix dumps to this file");
  }
  btime->add_option("--iterations", f.iterations, "timed iterations per cell");
  btime->add_option("--budget", f.budget, "Kalman covariance memory budget in bytes");
  btime->add_option("--grid-p", f.grid_p, "channel counts");
  btime->add_option("--grid-k", f.grid_k, "lag counts");
  for (auto* sub : {bmse, btransfer}) {
    sub->add_option("--replicates", f.replicates, "simulation replicates");
    sub->add_option("--threads", f.threads, "worker threads, 0 for all cores");
    sub->add_option("--design", f.design, "sweep, transfer, two_group or config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const RunConfig c = resolve(f);
    if (f.print_config) {
      std::cout << config_to_json(c).dump(2) << '\n';
      return 0;
    }
    if (*sim) return cmd_simulate(c);
    if (*est) return cmd_estimate(c);
    if (*con) return cmd_connectivity(c, f.stride);
    if (*net) return cmd_network(c);
    if (*btime) return cmd_bench_time(c);
    if (*bmse) return cmd_bench_mse(c);
    if (*btransfer) return cmd_bench_transfer(c);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
