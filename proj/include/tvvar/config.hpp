#pragma once

// Declarative run configuration. One JSON file drives every subcommand; command-line
// flags are applied on top of it afterwards.

#include "tvvar/bench.hpp"
#include "tvvar/estimator.hpp"
#include "tvvar/io.hpp"
#include "tvvar/model.hpp"
#include "tvvar/network.hpp"
#include "tvvar/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tvvar {

struct FreqConfig {
  double sampling_hz = 1000.0;
  double spacing_hz = 1.0;
  std::vector<BandSpec> bands{{"theta", 4.0, 12.0}, {"beta", 15.0, 30.0}, {"slow_gamma", 35.0, 55.0}};
  PartialCoherenceScale partial_scale = PartialCoherenceScale::magnitude;

  [[nodiscard]] FreqSpec spec() const { return FreqSpec::uniform(sampling_hz, spacing_hz); }
};

struct NetworkConfig {
  std::vector<double> quantiles{0.5, 0.75, 0.9};
  QuantileMode mode = QuantileMode::epoch;
  std::vector<Measure> measures{Measure::coherence, Measure::partial_coherence, Measure::pdc};
};

struct TimingGrid {
  std::vector<Method> methods{Method::sope, Method::kf};
  std::vector<int> p{5, 10, 20, 50, 100, 250};
  std::vector<int> k{1, 3, 5};
  int iterations = 1000;
  int warmup_iterations = -1;
  std::size_t kf_memory_budget = kDefaultKalmanBudget;
};

struct SweepGrid {
  std::string design = "sweep";  // sweep | transfer | two_group
  int replicates = 200;
  int threads = 0;
  std::vector<double> lambda;  // empty selects a log grid 10^2..10^6
  double beta = 0.9;
  std::vector<double> q_sigma;  // empty selects a log grid 10^-7..10^-3
};

struct BenchConfig {
  TimingGrid timing;
  SweepGrid sweep;
  std::vector<EntryRef> transfer_entries{{0, 0, 1}, {0, 1, 1}, {1, 0, 2}};
};

struct IoConfig {
  std::string input = "-";   // "-" is stdin
  std::string output = "-";  // "-" is stdout
  std::string coefficients;  // simulate: ground-truth output path
  std::string dump;          // bench: optional binary matrix dump path
};

struct RunConfig {
  int p = 0;  // 0 takes the channel count from the input header
  int k = 1;
  Method method = Method::sope;
  Hyper hyper;
  GeneralSopeOptions general;
  double kf_init_cov = 1.0;
  FreqConfig freq;
  std::optional<EventSpec> events;
  NetworkConfig network;
  SimSpec simulation;
  BenchConfig bench;
  IoConfig io;
  std::uint64_t seed = 0;

  /// Throws InputError on out-of-range values or bands beyond Nyquist.
  void validate() const;

  [[nodiscard]] EstimatorConfig estimator(int channels) const;
};

json config_to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const json& j);

RunConfig load_config(const std::string& path);

/// "name:lo-hi,name:lo-hi"
std::vector<BandSpec> parse_bands(const std::string& text);
/// "label@t,label@t"
std::vector<Event> parse_events(const std::string& text);

}  // namespace tvvar
