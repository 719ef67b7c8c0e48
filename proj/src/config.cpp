#include "tvvar/config.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>

namespace tvvar {

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InputError(std::string("config: '") + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InputError(std::string("config: unknown key '") + item.key() + "' in '" + where + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string scale_name(PartialCoherenceScale s) {
  return s == PartialCoherenceScale::squared ? "squared" : "magnitude";
}

PartialCoherenceScale scale_from(const std::string& s) {
  if (s == "magnitude") return PartialCoherenceScale::magnitude;
  if (s == "squared") return PartialCoherenceScale::squared;
  throw InputError("config: partial_scale must be magnitude or squared, got " + s);
}

json sim_to_json(const SimSpec& s) {
  json d = json::array();
  for (const auto& x : s.discontinuities) {
    d.push_back({{"t", x.t}, {"row", x.row}, {"col", x.col}, {"lag", x.lag}, {"delta", x.delta}});
  }
  return {{"p", s.p},
          {"k", s.k},
          {"t_total", s.t_total},
          {"groups", s.groups},
          {"amp_diag", {s.amp_diag.lo, s.amp_diag.hi}},
          {"amp_offdiag", {s.amp_offdiag.lo, s.amp_offdiag.hi}},
          {"noise_cov", s.noise_cov.size() == 0 ? json(nullptr) : matrix_to_json(s.noise_cov)},
          {"discontinuities", d},
          {"radius_limit", s.radius_limit},
          {"max_halvings", s.max_halvings}};
}

Interval interval_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("config: amplitude ranges are [lo, hi] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

SimSpec sim_from_json(const json& j, std::uint64_t seed) {
  check_keys(j, "simulation",
             {"p", "k", "t_total", "groups", "amp_diag", "amp_offdiag", "noise_cov", "discontinuities",
              "radius_limit", "max_halvings"});
  SimSpec s;
  s.seed = seed;
  read_opt(j, "p", s.p);
  read_opt(j, "k", s.k);
  read_opt(j, "t_total", s.t_total);
  read_opt(j, "groups", s.groups);
  if (j.contains("amp_diag")) s.amp_diag = interval_from(j.at("amp_diag"));
  if (j.contains("amp_offdiag")) s.amp_offdiag = interval_from(j.at("amp_offdiag"));
  if (j.contains("noise_cov") && !j.at("noise_cov").is_null()) s.noise_cov = matrix_from_json(j.at("noise_cov"));
  if (j.contains("discontinuities")) {
    for (const auto& d : j.at("discontinuities")) {
      check_keys(d, "discontinuities", {"t", "row", "col", "lag", "delta"});
      Discontinuity x;
      read_opt(d, "t", x.t);
      read_opt(d, "row", x.row);
      read_opt(d, "col", x.col);
      read_opt(d, "lag", x.lag);
      read_opt(d, "delta", x.delta);
      s.discontinuities.push_back(x);
    }
  }
  read_opt(j, "radius_limit", s.radius_limit);
  read_opt(j, "max_halvings", s.max_halvings);
  return s;
}

double parse_number(std::string_view s, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("cannot parse number '" + std::string(s) + "' in " + context);
  }
  return v;
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = text.find(sep);
    out.push_back(text.substr(0, pos));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (p < 0) throw InputError("config: model.p must be >= 0");
  if (k < 1) throw InputError("config: model.k must be >= 1");
  if (method != Method::kf) {
    PenaltySpec{hyper.lambda, hyper.beta}.validate();
  } else if (!(hyper.q_sigma >= 0.0)) {
    throw InputError("config: kf.q_sigma must be >= 0");
  }
  if (!(kf_init_cov > 0.0)) throw InputError("config: kf.init_cov must be > 0");
  const FreqSpec f = freq.spec();
  for (const auto& b : freq.bands) b.validate(f);
  for (double q : network.quantiles) {
    if (!(q > 0.0 && q < 1.0)) throw InputError("config: quantiles must lie in (0, 1)");
  }
  if (events && events->half_width < 1) throw InputError("config: events.half_width must be >= 1");
  if (bench.sweep.replicates < 1) throw InputError("config: bench.sweep.replicates must be >= 1");
  if (bench.timing.iterations < 1) throw InputError("config: bench.timing.iterations must be >= 1");
}

EstimatorConfig RunConfig::estimator(int channels) const {
  if (p != 0 && p != channels) {
    throw InputError("config: model.p = " + std::to_string(p) + " but the input has " + std::to_string(channels) +
                     " channels");
  }
  EstimatorConfig e;
  e.method = method;
  e.p = channels;
  e.k = k;
  e.hyper = hyper;
  e.general = general;
  e.kf_init_cov = kf_init_cov;
  return e;
}

json config_to_json(const RunConfig& c) {
  json bands = json::array();
  for (const auto& b : c.freq.bands) bands.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});
  json measures = json::array();
  for (auto m : c.network.measures) measures.push_back(to_string(m));
  json methods = json::array();
  for (auto m : c.bench.timing.methods) methods.push_back(to_string(m));
  json entries = json::array();
  for (const auto& e : c.bench.transfer_entries) entries.push_back({{"row", e.row}, {"col", e.col}, {"lag", e.lag}});

  json j = {
      {"model", {{"p", c.p}, {"k", c.k}}},
      {"method", to_string(c.method)},
      {"penalty", {{"lambda", c.hyper.lambda}, {"beta", c.hyper.beta}}},
      {"kf", {{"q_sigma", c.hyper.q_sigma}, {"init_cov", c.kf_init_cov}}},
      {"gsope", {{"burn_in", c.general.burn_in}, {"jitter_scale", c.general.jitter_scale}}},
      {"freq",
       {{"sampling_hz", c.freq.sampling_hz},
        {"spacing_hz", c.freq.spacing_hz},
        {"bands", bands},
        {"partial_scale", scale_name(c.freq.partial_scale)}}},
      {"network",
       {{"quantiles", c.network.quantiles}, {"quantile_mode", to_string(c.network.mode)}, {"measures", measures}}},
      {"simulation", sim_to_json(c.simulation)},
      {"bench",
       {{"timing",
         {{"methods", methods},
          {"p", c.bench.timing.p},
          {"k", c.bench.timing.k},
          {"iterations", c.bench.timing.iterations},
          {"warmup_iterations", c.bench.timing.warmup_iterations},
          {"kf_memory_budget", c.bench.timing.kf_memory_budget}}},
        {"sweep",
         {{"design", c.bench.sweep.design},
          {"replicates", c.bench.sweep.replicates},
          {"threads", c.bench.sweep.threads},
          {"lambda", c.bench.sweep.lambda},
          {"beta", c.bench.sweep.beta},
          {"q_sigma", c.bench.sweep.q_sigma}}},
        {"transfer_entries", entries}}},
      {"io",
       {{"input", c.io.input}, {"output", c.io.output}, {"coefficients", c.io.coefficients}, {"dump", c.io.dump}}},
      {"seed", c.seed},
  };
  if (c.events) {
    json ev = json::array();
    for (const auto& e : c.events->events) ev.push_back({{"label", e.label}, {"t", e.t}});
    j["events"] = {{"half_width", c.events->half_width}, {"events", ev}};
  }
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j, "root",
               {"model", "method", "penalty", "kf", "gsope", "freq", "events", "network", "simulation", "bench", "io",
                "seed"});
    read_opt(j, "seed", c.seed);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"p", "k"});
      read_opt(m, "p", c.p);
      read_opt(m, "k", c.k);
    }
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("penalty")) {
      const auto& p = j.at("penalty");
      check_keys(p, "penalty", {"lambda", "beta"});
      read_opt(p, "lambda", c.hyper.lambda);
      read_opt(p, "beta", c.hyper.beta);
    }
    if (j.contains("kf")) {
      const auto& k = j.at("kf");
      check_keys(k, "kf", {"q_sigma", "init_cov"});
      read_opt(k, "q_sigma", c.hyper.q_sigma);
      read_opt(k, "init_cov", c.kf_init_cov);
    }
    if (j.contains("gsope")) {
      const auto& g = j.at("gsope");
      check_keys(g, "gsope", {"burn_in", "jitter_scale"});
      read_opt(g, "burn_in", c.general.burn_in);
      read_opt(g, "jitter_scale", c.general.jitter_scale);
    }
    if (j.contains("freq")) {
      const auto& f = j.at("freq");
      check_keys(f, "freq", {"sampling_hz", "spacing_hz", "bands", "partial_scale"});
      read_opt(f, "sampling_hz", c.freq.sampling_hz);
      read_opt(f, "spacing_hz", c.freq.spacing_hz);
      if (f.contains("bands")) {
        c.freq.bands.clear();
        for (const auto& b : f.at("bands")) {
          check_keys(b, "bands", {"name", "lo", "hi"});
          c.freq.bands.push_back({b.at("name").get<std::string>(), b.at("lo").get<double>(), b.at("hi").get<double>()});
        }
      }
      if (f.contains("partial_scale")) c.freq.partial_scale = scale_from(f.at("partial_scale").get<std::string>());
    }
    if (j.contains("events") && !j.at("events").is_null()) {
      const auto& e = j.at("events");
      check_keys(e, "events", {"half_width", "events"});
      EventSpec spec;
      read_opt(e, "half_width", spec.half_width);
      if (e.contains("events")) {
        for (const auto& ev : e.at("events")) {
          check_keys(ev, "events[]", {"label", "t"});
          spec.events.push_back({ev.value("label", std::string()), ev.at("t").get<std::int64_t>()});
        }
      }
      c.events = spec;
    }
    if (j.contains("network")) {
      const auto& n = j.at("network");
      check_keys(n, "network", {"quantiles", "quantile_mode", "measures"});
      read_opt(n, "quantiles", c.network.quantiles);
      if (n.contains("quantile_mode")) c.network.mode = quantile_mode_from_string(n.at("quantile_mode").get<std::string>());
      if (n.contains("measures")) {
        c.network.measures.clear();
        for (const auto& m : n.at("measures")) c.network.measures.push_back(measure_from_string(m.get<std::string>()));
      }
    }
    c.simulation.seed = c.seed;
    if (j.contains("simulation")) c.simulation = sim_from_json(j.at("simulation"), c.seed);
    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      check_keys(b, "bench", {"timing", "sweep", "transfer_entries"});
      if (b.contains("timing")) {
        const auto& t = b.at("timing");
        check_keys(t, "bench.timing", {"methods", "p", "k", "iterations", "warmup_iterations", "kf_memory_budget"});
        if (t.contains("methods")) {
          c.bench.timing.methods.clear();
          for (const auto& m : t.at("methods")) c.bench.timing.methods.push_back(method_from_string(m.get<std::string>()));
        }
        read_opt(t, "p", c.bench.timing.p);
        read_opt(t, "k", c.bench.timing.k);
        read_opt(t, "iterations", c.bench.timing.iterations);
        read_opt(t, "warmup_iterations", c.bench.timing.warmup_iterations);
        read_opt(t, "kf_memory_budget", c.bench.timing.kf_memory_budget);
      }
      if (b.contains("sweep")) {
        const auto& s = b.at("sweep");
        check_keys(s, "bench.sweep", {"design", "replicates", "threads", "lambda", "beta", "q_sigma"});
        read_opt(s, "design", c.bench.sweep.design);
        read_opt(s, "replicates", c.bench.sweep.replicates);
        read_opt(s, "threads", c.bench.sweep.threads);
        read_opt(s, "lambda", c.bench.sweep.lambda);
        read_opt(s, "beta", c.bench.sweep.beta);
        read_opt(s, "q_sigma", c.bench.sweep.q_sigma);
      }
      if (b.contains("transfer_entries")) {
        c.bench.transfer_entries.clear();
        for (const auto& e : b.at("transfer_entries")) {
          check_keys(e, "transfer_entries", {"row", "col", "lag"});
          c.bench.transfer_entries.push_back({e.at("row").get<int>(), e.at("col").get<int>(), e.value("lag", 1)});
        }
      }
    }
    if (j.contains("io")) {
      const auto& io = j.at("io");
      check_keys(io, "io", {"input", "output", "coefficients", "dump"});
      read_opt(io, "input", c.io.input);
      read_opt(io, "output", c.io.output);
      read_opt(io, "coefficients", c.io.coefficients);
      read_opt(io, "dump", c.io.dump);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

std::vector<BandSpec> parse_bands(const std::string& text) {
  std::vector<BandSpec> out;
  for (auto item : split_on(text, ',')) {
    const auto colon = item.find(':');
    const auto range = colon == std::string_view::npos ? item : item.substr(colon + 1);
    const auto dash = range.find('-');
    if (dash == std::string_view::npos) throw InputError("band '" + std::string(item) + "' is not name:lo-hi");
    BandSpec b;
    b.lo = parse_number(range.substr(0, dash), "--bands");
    b.hi = parse_number(range.substr(dash + 1), "--bands");
    b.name = colon == std::string_view::npos ? std::string(range) : std::string(item.substr(0, colon));
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Event> parse_events(const std::string& text) {
  std::vector<Event> out;
  for (auto item : split_on(text, ',')) {
    const auto at = item.find('@');
    Event e;
    const auto tpart = at == std::string_view::npos ? item : item.substr(at + 1);
    const double t = parse_number(tpart, "--events");
    e.t = static_cast<std::int64_t>(t);
    if (static_cast<double>(e.t) != t) throw InputError("event time '" + std::string(tpart) + "' is not an integer");
    e.label = at == std::string_view::npos ? "event" + std::to_string(out.size()) : std::string(item.substr(0, at));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace tvvar
