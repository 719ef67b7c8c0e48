#include "tvvar/network.hpp"

#include <algorithm>
#include <cmath>

namespace tvvar {

std::string to_string(QuantileMode m) { return m == QuantileMode::epoch ? "epoch" : "pre_event"; }

QuantileMode quantile_mode_from_string(const std::string& name) {
  if (name == "epoch") return QuantileMode::epoch;
  if (name == "pre_event" || name == "pre-event") return QuantileMode::pre_event;
  throw InputError("unknown quantile mode: " + name);
}

std::string to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::absent:
      return "absent";
    case EdgeClass::persistent:
      return "persistent";
    case EdgeClass::lost:
      return "lost";
    case EdgeClass::gained:
      return "gained";
  }
  return "absent";
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile: empty sample");
  if (!(q > 0.0 && q < 1.0)) throw InputError("quantile: q must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Matrix epoch_quantiles(std::span<const Matrix> series, double q) {
  if (series.empty()) throw InputError("epoch_quantiles: empty series");
  const auto rows = series.front().rows();
  const auto cols = series.front().cols();
  Matrix out(rows, cols);
  std::vector<double> values(series.size());
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (std::size_t n = 0; n < series.size(); ++n) values[n] = series[n](i, j);
      out(i, j) = quantile_linear(values, q);
    }
  }
  return out;
}

Matrix epoch_quantiles(std::span<const ConnectivityFrame> series, Measure measure, double q) {
  std::vector<Matrix> values;
  values.reserve(series.size());
  for (const auto& f : series) values.push_back(f.measure(measure));
  return epoch_quantiles(values, q);
}

namespace {

WindowMean mean_over(std::span<const Matrix> series, std::span<const std::int64_t> times, std::int64_t lo,
                     std::int64_t hi) {
  WindowMean w;
  w.mean = Matrix::Zero(series.front().rows(), series.front().cols());
  // Running mean: a constant window averages to exactly that constant, so ties stay ties.
  for (std::size_t n = 0; n < series.size(); ++n) {
    if (times[n] >= lo && times[n] < hi) {
      ++w.count;
      w.mean += (series[n] - w.mean) / static_cast<double>(w.count);
    }
  }
  if (w.count == 0) throw InputError("window_means: empty window");
  w.truncated = lo < times.front() || hi - 1 > times.back();
  return w;
}

}  // namespace

WindowMeans window_means(std::span<const Matrix> series, std::span<const std::int64_t> times, std::int64_t center,
                         std::int64_t half_width) {
  if (series.empty() || series.size() != times.size()) throw InputError("window_means: series/times mismatch");
  if (half_width < 1) throw InputError("window_means: half width must be >= 1");
  return {mean_over(series, times, center - half_width, center), mean_over(series, times, center, center + half_width)};
}

EdgeClass classify_edge(double before, double after, double threshold) {
  const bool was = before > threshold;
  const bool is = after > threshold;
  if (was && is) return EdgeClass::persistent;
  if (was) return EdgeClass::lost;
  if (is) return EdgeClass::gained;
  return EdgeClass::absent;
}

std::size_t NetworkDelta::count(EdgeClass c) const { return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c)); }

NetworkDelta network_delta(const Matrix& before, const Matrix& after, const Matrix& thresholds) {
  if (before.rows() != before.cols() || after.rows() != before.rows() || after.cols() != before.cols() ||
      thresholds.rows() != before.rows() || thresholds.cols() != before.cols()) {
    throw InputError("network_delta: dimension mismatch");
  }
  NetworkDelta d;
  d.p = static_cast<int>(before.rows());
  d.classes.assign(static_cast<std::size_t>(d.p * d.p), EdgeClass::absent);
  for (int i = 0; i < d.p; ++i) {
    for (int j = 0; j < d.p; ++j) {
      if (i == j) continue;
      d.classes[static_cast<std::size_t>(i * d.p + j)] = classify_edge(before(i, j), after(i, j), thresholds(i, j));
    }
  }
  return d;
}

std::vector<EventNetwork> event_networks(std::span<const ConnectivityFrame> series, const EventSpec& events,
                                         const NetworkOptions& options) {
  if (series.empty()) throw InputError("event_networks: empty connectivity series");
  std::vector<Matrix> values;
  std::vector<std::int64_t> times;
  values.reserve(series.size());
  times.reserve(series.size());
  for (const auto& f : series) {
    if (!times.empty() && f.t <= times.back()) throw InputError("event_networks: frames must be ascending in t");
    values.push_back(f.measure(options.measure));
    times.push_back(f.t);
  }
  const std::string band = series.front().band.name;

  std::vector<EventNetwork> out;
  for (const auto& ev : events.events) {
    const WindowMeans windows = window_means(values, times, ev.t, events.half_width);
    std::span<const Matrix> pool(values);
    if (options.mode == QuantileMode::pre_event) {
      const auto end = std::lower_bound(times.begin(), times.end(), ev.t) - times.begin();
      if (end == 0) throw InputError("event_networks: no frames before event '" + ev.label + "'");
      pool = pool.first(static_cast<std::size_t>(end));
    }
    for (double q : options.quantiles) {
      EventNetwork net;
      net.event = ev;
      net.thresholds = epoch_quantiles(pool, q);
      net.windows = windows;
      net.delta = network_delta(windows.before.mean, windows.after.mean, net.thresholds);
      net.delta.threshold_quantile = q;
      net.delta.measure = to_string(options.measure);
      net.delta.band = band;
      net.delta.directed = is_directed(options.measure);
      out.push_back(std::move(net));
    }
  }
  return out;
}

}  // namespace tvvar
