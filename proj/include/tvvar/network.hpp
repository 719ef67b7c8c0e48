#pragma once

// Quantile-thresholded connectivity graphs and their change across an event: the mean
// connectivity just before and just after each event is compared against per-pair
// empirical quantiles of the measure.

#include "tvvar/spectral.hpp"
#include "tvvar/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tvvar {

struct Event {
  std::string label;
  std::int64_t t = 0;
};

struct EventSpec {
  std::vector<Event> events;
  std::int64_t half_width = 250;  // samples; 250 ms at 1 kHz
};

enum class QuantileMode {
  epoch,      // every frame in the series
  pre_event,  // frames strictly before the event
};
std::string to_string(QuantileMode m);
QuantileMode quantile_mode_from_string(const std::string& name);

/// Linear interpolation between order statistics (h = (n-1) q).
double quantile_linear(std::vector<double> values, double q);

/// Per-pair q-quantile of one measure over a series of frames.
Matrix epoch_quantiles(std::span<const Matrix> series, double q);
Matrix epoch_quantiles(std::span<const ConnectivityFrame> series, Measure measure, double q);

struct WindowMean {
  Matrix mean;
  std::size_t count = 0;
  bool truncated = false;  // the requested window reached past the series
};

struct WindowMeans {
  WindowMean before;  // t in [center - half_width, center)
  WindowMean after;   // t in [center, center + half_width)
};

/// `times[i]` is the time index of `series[i]`; both ascending and of equal length.
WindowMeans window_means(std::span<const Matrix> series, std::span<const std::int64_t> times, std::int64_t center,
                         std::int64_t half_width);

enum class EdgeClass { absent, persistent, lost, gained };
std::string to_string(EdgeClass c);

/// Ties at the threshold count as not exceeding it.
EdgeClass classify_edge(double before, double after, double threshold);

struct NetworkDelta {
  int p = 0;
  std::vector<EdgeClass> classes;  // row-major p x p; diagonal is always absent
  double threshold_quantile = 0.75;
  std::string measure;
  std::string band;
  bool directed = false;

  [[nodiscard]] EdgeClass at(int i, int j) const { return classes[static_cast<std::size_t>(i * p + j)]; }
  [[nodiscard]] std::size_t count(EdgeClass c) const;
};

NetworkDelta network_delta(const Matrix& before, const Matrix& after, const Matrix& thresholds);

struct EventNetwork {
  Event event;
  NetworkDelta delta;
  Matrix thresholds;
  WindowMeans windows;
};

struct NetworkOptions {
  std::vector<double> quantiles{0.5, 0.75, 0.9};
  QuantileMode mode = QuantileMode::epoch;
  Measure measure = Measure::coherence;
};

/// Classifies every event at every requested quantile. `series` must be ascending in t.
std::vector<EventNetwork> event_networks(std::span<const ConnectivityFrame> series, const EventSpec& events,
                                         const NetworkOptions& options);

}  // namespace tvvar
