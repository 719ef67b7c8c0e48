#include "tvvar/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace tvvar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail_at(std::int64_t line, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

CsvReader::CsvReader(std::istream& in) : in_(in) {
  std::string line;
  if (!std::getline(in_, line) || trim(line).empty()) fail_at(1, "empty input, expected a header naming the channels");
  for (auto name : split(line)) {
    if (name.empty()) fail_at(1, "empty channel name in header");
    header_.emplace_back(name);
  }
}

std::optional<Sample> CsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header_.size()) {
      fail_at(line_, "expected " + std::to_string(header_.size()) + " fields, got " + std::to_string(fields.size()));
    }
    Sample s;
    s.t = t_++;
    s.values.resize(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = fields[i];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        fail_at(line_, "field " + std::to_string(i + 1) + " is not numeric: '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) fail_at(line_, "field " + std::to_string(i + 1) + " is not finite");
      s.values(static_cast<Eigen::Index>(i)) = v;
    }
    return s;
  }
  return std::nullopt;
}

std::vector<Sample> ingest_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<Sample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

std::vector<Sample> ingest_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return ingest_csv(in);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, std::span<const Sample> samples, const std::vector<std::string>& header) {
  const Eigen::Index p = samples.empty() ? static_cast<Eigen::Index>(header.size()) : samples.front().values.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (i) out << ',';
    out << (header.empty() ? "x" + std::to_string(i + 1) : header[static_cast<std::size_t>(i)]);
  }
  out << '\n';
  for (const auto& s : samples) {
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
      if (i) out << ',';
      out << format_double(s.values(i));
    }
    out << '\n';
  }
}

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (std::isfinite(v)) {
        data.push_back(v);
      } else {
        data.push_back(nullptr);
      }
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InputError("matrix payload length does not match rows*cols");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
      const auto& v = data[static_cast<std::size_t>(i * cols + j2)];
      m(i, j2) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

json OutputRecord::to_json() const {
  json j = {{"t", t}, {"kind", kind}, {"payload", payload}};
  j["flags"] = flags;
  return j;
}

OutputRecord OutputRecord::from_json(const json& j) {
  OutputRecord r;
  r.t = j.at("t").get<std::int64_t>();
  r.kind = j.at("kind").get<std::string>();
  r.payload = j.value("payload", json::object());
  r.flags = j.value("flags", std::vector<std::string>{});
  return r;
}

OutputRecord params_record(std::int64_t t, const ParamMatrix& phi, const std::string& method) {
  OutputRecord r;
  r.t = t;
  r.kind = "params";
  r.payload = {{"method", method}, {"p", phi.p()}, {"k", phi.k()}, {"phi", matrix_to_json(phi.entries())}};
  if (!phi.all_finite()) r.flags.emplace_back("non_finite");
  return r;
}

OutputRecord connectivity_record(const ConnectivityFrame& frame) {
  OutputRecord r;
  r.t = frame.t;
  r.kind = "connectivity";
  r.payload = {{"band", {{"name", frame.band.name}, {"lo", frame.band.lo}, {"hi", frame.band.hi}}},
               {"points", frame.points},
               {"unstable_points", frame.unstable_points},
               {"coherence", matrix_to_json(frame.coherence)},
               {"partial_coherence", matrix_to_json(frame.partial_coherence)},
               {"pdc", matrix_to_json(frame.pdc)}};
  if (frame.unstable()) r.flags.emplace_back("unstable_frame");
  return r;
}

ConnectivityFrame connectivity_from_record(const OutputRecord& record) {
  if (record.kind != "connectivity") throw InputError("expected a connectivity record, got " + record.kind);
  ConnectivityFrame f;
  f.t = record.t;
  const auto& p = record.payload;
  f.band.name = p.at("band").at("name").get<std::string>();
  f.band.lo = p.at("band").at("lo").get<double>();
  f.band.hi = p.at("band").at("hi").get<double>();
  f.points = p.value("points", 0);
  f.unstable_points = p.value("unstable_points", 0);
  f.coherence = matrix_from_json(p.at("coherence"));
  f.partial_coherence = matrix_from_json(p.at("partial_coherence"));
  f.pdc = matrix_from_json(p.at("pdc"));
  return f;
}

OutputRecord network_record(const EventNetwork& net) {
  OutputRecord r;
  r.t = net.event.t;
  r.kind = "network";
  const auto& d = net.delta;
  json classes = json::array();
  json edges = json::array();
  for (int i = 0; i < d.p; ++i) {
    for (int j = 0; j < d.p; ++j) {
      const EdgeClass c = d.at(i, j);
      classes.push_back(to_string(c));
      if (i != j && c != EdgeClass::absent) edges.push_back({{"from", j}, {"to", i}, {"class", to_string(c)}});
    }
  }
  r.payload = {{"event", net.event.label},
               {"quantile", d.threshold_quantile},
               {"measure", d.measure},
               {"band", d.band},
               {"directed", d.directed},
               {"p", d.p},
               {"classes", classes},
               {"edges", edges},
               {"thresholds", matrix_to_json(net.thresholds)},
               {"before", matrix_to_json(net.windows.before.mean)},
               {"after", matrix_to_json(net.windows.after.mean)}};
  if (net.windows.before.truncated || net.windows.after.truncated) r.flags.emplace_back("window_truncated");
  return r;
}

OutputRecord timing_record(const TimingRow& row) {
  OutputRecord r;
  r.kind = "timing";
  r.payload = {{"method", to_string(row.method)},
               {"p", row.p},
               {"k", row.k},
               {"mean_ms", row.mean_ms},
               {"p50_ms", row.p50_ms},
               {"p95_ms", row.p95_ms},
               {"iterations", row.iterations},
               {"warmup_iterations", row.warmup_iterations},
               {"required_bytes", row.required_bytes},
               {"refused", row.refused},
               {"note", row.note}};
  if (row.refused) r.flags.emplace_back("refused_memory_budget");
  return r;
}

OutputRecord mse_record(const MseRow& row) {
  OutputRecord r;
  r.kind = "mse";
  r.payload = {{"method", to_string(row.method)},
               {"lambda", row.hyper.lambda},
               {"beta", row.hyper.beta},
               {"q_sigma", row.hyper.q_sigma},
               {"per_param_mse", row.per_param_mse},
               {"replicates", row.replicates},
               {"sim", row.sim_digest}};
  if (std::isfinite(row.warmup_mse)) r.payload["warmup_mse"] = row.warmup_mse;
  return r;
}

OutputRecord transfer_record(const TransferReport& report) {
  OutputRecord r;
  r.t = static_cast<std::int64_t>(report.first_index);
  r.kind = "transfer";
  json envs = json::array();
  for (const auto& e : report.envelopes) {
    envs.push_back({{"row", e.entry.row},
                    {"col", e.entry.col},
                    {"lag", e.entry.lag},
                    {"coverage", e.coverage},
                    {"truth", e.truth},
                    {"lower", e.lower},
                    {"median", e.median},
                    {"upper", e.upper}});
  }
  r.payload = {{"method", to_string(report.method)},
               {"lambda", report.hyper.lambda},
               {"beta", report.hyper.beta},
               {"q_sigma", report.hyper.q_sigma},
               {"replicates", report.replicates},
               {"per_param_mse", report.per_param_mse},
               {"envelopes", envs}};
  return r;
}

void write_record(std::ostream& out, const OutputRecord& record) {
  out << record.to_json().dump() << '\n';
  out.flush();
}

std::vector<OutputRecord> read_records(std::istream& in, const std::string& kind) {
  std::vector<OutputRecord> out;
  std::string line;
  std::int64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(n, std::string("invalid record: ") + e.what());
    }
    try {
      auto rec = OutputRecord::from_json(j);
      if (kind.empty() || rec.kind == kind) out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      fail_at(n, std::string("malformed record: ") + e.what());
    }
  }
  return out;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InputError("matrix dump: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void write_matrix_dump(std::ostream& out, const std::string& name, const Matrix& m) {
  out.write("TVVM", 4);
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_le<double>(out, m(i, j));
  }
}

std::pair<std::string, Matrix> read_matrix_dump(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "TVVM", 4) != 0) throw InputError("matrix dump: bad magic");
  if (get_le<std::uint32_t>(in) != 1) throw InputError("matrix dump: unsupported version");
  const auto len = get_le<std::uint32_t>(in);
  std::string name(len, '\0');
  if (!in.read(name.data(), len)) throw InputError("matrix dump: truncated name");
  const auto rows = get_le<std::uint64_t>(in);
  const auto cols = get_le<std::uint64_t>(in);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get_le<double>(in);
  }
  return {name, m};
}

}  // namespace tvvar
