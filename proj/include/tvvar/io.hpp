#pragma once

// CSV ingestion, line-delimited JSON output records and a compact binary matrix dump.

#include "tvvar/bench.hpp"
#include "tvvar/network.hpp"
#include "tvvar/spectral.hpp"
#include "tvvar/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tvvar {

using json = nlohmann::json;

/// Streaming reader: a header line naming P channels, then P numeric fields per line.
/// Samples get t = 0, 1, 2, ... in file order. Errors carry 1-based line numbers.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] int channels() const { return static_cast<int>(header_.size()); }

  /// Next sample, or nullopt at end of input.
  std::optional<Sample> next();

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::int64_t line_ = 1;
  std::int64_t t_ = 0;
};

std::vector<Sample> ingest_csv(std::istream& in);
std::vector<Sample> ingest_csv_file(const std::string& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_csv(std::ostream& out, std::span<const Sample> samples, const std::vector<std::string>& header = {});

/// {"rows": r, "cols": c, "data": [row-major values]}; non-finite values become null.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// One self-describing output line.
struct OutputRecord {
  std::int64_t t = 0;
  std::string kind;  // params | connectivity | network | timing | mse | transfer
  json payload = json::object();
  std::vector<std::string> flags;

  [[nodiscard]] json to_json() const;
  static OutputRecord from_json(const json& j);
};

OutputRecord params_record(std::int64_t t, const ParamMatrix& phi, const std::string& method);
OutputRecord connectivity_record(const ConnectivityFrame& frame);
ConnectivityFrame connectivity_from_record(const OutputRecord& record);
OutputRecord network_record(const EventNetwork& net);
OutputRecord timing_record(const TimingRow& row);
OutputRecord mse_record(const MseRow& row);
OutputRecord transfer_record(const TransferReport& report);

/// Writes one JSON line and flushes.
void write_record(std::ostream& out, const OutputRecord& record);

/// Reads every JSON line of `kind` (all kinds when empty); blank lines are skipped.
std::vector<OutputRecord> read_records(std::istream& in, const std::string& kind = {});

/// Binary matrix dump: "TVVM", u32 version 1, u32 name length, name bytes, u64 rows,
/// u64 cols, then rows*cols little-endian float64 in row-major order.
void write_matrix_dump(std::ostream& out, const std::string& name, const Matrix& m);
std::pair<std::string, Matrix> read_matrix_dump(std::istream& in);

}  // namespace tvvar
