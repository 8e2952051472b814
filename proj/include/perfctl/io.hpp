#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfctl/types.hpp"

namespace perfctl {

//! Locale-independent shortest-faithful formatting with 17 significant
//! digits; round-trips through parse_number exactly.
std::string format_number(Scalar value);
Scalar parse_number(const std::string& text);

//! Trace rows in the fixed column order n, ps_error, expected_cost,
//! cost_std_error; a missing ps_error serializes as an empty field.
struct TraceRow {
  long n = 0;
  std::optional<Scalar> ps_error;
  Scalar expected_cost = 0.0;
  Scalar cost_std_error = 0.0;
};

std::string write_trace_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> parse_trace_csv(const std::string& text);

//! Generic RFC-4180 CSV with LF line endings.
std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

//! Deterministic key=value lines (insertion order preserved).
class KeyValueWriter {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, Scalar value);
  void add(const std::string& key, long value);
  void add(const std::string& key, bool value);
  void add_schedule(const std::string& key, const std::vector<Scalar>& values);
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t value);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace perfctl
