#include "perfctl/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace perfctl {

std::string format_number(Scalar value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

Scalar parse_number(const std::string& text) {
  Scalar value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("bad number: '" + text + "'");
  return value;
}

namespace {

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += quote(header[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += quote(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else if (c != '\r') {
      field += c;
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string write_trace_csv(const std::vector<TraceRow>& rows) {
  std::vector<std::vector<std::string>> data;
  data.reserve(rows.size());
  for (const auto& r : rows) {
    data.push_back({std::to_string(r.n),
                    r.ps_error.has_value() ? format_number(*r.ps_error) : std::string(),
                    format_number(r.expected_cost), format_number(r.cost_std_error)});
  }
  return write_csv({"n", "ps_error", "expected_cost", "cost_std_error"}, data);
}

std::vector<TraceRow> parse_trace_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw std::invalid_argument("empty trace csv");
  const std::vector<std::string> expected = {"n", "ps_error", "expected_cost",
                                             "cost_std_error"};
  if (rows[0] != std::vector<std::string>(expected))
    throw std::invalid_argument("unexpected trace header");
  std::vector<TraceRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4) throw std::invalid_argument("bad trace row");
    TraceRow r;
    r.n = std::stol(rows[i][0]);
    if (!rows[i][1].empty()) r.ps_error = parse_number(rows[i][1]);
    r.expected_cost = parse_number(rows[i][2]);
    r.cost_std_error = parse_number(rows[i][3]);
    out.push_back(r);
  }
  return out;
}

void KeyValueWriter::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void KeyValueWriter::add(const std::string& key, Scalar value) {
  entries_.emplace_back(key, format_number(value));
}
void KeyValueWriter::add(const std::string& key, long value) {
  entries_.emplace_back(key, std::to_string(value));
}
void KeyValueWriter::add(const std::string& key, bool value) {
  entries_.emplace_back(key, value ? "true" : "false");
}
void KeyValueWriter::add_schedule(const std::string& key, const std::vector<Scalar>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ' ';
    joined += format_number(values[i]);
  }
  entries_.emplace_back(key, joined);
}
std::string KeyValueWriter::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace perfctl
