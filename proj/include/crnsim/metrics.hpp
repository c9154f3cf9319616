#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "crnsim/config.hpp"
#include "crnsim/types.hpp"

namespace crnsim {

struct MetricsRecord {
  int step = 0;
  double mean_sir_pu_db = 0.0;
  double mean_sir_su_db = 0.0;
  double mean_power_pu_w = 0.0;
  double mean_power_su_w = 0.0;
  double mean_abs_bellman_error = 0.0;
  double mean_terminal_error_norm = 0.0;
  double spectrum_efficiency = 0.0;
  double cumulative_cost = 0.0;
  int saturation_count = 0;
};

inline constexpr const char* kMetricsCsvHeader =
    "step,mean_sir_pu_db,mean_sir_su_db,mean_power_pu_w,mean_power_su_w,"
    "mean_abs_bellman_error,mean_terminal_error_norm,spectrum_efficiency,"
    "cumulative_cost,saturation_count";

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_metrics_csv(const std::vector<MetricsRecord>& trace, std::ostream& out) {
  out << kMetricsCsvHeader << '\n';
  for (const MetricsRecord& r : trace) {
    out << r.step << ',' << format_double(r.mean_sir_pu_db) << ','
        << format_double(r.mean_sir_su_db) << ',' << format_double(r.mean_power_pu_w) << ','
        << format_double(r.mean_power_su_w) << ',' << format_double(r.mean_abs_bellman_error)
        << ',' << format_double(r.mean_terminal_error_norm) << ','
        << format_double(r.spectrum_efficiency) << ',' << format_double(r.cumulative_cost)
        << ',' << r.saturation_count << '\n';
  }
}

// JSON has no literal for non-finite values; they become null.
inline void append_json_number(std::string& out, double v) {
  if (std::isfinite(v))
    out += format_double(v);
  else
    out += "null";
}

inline void write_metrics_jsonl(const std::vector<MetricsRecord>& trace, std::ostream& out) {
  for (const MetricsRecord& r : trace) {
    std::string line = "{\"step\":" + std::to_string(r.step);
    line += ",\"mean_sir_pu_db\":";
    append_json_number(line, r.mean_sir_pu_db);
    line += ",\"mean_sir_su_db\":";
    append_json_number(line, r.mean_sir_su_db);
    line += ",\"mean_power_pu_w\":";
    append_json_number(line, r.mean_power_pu_w);
    line += ",\"mean_power_su_w\":";
    append_json_number(line, r.mean_power_su_w);
    line += ",\"mean_abs_bellman_error\":";
    append_json_number(line, r.mean_abs_bellman_error);
    line += ",\"mean_terminal_error_norm\":";
    append_json_number(line, r.mean_terminal_error_norm);
    line += ",\"spectrum_efficiency\":";
    append_json_number(line, r.spectrum_efficiency);
    line += ",\"cumulative_cost\":";
    append_json_number(line, r.cumulative_cost);
    line += ",\"saturation_count\":" + std::to_string(r.saturation_count) + "}";
    out << line << '\n';
  }
}

inline void emit_metrics(const std::vector<MetricsRecord>& trace, const std::string& path,
                         TraceFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  if (format == TraceFormat::Csv)
    write_metrics_csv(trace, out);
  else
    write_metrics_jsonl(trace, out);
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

namespace detail {
inline double parse_field_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("metrics CSV: malformed number '" + s + "'");
  return v;
}
}  // namespace detail

// Inverse of write_metrics_csv; round-trips exactly thanks to the shortest
// round-trip float formatting.
inline std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("metrics CSV: missing header");
  if (line != kMetricsCsvHeader) throw IoError("metrics CSV: unexpected header");
  std::vector<MetricsRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 10) throw IoError("metrics CSV: expected 10 fields");
    MetricsRecord r;
    r.step = std::stoi(fields[0]);
    r.mean_sir_pu_db = detail::parse_field_double(fields[1]);
    r.mean_sir_su_db = detail::parse_field_double(fields[2]);
    r.mean_power_pu_w = detail::parse_field_double(fields[3]);
    r.mean_power_su_w = detail::parse_field_double(fields[4]);
    r.mean_abs_bellman_error = detail::parse_field_double(fields[5]);
    r.mean_terminal_error_norm = detail::parse_field_double(fields[6]);
    r.spectrum_efficiency = detail::parse_field_double(fields[7]);
    r.cumulative_cost = detail::parse_field_double(fields[8]);
    r.saturation_count = std::stoi(fields[9]);
    trace.push_back(r);
  }
  return trace;
}

}  // namespace crnsim
