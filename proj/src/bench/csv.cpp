/* Copyright 2026 The pgasrt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pgas/bench/csv.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "pgas/error.hpp"

namespace pgas::bench {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_int(const std::string& s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw BenchmarkError("bad integer '" + s + "' in csv");
  return v;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw BenchmarkError("bad number '" + s + "' in csv");
  return v;
}

// Yields data rows after checking the header.
std::vector<std::vector<std::string>> read_rows(std::istream& in, const char* header,
                                                std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) throw BenchmarkError("unexpected csv header '" + line + "'");
      seen_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != columns)
      throw BenchmarkError("csv row has " + std::to_string(cells.size()) + " cells: " + line);
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw BenchmarkError("csv has no header");
  return rows;
}

void write_metadata(std::ostream& out, const std::vector<std::string>& metadata) {
  for (const auto& m : metadata) out << (m.starts_with("#") ? "" : "# ") << m << '\n';
}

}  // namespace

std::string format_row(const BenchSample& s) {
  std::ostringstream os;
  os << s.msg_size << ',' << to_string(s.mode) << ',' << to_string(s.locality) << ','
     << s.work_iters << ',' << fmt(s.iter_t_us) << ',' << fmt(s.work_t_us) << ','
     << fmt(s.base_t_us) << ',' << fmt(s.overhead_us) << ',' << fmt(s.availability);
  return os.str();
}

std::string format_row(const HeatRow& r) {
  std::ostringstream os;
  os << grid_string(r.grid) << ',' << r.units << ',' << to_string(r.mode) << ',' << r.iters << ','
     << fmt(r.total_t_ms) << ',' << fmt(r.comm_t_ms) << ',' << fmt(r.calc_fraction) << ','
     << fmt(r.checksum);
  return os.str();
}

void write_availability_csv(std::ostream& out, const std::vector<BenchSample>& samples,
                            const std::vector<std::string>& metadata) {
  write_metadata(out, metadata);
  out << kAvailabilityHeader << '\n';
  for (const auto& s : samples) out << format_row(s) << '\n';
}

void write_heat_csv(std::ostream& out, const std::vector<HeatRow>& rows,
                    const std::vector<std::string>& metadata) {
  write_metadata(out, metadata);
  out << kHeatHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

std::vector<BenchSample> read_availability_csv(std::istream& in) {
  std::vector<BenchSample> out;
  for (const auto& c : read_rows(in, kAvailabilityHeader, 9)) {
    BenchSample s;
    s.msg_size = parse_int<std::size_t>(c[0]);
    s.mode = parse_mode(c[1]);
    s.locality = parse_locality(c[2]);
    s.work_iters = parse_int<std::uint64_t>(c[3]);
    s.iter_t_us = parse_double(c[4]);
    s.work_t_us = parse_double(c[5]);
    s.base_t_us = parse_double(c[6]);
    s.overhead_us = parse_double(c[7]);
    s.availability = parse_double(c[8]);
    out.push_back(s);
  }
  return out;
}

std::vector<HeatRow> read_heat_csv(std::istream& in) {
  std::vector<HeatRow> out;
  for (const auto& c : read_rows(in, kHeatHeader, 8)) {
    HeatRow r;
    r.grid = parse_grid(c[0]);
    r.units = parse_int<std::size_t>(c[1]);
    r.mode = parse_mode(c[2]);
    r.iters = parse_int<std::size_t>(c[3]);
    r.total_t_ms = parse_double(c[4]);
    r.comm_t_ms = parse_double(c[5]);
    r.calc_fraction = parse_double(c[6]);
    r.checksum = parse_double(c[7]);
    out.push_back(r);
  }
  return out;
}

std::string metrics_line(Rank agent, const progress::Metrics& m) {
  std::ostringstream os;
  os << "# agent " << agent << " requests=" << m.requests << " flushes=" << m.flushes
     << " batches=" << m.batches << " idle_drains=" << m.idle_drains
     << " wait_drains=" << m.wait_drains << " protocol_errors=" << m.protocol_errors
     << " max_queue=" << m.max_queue;
  return os.str();
}

}  // namespace pgas::bench
