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

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgas/bench/availability.hpp"
#include "pgas/bench/heat3d.hpp"

namespace pgas::bench {

inline constexpr const char* kAvailabilityHeader =
    "msg_size,mode,locality,work_iters,iter_t_us,work_t_us,base_t_us,overhead_us,availability";
inline constexpr const char* kHeatHeader =
    "grid,units,mode,iters,total_t_ms,comm_t_ms,calc_fraction,checksum";

struct HeatRow {
  std::array<std::size_t, 3> grid{};
  std::size_t units = 0;
  ProgressMode mode = ProgressMode::Agent;
  std::size_t iters = 0;
  double total_t_ms = 0;
  double comm_t_ms = 0;
  double calc_fraction = 0;
  double checksum = 0;

  friend bool operator==(const HeatRow&, const HeatRow&) = default;
};

// Doubles are written with 17 significant digits so rows read back exactly.
std::string format_row(const BenchSample& sample);
std::string format_row(const HeatRow& row);

// Lines starting with '#' carry metadata and are written verbatim.
void write_availability_csv(std::ostream& out, const std::vector<BenchSample>& samples,
                            const std::vector<std::string>& metadata = {});
void write_heat_csv(std::ostream& out, const std::vector<HeatRow>& rows,
                    const std::vector<std::string>& metadata = {});

// Skip '#' lines and blank lines; the header must match exactly.
std::vector<BenchSample> read_availability_csv(std::istream& in);
std::vector<HeatRow> read_heat_csv(std::istream& in);

std::string metrics_line(Rank agent, const progress::Metrics& m);

}  // namespace pgas::bench
