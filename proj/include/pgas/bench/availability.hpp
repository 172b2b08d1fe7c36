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

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pgas/bench/work.hpp"
#include "pgas/config.hpp"
#include "pgas/progress.hpp"
#include "pgas/runtime.hpp"

namespace pgas::bench {

enum class Locality { Intra, Inter };

std::string_view to_string(Locality locality);
Locality parse_locality(std::string_view text);

// One host-overhead / availability measurement. Times are microseconds.
struct BenchSample {
  std::size_t msg_size = 0;
  ProgressMode mode = ProgressMode::Agent;
  Locality locality = Locality::Inter;
  std::uint64_t work_iters = 0;
  double iter_t_us = 0;
  double work_t_us = 0;
  double base_t_us = 0;
  double overhead_us = 0;
  double availability = 0;

  friend bool operator==(const BenchSample&, const BenchSample&) = default;
};

// Fills overhead = iter_t - work_t and availability = 1 - overhead / base_t.
BenchSample make_sample(std::size_t msg_size, ProgressMode mode, Locality locality,
                        std::uint64_t work_iters, double iter_t_us, double work_t_us,
                        double base_t_us);

struct AvailabilityOptions {
  std::size_t reps = 15;  // timed repetitions per trial; the median is kept
  std::size_t warmup = 3;
  double stop_ratio = 1.5;
  std::uint64_t max_work_iters = std::uint64_t{1} << 24;
};

// Runs the measurement on an existing runtime (its configured mode). Every
// application unit must enter through Runtime::run; the first unit of node 0
// measures against a peer on node 1 (inter) or on node 0 (intra).
BenchSample measure_availability(Runtime& runtime, const WorkLoop& work, std::size_t msg_size,
                                 Locality locality, const AvailabilityOptions& options = {});

struct AvailabilityRun {
  BenchSample sample;
  std::vector<progress::Metrics> agent_metrics;
};

// Fresh runtime per measurement, built from `base` with `mode` swapped in.
AvailabilityRun measure_availability(const Config& base, const WorkLoop& work,
                                     std::size_t msg_size, ProgressMode mode, Locality locality,
                                     const AvailabilityOptions& options = {});

std::vector<AvailabilityRun> sweep_availability(const Config& base, const WorkLoop& work,
                                                const std::vector<std::size_t>& sizes,
                                                const std::vector<ProgressMode>& modes,
                                                const std::vector<Locality>& localities,
                                                const AvailabilityOptions& options = {});

}  // namespace pgas::bench
