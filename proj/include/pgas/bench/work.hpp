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

#include <chrono>
#include <cstdint>

namespace pgas::bench {

// Arithmetic spin loop standing in for application work. One "iteration"
// is a fixed number of dependent floating-point steps, calibrated once so
// an iteration costs roughly `target`.
class WorkLoop {
 public:
  static WorkLoop calibrate(std::chrono::nanoseconds target = std::chrono::microseconds(1));
  explicit WorkLoop(std::uint64_t steps_per_iter) : steps_(steps_per_iter) {}

  void run(std::uint64_t iters) const;
  std::uint64_t steps_per_iter() const { return steps_; }
  // Measured at calibration; 0 for hand-built loops.
  double ns_per_iter() const { return ns_per_iter_; }

 private:
  std::uint64_t steps_;
  double ns_per_iter_ = 0;
};

}  // namespace pgas::bench
