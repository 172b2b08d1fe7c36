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

#include "pgas/bench/work.hpp"

#include <algorithm>
#include <cmath>

namespace pgas::bench {

namespace {

volatile double sink;

double spin(std::uint64_t steps) {
  double x = 1.0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    x = x * 0.9999999 + 1e-7;
    asm volatile("" : "+x"(x));  // keeps the chain from being folded
  }
  return x;
}

double time_steps(std::uint64_t steps) {
  const auto t0 = std::chrono::steady_clock::now();
  sink = spin(steps);
  return std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

WorkLoop WorkLoop::calibrate(std::chrono::nanoseconds target) {
  constexpr std::uint64_t probe = 1u << 20;
  double best = time_steps(probe);
  for (int i = 0; i < 7; ++i) best = std::min(best, time_steps(probe));
  const double ns_per_step = best / static_cast<double>(probe);
  const auto steps = static_cast<std::uint64_t>(
      std::max(1.0, std::round(static_cast<double>(target.count()) / ns_per_step)));

  WorkLoop loop(steps);
  constexpr std::uint64_t check = 2000;
  double per_iter = time_steps(steps * check);
  for (int i = 0; i < 4; ++i) per_iter = std::min(per_iter, time_steps(steps * check));
  loop.ns_per_iter_ = per_iter / static_cast<double>(check);
  return loop;
}

void WorkLoop::run(std::uint64_t iters) const { sink = spin(iters * steps_); }

}  // namespace pgas::bench
