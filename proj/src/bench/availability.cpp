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

#include "pgas/bench/availability.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "pgas/error.hpp"
#include "pgas/rma.hpp"

namespace pgas::bench {

std::string_view to_string(Locality locality) {
  return locality == Locality::Intra ? "intra" : "inter";
}

Locality parse_locality(std::string_view text) {
  if (text == "intra") return Locality::Intra;
  if (text == "inter") return Locality::Inter;
  throw ConfigError("unknown locality '" + std::string(text) + "'");
}

BenchSample make_sample(std::size_t msg_size, ProgressMode mode, Locality locality,
                        std::uint64_t work_iters, double iter_t_us, double work_t_us,
                        double base_t_us) {
  BenchSample s;
  s.msg_size = msg_size;
  s.mode = mode;
  s.locality = locality;
  s.work_iters = work_iters;
  s.iter_t_us = iter_t_us;
  s.work_t_us = work_t_us;
  s.base_t_us = base_t_us;
  s.overhead_us = iter_t_us - work_t_us;
  s.availability = 1.0 - s.overhead_us / base_t_us;
  return s;
}

namespace {

template <typename F>
double median_us(std::size_t reps, F&& body) {
  std::vector<double> t(reps);
  for (auto& v : t) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    v = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

}  // namespace

BenchSample measure_availability(Runtime& rt, const WorkLoop& work, std::size_t msg_size,
                                 Locality locality, const AvailabilityOptions& options) {
  if (msg_size == 0) throw BenchmarkError("message size must be positive");
  if (options.reps == 0) throw BenchmarkError("at least one repetition is needed");
  const Topology& topo = rt.topology();
  const Team& all = rt.team_all();
  const Rank origin = all.members.front().rank;
  Rank target = origin;
  if (locality == Locality::Inter) {
    if (topo.nodes() < 2) throw BenchmarkError("inter-node measurement needs at least 2 nodes");
    target = topo.applications_on(1).front().rank;
  } else if (auto apps = topo.applications_on(0); apps.size() > 1) {
    target = apps[1].rank;
  }

  std::optional<BenchSample> sample;
  rt.run([&](Unit& u) {
    // Target bytes at [0, n), the origin's landing buffer at [n, 2n).
    const GlobalPtr mine = team_alloc_aligned(u, all, 2 * msg_size);
    if (u.rank() == origin) {
      const GlobalPtr remote = mine.at(target);
      const Pinned local = rt.memory().pin(mine + msg_size, msg_size);
      auto transfer = [&] {
        Handle h = get_nb(u, remote, local.view, msg_size);
        wait(u, h);
      };
      for (std::size_t i = 0; i < options.warmup; ++i) transfer();
      const double base_t = median_us(options.reps, transfer);

      for (std::uint64_t iters = 1;; iters *= 2) {
        const double work_t = median_us(options.reps, [&] { work.run(iters); });
        const double iter_t = median_us(options.reps, [&] {
          Handle h = get_nb(u, remote, local.view, msg_size);
          work.run(iters);
          wait(u, h);
        });
        if (iter_t > options.stop_ratio * base_t) {
          sample = make_sample(msg_size, rt.config().mode, locality, iters, iter_t, work_t,
                               base_t);
          break;
        }
        if (iters >= options.max_work_iters) break;
      }
    }
    rt.barrier(u, all);
    team_free(u, mine);
  });
  if (!sample)
    throw BenchmarkError("no stop point for " + std::to_string(msg_size) + " B within " +
                         std::to_string(options.max_work_iters) + " work iterations");
  return *sample;
}

AvailabilityRun measure_availability(const Config& base, const WorkLoop& work,
                                     std::size_t msg_size, ProgressMode mode, Locality locality,
                                     const AvailabilityOptions& options) {
  Config cfg = base;
  cfg.mode = mode;
  auto rt = Runtime::init(cfg);
  AvailabilityRun run;
  run.sample = measure_availability(*rt, work, msg_size, locality, options);
  rt->finalize();
  for (const auto& a : rt->topology().agents()) run.agent_metrics.push_back(rt->agent(a.rank).metrics());
  return run;
}

std::vector<AvailabilityRun> sweep_availability(const Config& base, const WorkLoop& work,
                                                const std::vector<std::size_t>& sizes,
                                                const std::vector<ProgressMode>& modes,
                                                const std::vector<Locality>& localities,
                                                const AvailabilityOptions& options) {
  std::vector<AvailabilityRun> out;
  out.reserve(sizes.size() * modes.size() * localities.size());
  for (Locality loc : localities)
    for (ProgressMode mode : modes)
      for (std::size_t size : sizes)
        out.push_back(measure_availability(base, work, size, mode, loc, options));
  return out;
}

}  // namespace pgas::bench
