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

// bench: availability and heat3d experiments on the simulated runtime.
#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pgas/bench/availability.hpp"
#include "pgas/bench/csv.hpp"
#include "pgas/bench/heat3d.hpp"
#include "pgas/bench/work.hpp"
#include "pgas/error.hpp"

using namespace pgas;
using namespace pgas::bench;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "1K..1M" expands to powers of two; otherwise a comma list.
std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = parse_bytes(text.substr(0, dots));
    const auto hi = parse_bytes(text.substr(dots + 2));
    if (lo == 0 || lo > hi) throw ConfigError("bad size range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; s *= 2) out.push_back(s);
    return out;
  }
  for (const auto& item : split_list(text)) out.push_back(parse_bytes(item));
  if (out.empty()) throw ConfigError("no message sizes given");
  return out;
}

struct NetFlags {
  std::string config_file;
  std::size_t nodes = 2;
  std::size_t agents_per_node = 1;
  std::size_t threshold = 4096;
  double latency_us = 100;
  double bandwidth_gbps = 8;
  double dilation = 1.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file; flags given explicitly win");
    app->add_option("--nodes", nodes, "simulated nodes");
    app->add_option("--agents-per-node", agents_per_node, "progress agents per node");
    app->add_option("--threshold", threshold, "agent routing threshold in bytes");
    app->add_option("--net-latency-us", latency_us, "modeled inter-node latency");
    app->add_option("--net-bandwidth-gbps", bandwidth_gbps, "modeled inter-node bandwidth");
    app->add_option("--time-dilation", dilation, "scale factor on modeled delays");
    app->add_option("--seed", seed, "seed");
  }

  Config build(CLI::App* app) const {
    Config c = config_file.empty() ? Config{} : load_config(config_file);
    auto given = [&](const char* flag) { return config_file.empty() || app->count(flag) > 0; };
    if (given("--nodes")) c.nodes = nodes;
    if (given("--agents-per-node")) c.agents_per_node = agents_per_node;
    if (given("--threshold")) c.threshold_bytes = threshold;
    if (given("--net-latency-us"))
      c.net_latency = std::chrono::nanoseconds(static_cast<std::int64_t>(latency_us * 1000.0));
    if (given("--net-bandwidth-gbps"))
      c.net_bandwidth = static_cast<std::uint64_t>(bandwidth_gbps * 1e9 / 8.0);
    if (given("--time-dilation")) c.time_dilation = dilation;
    if (given("--seed")) c.seed = seed;
    c.transcript = false;
    return c;
  }
};

std::ostream* open_csv(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path);
  if (!file) throw BenchmarkError("cannot write " + path);
  return &file;
}

int run_avail(CLI::App* app, const NetFlags& net, std::size_t units_per_node,
              const std::string& sizes, const std::string& modes, const std::string& localities,
              std::size_t reps, const std::string& csv) {
  Config base = net.build(app);
  if (net.config_file.empty() || app->count("--units-per-node")) base.units_per_node = units_per_node;
  base.validate();

  std::vector<ProgressMode> mode_list;
  for (const auto& m : split_list(modes)) mode_list.push_back(parse_mode(m));
  std::vector<Locality> loc_list;
  for (const auto& l : split_list(localities)) loc_list.push_back(parse_locality(l));
  AvailabilityOptions opts;
  opts.reps = reps;

  const WorkLoop work = WorkLoop::calibrate();
  std::vector<std::string> meta;
  {
    std::ostringstream os;
    os << "work_loop steps_per_iter=" << work.steps_per_iter() << " ns_per_iter=" << work.ns_per_iter();
    meta.push_back(os.str());
  }
  std::vector<BenchSample> samples;
  for (const auto& run : sweep_availability(base, work, parse_sizes(sizes), mode_list, loc_list, opts)) {
    samples.push_back(run.sample);
    std::ostringstream os;
    os << "metrics msg_size=" << run.sample.msg_size << " mode=" << to_string(run.sample.mode)
       << " locality=" << to_string(run.sample.locality);
    meta.push_back(os.str());
    for (std::size_t i = 0; i < run.agent_metrics.size(); ++i)
      meta.push_back(metrics_line(static_cast<Rank>(i), run.agent_metrics[i]).substr(2));
  }
  std::ofstream file;
  write_availability_csv(*open_csv(csv, file), samples, meta);
  return 0;
}

int run_heat(CLI::App* app, const NetFlags& net, const std::string& grid, std::size_t units,
             std::size_t iters, const std::string& modes, std::size_t reps, const std::string& csv) {
  Config base = net.build(app);
  if (units == 0 || units % base.nodes != 0)
    throw ConfigError("--units must be a positive multiple of --nodes");
  base.units_per_node = units / base.nodes + base.agents_per_node;
  base.validate();

  HeatConfig hc;
  hc.grid = parse_grid(grid);
  hc.iterations = iters;
  hc.decomposition = choose_decomposition(units, hc.grid);

  std::vector<HeatRow> rows;
  for (const auto& m : split_list(modes)) {
    const ProgressMode mode = parse_mode(m);
    std::vector<HeatResult> runs;
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) runs.push_back(heat3d(base, hc, mode));
    std::nth_element(runs.begin(), runs.begin() + runs.size() / 2, runs.end(),
                     [](const HeatResult& a, const HeatResult& b) { return a.total_t_ms < b.total_t_ms; });
    const HeatResult& med = runs[runs.size() / 2];
    rows.push_back({hc.grid, units, mode, iters, med.total_t_ms, med.comm_t_ms, med.calc_fraction,
                    med.checksum});
  }
  std::ofstream file;
  write_heat_csv(*open_csv(csv, file), rows,
                 {"decomposition " + grid_string(hc.decomposition) + " nodes " +
                  std::to_string(base.nodes) + " reps " + std::to_string(reps)});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlap benchmarks for the simulated PGAS runtime"};
  app.require_subcommand(1);

  NetFlags avail_net;
  std::size_t units_per_node = 4;
  std::string sizes = "1K..1M", avail_modes = "agent,deferred,eager", localities = "inter",
              avail_csv;
  std::size_t avail_reps = 15;
  auto* avail = app.add_subcommand("avail", "host overhead and application availability sweep");
  avail_net.add(avail);
  avail->add_option("--units-per-node", units_per_node, "units per node, agents included");
  avail->add_option("--sizes", sizes, "size range LO..HI (powers of two) or comma list");
  avail->add_option("--modes", avail_modes, "comma list of agent, deferred, eager");
  avail->add_option("--locality", localities, "inter, intra or both comma separated");
  avail->add_option("--reps", avail_reps, "timed repetitions per trial (median kept)");
  avail->add_option("--csv", avail_csv, "output file, stdout when omitted");

  NetFlags heat_net;
  std::string grid = "32x32x64", heat_modes = "agent", heat_csv;
  std::size_t units = 8, iters = 100, heat_reps = 15;
  auto* heat = app.add_subcommand("heat3d", "3D heat conduction halo-exchange kernel");
  heat_net.add(heat);
  heat->add_option("--grid", grid, "global grid NXxNYxNZ");
  heat->add_option("--units", units, "application units in total");
  heat->add_option("--iters", iters, "time steps");
  heat->add_option("--mode", heat_modes, "progress mode, or a comma list");
  heat->add_option("--reps", heat_reps, "runs per mode (median total time kept)");
  heat->add_option("--csv", heat_csv, "output file, stdout when omitted");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*avail)
      return run_avail(avail, avail_net, units_per_node, sizes, avail_modes, localities, avail_reps,
                       avail_csv);
    return run_heat(heat, heat_net, grid, units, iters, heat_modes, heat_reps, heat_csv);
  } catch (const BenchmarkError& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
}
