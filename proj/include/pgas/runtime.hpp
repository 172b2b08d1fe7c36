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
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pgas/config.hpp"
#include "pgas/memory.hpp"
#include "pgas/rma.hpp"
#include "pgas/topology.hpp"
#include "pgas/transport.hpp"

namespace pgas {

namespace progress {
class Agent;
}

class Runtime;

// Reusable meeting point for a fixed set of parties. The last party to
// arrive runs `on_last` before anyone is released.
class Rendezvous {
 public:
  explicit Rendezvous(std::size_t parties) : parties_(parties) {}

  void arrive(std::chrono::milliseconds timeout, std::string_view what,
              const std::function<void()>& on_last = {});

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t parties_;
  std::size_t arrived_ = 0;
  std::uint64_t generation_ = 0;
  std::exception_ptr failure_;
};

// Shared state of a team: its rendezvous plus a scratch slot the last
// arriver of a collective uses to publish the result.
struct TeamState {
  explicit TeamState(Team t) : team(std::move(t)), sync(team.size()) {}

  Team team;
  Rendezvous sync;
  std::uint32_t segid = 0;
  std::string failure;
};

// Execution context of one application unit.
class Unit {
 public:
  Unit(Runtime& runtime, const UnitId& id) : runtime_(runtime), id_(id) {}
  Unit(const Unit&) = delete;
  Unit& operator=(const Unit&) = delete;

  const UnitId& id() const { return id_; }
  Rank rank() const { return id_.rank; }
  Runtime& runtime() { return runtime_; }
  OriginState& origin_state() { return state_; }
  const OriginState& origin_state() const { return state_; }

 private:
  Runtime& runtime_;
  UnitId id_;
  OriginState state_;
};

// The simulated machine: nodes of application units plus hidden progress
// agents, all sharing one address space. Application code runs SPMD-style
// through run(); agents run their probe loop on their own threads.
class Runtime {
 public:
  static std::unique_ptr<Runtime> init(const Config& config);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const Config& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  Memory& memory() { return memory_; }
  Transport& transport() { return transport_; }

  // Runs `body` on every application unit concurrently and waits for all.
  // The first exception (lowest rank) is rethrown.
  void run(const std::function<void(Unit&)>& body);

  Unit& unit(Rank rank);
  progress::Agent& agent(Rank rank);
  const UnitId& agent_for(const UnitId& origin, std::uint64_t op_index = 0) const {
    return topology_.agent_for(origin, op_index);
  }

  const Team& team_all() const;
  // Registers a team over application units. Agents are rejected.
  Team create_team(const std::vector<Rank>& ranks);
  TeamState& team_state(std::uint32_t index);
  void barrier(Unit& self, const Team& team);

  // Starts agent threads when the config deferred it.
  void start_agents();
  // Requires every handle to have been waited on; throws LeakError naming
  // the leaked handles otherwise (the runtime stays up).
  void finalize();
  bool finalized() const { return finalized_; }
  std::vector<std::string> outstanding_handles() const;

 private:
  explicit Runtime(const Config& config);

  void worker_main(Rank rank);
  void dispatch(const std::function<void(Unit&)>& body);
  void exit_protocol(Unit& self);
  void shutdown();

  Config config_;
  Topology topology_;
  Memory memory_;
  Transport transport_;

  std::vector<std::unique_ptr<Unit>> units_;  // indexed by rank, null for agents
  std::vector<std::unique_ptr<progress::Agent>> agents_;
  std::vector<std::thread> agent_threads_;
  std::vector<std::thread> workers_;

  std::mutex job_mu_;
  std::condition_variable job_cv_;
  std::condition_variable done_cv_;
  std::function<void(Unit&)> job_;
  std::uint64_t job_generation_ = 0;
  std::size_t job_remaining_ = 0;
  bool workers_quit_ = false;
  std::vector<std::exception_ptr> job_errors_;

  mutable std::mutex teams_mu_;
  std::vector<std::unique_ptr<TeamState>> teams_;

  bool agents_started_ = false;
  bool finalized_ = false;
};

}  // namespace pgas
