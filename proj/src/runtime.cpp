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

#include "pgas/runtime.hpp"

#include <algorithm>
#include <fstream>
#include <system_error>

#include "pgas/error.hpp"
#include "pgas/progress.hpp"

namespace pgas {

void Rendezvous::arrive(std::chrono::milliseconds timeout, std::string_view what,
                        const std::function<void()>& on_last) {
  std::unique_lock lock(mu_);
  const std::uint64_t gen = generation_;
  if (++arrived_ == parties_) {
    failure_ = nullptr;
    if (on_last) {
      try {
        on_last();
      } catch (...) {
        failure_ = std::current_exception();
      }
    }
    arrived_ = 0;
    ++generation_;
    cv_.notify_all();
    if (failure_) std::rethrow_exception(failure_);
    return;
  }
  if (!cv_.wait_for(lock, timeout, [&] { return generation_ != gen; })) {
    const std::size_t present = arrived_;
    --arrived_;
    throw TimeoutError(std::string(what) + " timed out after " + std::to_string(timeout.count()) +
                       " ms: " + std::to_string(present) + " of " + std::to_string(parties_) +
                       " members arrived");
  }
  if (failure_) std::rethrow_exception(failure_);
}

Runtime::Runtime(const Config& config)
    : config_(config),
      topology_(config),
      memory_(topology_, config.region_bytes),
      transport_(topology_, memory_, config) {}

std::unique_ptr<Runtime> Runtime::init(const Config& config) {
  config.validate();
  std::unique_ptr<Runtime> rt(new Runtime(config));
  const auto& topo = rt->topology_;

  rt->units_.resize(topo.size());
  for (const auto& u : topo.units()) {
    if (u.is_agent())
      rt->agents_.push_back(
          std::make_unique<progress::Agent>(u, topo, rt->memory_, rt->transport_, rt->config_));
    else
      rt->units_[u.rank] = std::make_unique<Unit>(*rt, u);
  }
  rt->teams_.push_back(std::make_unique<TeamState>(topo.team_all()));
  rt->job_errors_.resize(topo.size());

  for (const auto& u : topo.units()) {
    if (u.is_agent()) continue;
    try {
      rt->workers_.emplace_back([r = rt.get(), rank = u.rank] { r->worker_main(rank); });
    } catch (const std::system_error& e) {
      {
        std::lock_guard lock(rt->job_mu_);
        rt->workers_quit_ = true;
      }
      rt->job_cv_.notify_all();
      for (auto& w : rt->workers_) w.join();
      rt->finalized_ = true;
      throw StartupError("could not start " + describe(u) + ": " + e.what());
    }
  }
  if (config.autostart_agents) rt->start_agents();
  return rt;
}

Runtime::~Runtime() {
  if (finalized_) return;
  try {
    shutdown();
  } catch (...) {
  }
}

void Runtime::start_agents() {
  if (agents_started_) return;
  agents_started_ = true;
  for (auto& agent : agents_) {
    try {
      agent_threads_.emplace_back([a = agent.get()] { a->run(); });
    } catch (const std::system_error& e) {
      throw StartupError("could not start " + describe(agent->id()) + ": " + e.what());
    }
  }
}

void Runtime::worker_main(Rank rank) {
  tune_timer_slack();
  std::uint64_t seen = 0;
  for (;;) {
    std::function<void(Unit&)> job;
    {
      std::unique_lock lock(job_mu_);
      job_cv_.wait(lock, [&] { return workers_quit_ || job_generation_ != seen; });
      if (job_generation_ == seen) return;
      seen = job_generation_;
      job = job_;
    }
    std::exception_ptr error;
    try {
      job(*units_[rank]);
    } catch (...) {
      error = std::current_exception();
    }
    std::lock_guard lock(job_mu_);
    job_errors_[rank] = error;
    if (--job_remaining_ == 0) done_cv_.notify_all();
  }
}

void Runtime::dispatch(const std::function<void(Unit&)>& body) {
  std::unique_lock lock(job_mu_);
  job_ = body;
  job_remaining_ = workers_.size();
  std::fill(job_errors_.begin(), job_errors_.end(), nullptr);
  ++job_generation_;
  job_cv_.notify_all();
  done_cv_.wait(lock, [&] { return job_remaining_ == 0; });
  job_ = nullptr;
  for (auto& e : job_errors_)
    if (e) std::rethrow_exception(e);
}

void Runtime::run(const std::function<void(Unit&)>& body) {
  if (finalized_) throw UsageError("run after finalize");
  dispatch(body);
}

Unit& Runtime::unit(Rank rank) {
  if (rank >= units_.size() || !units_[rank])
    throw UsageError("rank " + std::to_string(rank) + " is not an application unit");
  return *units_[rank];
}

progress::Agent& Runtime::agent(Rank rank) {
  for (auto& a : agents_)
    if (a->id().rank == rank) return *a;
  throw UsageError("rank " + std::to_string(rank) + " is not an agent");
}

const Team& Runtime::team_all() const {
  std::lock_guard lock(teams_mu_);
  return teams_.front()->team;
}

Team Runtime::create_team(const std::vector<Rank>& ranks) {
  Team team;
  for (Rank r : ranks) {
    const UnitId& u = topology_.unit(r);
    if (u.is_agent()) throw UsageError(describe(u) + " cannot be a team member");
    if (!team.contains(r)) team.members.push_back(u);
  }
  if (team.members.empty()) throw ArgumentError("create_team: empty member list");
  std::sort(team.members.begin(), team.members.end());
  std::lock_guard lock(teams_mu_);
  team.index = static_cast<std::uint32_t>(teams_.size());
  teams_.push_back(std::make_unique<TeamState>(team));
  return team;
}

TeamState& Runtime::team_state(std::uint32_t index) {
  std::lock_guard lock(teams_mu_);
  if (index >= teams_.size()) throw ArgumentError("unknown team " + std::to_string(index));
  return *teams_[index];
}

void Runtime::barrier(Unit& self, const Team& team) {
  if (!team.contains(self.rank()))
    throw UsageError(describe(self.id()) + " is not a member of team " + std::to_string(team.index));
  team_state(team.index).sync.arrive(config_.collective_timeout, "barrier");
}

std::vector<std::string> Runtime::outstanding_handles() const {
  std::vector<std::string> out;
  for (const auto& u : units_) {
    if (!u) continue;
    auto d = u->origin_state().describe_all(u->rank());
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

void Runtime::exit_protocol(Unit& self) {
  Transport& t = transport_;
  const UnitId& mine = topology_.agent_for(self.id());
  t.send_ctrl(CtrlMessage{self.rank(), mine.rank, Tag::Exit, {}});
  if (topology_.node_leader(self.id().node).rank != self.rank()) return;
  const auto agents = topology_.agents_on(self.id().node);
  for (const auto& a : agents)
    if (topology_.bound_to(a).empty()) t.send_ctrl(CtrlMessage{self.rank(), a.rank, Tag::Exit, {}});
  for (const auto& a : agents) t.recv_ctrl(self.rank(), a.rank, Tag::Exit);
}

void Runtime::finalize() {
  if (finalized_) return;
  const auto leaked = outstanding_handles();
  if (!leaked.empty()) {
    std::string msg = "finalize with " + std::to_string(leaked.size()) + " un-waited handle(s):";
    for (const auto& h : leaked) msg += "\n  " + h;
    throw LeakError(msg);
  }
  shutdown();
}

void Runtime::shutdown() {
  start_agents();
  bool clean = true;
  try {
    dispatch([this](Unit& u) { exit_protocol(u); });
  } catch (...) {
    clean = false;
  }
  if (!clean)
    for (auto& a : agents_) a->stop();
  {
    std::lock_guard lock(job_mu_);
    workers_quit_ = true;
  }
  job_cv_.notify_all();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  for (auto& a : agent_threads_)
    if (a.joinable()) a.join();
  for (const auto& u : topology_.units()) transport_.close(u.rank);
  finalized_ = true;
  if (!config_.transcript_path.empty()) {
    std::ofstream out(config_.transcript_path);
    transport_.transcript().write(out);
  }
}

}  // namespace pgas
