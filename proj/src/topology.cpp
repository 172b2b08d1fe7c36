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

#include "pgas/topology.hpp"

#include <algorithm>

#include "pgas/error.hpp"

namespace pgas {

std::string describe(const UnitId& unit) {
  return std::string(unit.is_agent() ? "agent " : "unit ") + std::to_string(unit.rank) +
         " (node " + std::to_string(unit.node) + ")";
}

bool Team::contains(Rank rank) const {
  return std::any_of(members.begin(), members.end(),
                     [rank](const UnitId& u) { return u.rank == rank; });
}

const UnitId* Team::leader_on(std::uint32_t node) const {
  for (const auto& u : members)
    if (u.node == node) return &u;
  return nullptr;
}

std::vector<std::uint32_t> Team::nodes() const {
  std::vector<std::uint32_t> out;
  for (const auto& u : members)
    if (std::find(out.begin(), out.end(), u.node) == out.end()) out.push_back(u.node);
  return out;
}

Topology::Topology(const Config& config)
    : nodes_(config.nodes), per_node_(config.units_per_node), agents_(config.agents_per_node) {
  config.validate();
  const std::size_t apps = per_node_ - agents_;
  units_.reserve(nodes_ * per_node_);
  binding_.assign(nodes_ * per_node_, 0);
  for (std::size_t node = 0; node < nodes_; ++node) {
    for (std::size_t local = 0; local < per_node_; ++local) {
      UnitId u;
      u.rank = static_cast<Rank>(node * per_node_ + local);
      u.node = static_cast<std::uint32_t>(node);
      u.role = local < apps ? Role::Application : Role::Agent;
      units_.push_back(u);
      if (!u.is_agent()) {
        team_all_.members.push_back(u);
        // Block distribution: local app i goes to agent floor(i * agents / apps),
        // so no agent serves more than ceil(apps / agents) units.
        const std::size_t which = local * agents_ / apps;
        binding_[u.rank] = static_cast<Rank>(node * per_node_ + apps + which);
      }
    }
  }
}

const UnitId& Topology::unit(Rank rank) const {
  if (rank >= units_.size())
    throw ArgumentError("rank " + std::to_string(rank) + " out of range");
  return units_[rank];
}

std::vector<UnitId> Topology::agents() const {
  std::vector<UnitId> out;
  for (const auto& u : units_)
    if (u.is_agent()) out.push_back(u);
  return out;
}

std::vector<UnitId> Topology::agents_on(std::uint32_t node) const {
  std::vector<UnitId> out;
  for (const auto& u : units_)
    if (u.is_agent() && u.node == node) out.push_back(u);
  return out;
}

std::vector<UnitId> Topology::applications_on(std::uint32_t node) const {
  std::vector<UnitId> out;
  for (const auto& u : units_)
    if (!u.is_agent() && u.node == node) out.push_back(u);
  return out;
}

const UnitId& Topology::agent_for(const UnitId& origin, std::uint64_t /*op_index*/) const {
  const UnitId& self = unit(origin.rank);
  if (self.is_agent())
    throw UsageError("agent_for called for " + describe(self) + "; agents have no agent");
  return units_[binding_[self.rank]];
}

std::vector<UnitId> Topology::bound_to(const UnitId& agent) const {
  std::vector<UnitId> out;
  for (const auto& u : units_)
    if (!u.is_agent() && binding_[u.rank] == agent.rank) out.push_back(u);
  return out;
}

std::vector<UnitId> Topology::exit_senders(const UnitId& agent) const {
  auto out = bound_to(agent);
  if (out.empty()) out.push_back(node_leader(agent.node));
  return out;
}

const UnitId& Topology::node_leader(std::uint32_t node) const {
  return units_.at(static_cast<std::size_t>(node) * per_node_);
}

}  // namespace pgas
