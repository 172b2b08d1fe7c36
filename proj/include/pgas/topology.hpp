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

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgas/config.hpp"

namespace pgas {

using Rank = std::uint32_t;

enum class Role : std::uint8_t { Application, Agent };

struct UnitId {
  Rank rank = 0;
  std::uint32_t node = 0;
  Role role = Role::Application;

  bool is_agent() const { return role == Role::Agent; }
  friend bool operator==(const UnitId& a, const UnitId& b) { return a.rank == b.rank; }
  friend auto operator<=>(const UnitId& a, const UnitId& b) { return a.rank <=> b.rank; }
};

std::string describe(const UnitId& unit);

// Team index 0 is the team of every application unit.
inline constexpr std::uint32_t kTeamAll = 0;

struct Team {
  std::uint32_t index = kTeamAll;
  std::vector<UnitId> members;  // ascending rank, application units only

  std::size_t size() const { return members.size(); }
  bool contains(Rank rank) const;
  // Lowest-ranked member on `node`, or nullptr when the team has none there.
  const UnitId* leader_on(std::uint32_t node) const;
  std::vector<std::uint32_t> nodes() const;
};

// Static placement of units onto nodes. Local ranks [0, apps) of every node
// run the application; the highest `agents_per_node` local ranks are agents.
class Topology {
 public:
  explicit Topology(const Config& config);

  std::size_t nodes() const { return nodes_; }
  std::size_t units_per_node() const { return per_node_; }
  std::size_t agents_per_node() const { return agents_; }
  std::size_t size() const { return units_.size(); }

  const UnitId& unit(Rank rank) const;
  std::span<const UnitId> units() const { return units_; }
  std::vector<UnitId> agents() const;
  std::vector<UnitId> agents_on(std::uint32_t node) const;
  std::vector<UnitId> applications_on(std::uint32_t node) const;
  const Team& team_all() const { return team_all_; }

  // The agent statically bound to an application unit. `op_index` is unused
  // by the static policy. Throws UsageError for agents.
  const UnitId& agent_for(const UnitId& origin, std::uint64_t op_index = 0) const;
  // Application units bound to `agent`.
  std::vector<UnitId> bound_to(const UnitId& agent) const;
  // Units an agent expects EXIT from: its bound origins, or the node's
  // lowest application unit when nothing is bound to it.
  std::vector<UnitId> exit_senders(const UnitId& agent) const;
  const UnitId& node_leader(std::uint32_t node) const;

  bool same_node(Rank a, Rank b) const { return unit(a).node == unit(b).node; }

 private:
  std::size_t nodes_;
  std::size_t per_node_;
  std::size_t agents_;
  std::vector<UnitId> units_;
  std::vector<Rank> binding_;  // rank -> bound agent (application ranks only)
  Team team_all_;
};

}  // namespace pgas
