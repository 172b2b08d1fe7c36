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

#include <doctest.h>

#include <atomic>
#include <map>
#include <set>

#include "pgas/error.hpp"
#include "pgas/progress.hpp"
#include "pgas/rma.hpp"
#include "support.hpp"

using namespace pgas;
using testing::small_config;

TEST_CASE("placement: agents take the highest local ranks") {
  Config c = small_config(2, 4, 2);
  Topology t(c);
  std::vector<Rank> agents;
  for (const auto& a : t.agents()) agents.push_back(a.rank);
  CHECK(agents == std::vector<Rank>{2, 3, 6, 7});
  CHECK(t.team_all().size() == 4);
}

TEST_CASE("24-unit node with two agents") {
  Config c = small_config(1, 24, 2);
  Topology t(c);
  CHECK(t.team_all().size() == 22);
  CHECK(t.agents().size() == 2);
}

TEST_CASE("binding is even, node-local and static") {
  Config c = small_config(1, 6, 2);
  Topology t(c);
  // apps {0,1,2,3}, agents {4,5}
  CHECK(t.agent_for(t.unit(0)).rank == 4);
  CHECK(t.agent_for(t.unit(1)).rank == 4);
  CHECK(t.agent_for(t.unit(2)).rank == 5);
  CHECK(t.agent_for(t.unit(3)).rank == 5);
  CHECK(t.agent_for(t.unit(2), 17).rank == t.agent_for(t.unit(2)).rank);
  CHECK_THROWS_AS(t.agent_for(t.unit(4)), UsageError);
}

TEST_CASE("binding sweep") {
  for (std::size_t nodes = 1; nodes <= 4; ++nodes)
    for (std::size_t per = 3; per <= 8; ++per)
      for (std::size_t ag = 1; ag < per; ++ag) {
        Topology t(small_config(nodes, per, ag));
        const std::size_t apps = per - ag;
        const std::size_t cap = (apps + ag - 1) / ag;
        std::map<Rank, std::size_t> load;
        for (const auto& u : t.units()) {
          if (u.is_agent()) continue;
          const auto& a = t.agent_for(u);
          CHECK(a.is_agent());
          CHECK(a.node == u.node);
          ++load[a.rank];
        }
        for (auto [agent, n] : load) CHECK(n <= cap);
        CHECK(t.team_all().size() == nodes * apps);
        for (const auto& m : t.team_all().members) CHECK_FALSE(m.is_agent());
      }
}

TEST_CASE("exit senders cover idle agents") {
  // 2 apps, 3 agents: one agent has nobody bound and hears from the leader.
  Topology t(small_config(1, 5, 3));
  std::size_t total = 0;
  for (const auto& a : t.agents()) {
    auto senders = t.exit_senders(a);
    CHECK_FALSE(senders.empty());
    if (t.bound_to(a).empty()) CHECK(senders.front().rank == t.node_leader(0).rank);
    total += t.bound_to(a).size();
  }
  CHECK(total == 2);
}

TEST_CASE("init then finalize") {
  auto rt = Runtime::init(small_config());
  rt->finalize();
  CHECK(rt->finalized());
  const auto log = rt->transport().transcript().snapshot();
  CHECK(testing::count(log, testing::Kind::Copy) == 0);
  CHECK(testing::count(log, testing::Kind::Xfer) == 0);
}

TEST_CASE("invalid config fails construction") {
  Config c = small_config();
  c.agents_per_node = 0;
  CHECK_THROWS_AS(Runtime::init(c), ConfigError);
}

TEST_CASE("run executes once per application unit") {
  auto rt = Runtime::init(small_config(2, 4, 1));
  std::atomic<int> calls{0};
  std::mutex mu;
  std::set<Rank> seen;
  rt->run([&](Unit& u) {
    ++calls;
    std::lock_guard lk(mu);
    seen.insert(u.rank());
    CHECK_FALSE(u.id().is_agent());
  });
  CHECK(calls == 6);
  CHECK(seen == std::set<Rank>{0, 1, 2, 4, 5, 6});
  rt->finalize();
}

TEST_CASE("run rethrows the lowest-rank failure") {
  auto rt = Runtime::init(small_config());
  CHECK_THROWS_WITH_AS(rt->run([](Unit& u) { throw ArgumentError("unit " + std::to_string(u.rank())); }),
                       "unit 0", ArgumentError);
  rt->finalize();
}

TEST_CASE("teams reject agents") {
  auto rt = Runtime::init(small_config(1, 4, 1));
  CHECK_THROWS_AS(rt->create_team({0, 3}), UsageError);
  const Team t = rt->create_team({0, 2});
  CHECK(t.index != kTeamAll);
  CHECK(t.size() == 2);
  rt->finalize();
}

TEST_CASE("exit acknowledgements equal nodes x agents") {
  auto rt = Runtime::init(small_config(2, 4, 2));
  rt->finalize();
  const auto log = rt->transport().transcript().snapshot();
  std::size_t acks = 0, exits = 0;
  for (const auto& r : log) {
    if (r.kind != testing::Kind::Ctrl || r.tag != Tag::Exit) continue;
    if (rt->topology().unit(r.src).is_agent()) ++acks;
    else ++exits;
  }
  CHECK(acks == 4);
  CHECK(exits >= 4);
  for (const auto& a : rt->topology().agents()) {
    CHECK_FALSE(rt->agent(a.rank).running());
    CHECK(rt->agent(a.rank).queue_length() == 0);
  }
}

TEST_CASE("finalize with an un-waited handle names it") {
  Config c = small_config();
  c.mode = ProgressMode::Deferred;
  auto rt = Runtime::init(c);
  Handle leaked;
  rt->run([&](Unit& u) {
    if (u.rank() != 0) return;
    auto dst = rt->memory().local_alloc(0, 64);
    auto src = rt->memory().local_alloc(1, 64);
    leaked = get_nb(u, src, rt->memory().pin(dst, 64).view, 64);
  });
  try {
    rt->finalize();
    FAIL("expected a leak error");
  } catch (const LeakError& e) {
    CHECK(std::string(e.what()).find(describe(leaked)) != std::string::npos);
  }
  CHECK_FALSE(rt->finalized());
  rt->run([&](Unit& u) {
    if (u.rank() == 0) wait(u, leaked);
  });
  rt->finalize();
}

TEST_CASE("barrier orders phases") {
  auto rt = Runtime::init(small_config(2, 4, 1));
  std::atomic<int> phase1{0};
  rt->run([&](Unit& u) {
    ++phase1;
    rt->barrier(u, rt->team_all());
    CHECK(phase1 == 6);
  });
  rt->finalize();
}
