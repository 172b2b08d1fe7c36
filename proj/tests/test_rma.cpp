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

#include <random>

#include "pgas/error.hpp"
#include "pgas/rma.hpp"
#include "support.hpp"

using namespace pgas;
using testing::count;
using testing::count_ctrl;
using testing::Kind;

namespace {

// Runs `body` on rank 0 with a 2 * n byte segment on every unit of a
// 2-node machine (apps 0,1 | 3,4).
template <typename F>
std::vector<TranscriptRecord> with_segment(Config c, std::size_t n, F&& body) {
  auto rt = Runtime::init(c);
  std::vector<GlobalPtr> seg(6);
  rt->run([&](Unit& u) {
    seg[u.rank()] = team_alloc_aligned(u, rt->team_all(), 2 * n);
    auto mine = rt->memory().pin(seg[u.rank()], n).view;
    auto p = testing::pattern(n, u.rank());
    std::memcpy(mine.data(), p.data(), n);
    rt->barrier(u, rt->team_all());
    rt->transport().transcript().clear();
    rt->barrier(u, rt->team_all());
    if (u.rank() == 0) body(*rt, u, seg[0]);
    rt->barrier(u, rt->team_all());
  });
  auto log = rt->transport().transcript().snapshot();
  rt->run([&](Unit& u) { team_free(u, seg[u.rank()]); });
  rt->finalize();
  return log;
}

Config cfg(ProgressMode mode) {
  Config c = testing::small_config(2, 3, 1);
  c.mode = mode;
  return c;
}

}  // namespace

TEST_CASE("above the threshold an agent GET is sent") {
  const std::size_t n = 8192;
  auto log = with_segment(cfg(ProgressMode::Agent), n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    auto landing = rt.memory().pin(seg + n, n).view;
    Handle h = get_nb(u, seg.at(3), landing, n);
    CHECK(h.agent);
    wait(u, h);
    auto expect = testing::pattern(n, 3);
    CHECK(std::memcmp(landing.data(), expect.data(), n) == 0);
  });
  CHECK(count_ctrl(log, Tag::Get) == 1);
  CHECK(count_ctrl(log, Tag::Wait) == 1);
  CHECK(count_ctrl(log, Tag::WaitDone) == 1);
}

TEST_CASE("at or below the threshold the origin moves the data") {
  const std::size_t n = 1024;
  auto log = with_segment(cfg(ProgressMode::Agent), 4096, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    auto landing = rt.memory().pin(seg + 4096, n).view;
    Handle h = get_nb(u, seg.at(3), landing, n);
    CHECK_FALSE(h.agent);
    wait(u, h);
    Handle edge = get_nb(u, seg.at(3), rt.memory().pin(seg + 4096, 4096).view, 4096);
    CHECK_FALSE(edge.agent);
    wait(u, edge);
  });
  CHECK(count_ctrl(log, Tag::Get) == 0);
  CHECK(count(log, Kind::Xfer) == 2);
}

TEST_CASE("deferred mode starts nothing before wait") {
  const std::size_t n = 16384;
  with_segment(cfg(ProgressMode::Deferred), n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    auto landing = rt.memory().pin(seg + n, n).view;
    Handle a = get_nb(u, seg.at(3), landing, n);
    Handle b = get_nb(u, seg.at(1), landing.subspan(0, 64), 64);
    auto log = rt.transport().transcript().snapshot();
    CHECK(count(log, Kind::Xfer) + count(log, Kind::Copy) == 0);
    wait(u, a);
    auto expect = testing::pattern(n, 3);
    CHECK(std::memcmp(landing.data() + 64, expect.data() + 64, n - 64) == 0);
    wait(u, b);
    auto expect1 = testing::pattern(64, 1);
    CHECK(std::memcmp(landing.data(), expect1.data(), 64) == 0);
  });
}

TEST_CASE("put then wait is visible at the target") {
  for (auto mode : {ProgressMode::Deferred, ProgressMode::EagerDirect, ProgressMode::Agent}) {
    const std::size_t n = 8192;
    with_segment(cfg(mode), n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
      auto staging = rt.memory().pin(seg + n, n).view;
      auto data = testing::pattern(n, 77);
      std::memcpy(staging.data(), data.data(), n);
      Handle h = put_nb(u, seg.at(4), staging, n);
      wait(u, h);
      CHECK(std::memcmp(rt.memory().pin(seg.at(4), n).view.data(), data.data(), n) == 0);
    });
  }
}

TEST_CASE("agent path keeps one origin's puts in order") {
  const std::size_t n = 8192;
  with_segment(cfg(ProgressMode::Agent), 2 * n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    auto first = rt.memory().pin(seg + 2 * n, n).view;
    auto second = rt.memory().pin(seg + 3 * n, n).view;
    std::fill(first.begin(), first.end(), std::byte{1});
    std::fill(second.begin(), second.end(), std::byte{2});
    std::array<Handle, 2> hs{put_nb(u, seg.at(3), first, n), put_nb(u, seg.at(3), second, n)};
    waitall(u, hs);
    auto target = rt.memory().pin(seg.at(3), n).view;
    CHECK(std::all_of(target.begin(), target.end(), [](std::byte b) { return b == std::byte{2}; }));
  });
}

TEST_CASE("agent path rejects buffers outside the segment") {
  with_segment(cfg(ProgressMode::Agent), 8192, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    std::vector<std::byte> user(8192);
    CHECK_THROWS_AS(put_nb(u, seg.at(3), user, 8192), ArgumentError);
    CHECK_THROWS_AS(get_nb(u, seg.at(3), user, 8192), ArgumentError);
    // Direct path accepts any buffer.
    Handle h = get_nb(u, seg.at(3), std::span(user).subspan(0, 64), 64);
    wait(u, h);
    CHECK(rt.outstanding_handles().empty());
  });
}

TEST_CASE("wait is idempotent and owned") {
  auto log = with_segment(cfg(ProgressMode::Agent), 8192, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    Handle h = get_nb(u, seg.at(3), rt.memory().pin(seg + 8192, 8192).view, 8192);
    wait(u, h);
    CHECK(h.completed);
    wait(u, h);
    Handle foreign = h;
    foreign.completed = false;
    foreign.origin = 1;
    CHECK_THROWS_AS(wait(u, foreign), UsageError);
  });
  CHECK(count_ctrl(log, Tag::Wait) == 1);
  CHECK(count_ctrl(log, Tag::WaitDone) == 1);
}

TEST_CASE("waitall sends one WAIT per distinct agent") {
  const std::size_t n = 8192;
  auto log = with_segment(cfg(ProgressMode::Agent), 11 * n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    std::vector<Handle> hs;
    for (int i = 0; i < 10; ++i)
      hs.push_back(get_nb(u, seg.at(i % 2 ? 3 : 4) + i * n, rt.memory().pin(seg + 11 * n + 0, n).view, n));
    hs.push_back(get_nb(u, seg.at(3), rt.memory().pin(seg + 11 * n, 8).view, 8));
    waitall(u, hs);
    for (auto& h : hs) CHECK(h.completed);
    std::vector<Handle> none;
    waitall(u, none);
  });
  CHECK(count_ctrl(log, Tag::Get) == 10);
  CHECK(count_ctrl(log, Tag::Wait) == 1);
}

TEST_CASE("blocking get equals get_nb + wait") {
  std::mt19937 rng(5);
  for (auto mode : {ProgressMode::Deferred, ProgressMode::EagerDirect, ProgressMode::Agent}) {
    const std::size_t n = 16384;
    with_segment(cfg(mode), n, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
      auto landing = rt.memory().pin(seg + n, n).view;
      for (int i = 0; i < 20; ++i) {
        const Rank t = std::array<Rank, 3>{1, 3, 4}[rng() % 3];
        const std::size_t len = 1 + rng() % (n / 2), off = rng() % (n / 2);
        get(u, seg.at(t) + off, landing.subspan(0, len), len);
        std::vector<std::byte> a(landing.begin(), landing.begin() + len);
        Handle h = get_nb(u, seg.at(t) + off, landing.subspan(0, len), len);
        wait(u, h);
        CHECK(std::equal(a.begin(), a.end(), landing.begin()));
      }
    });
  }
}

TEST_CASE("cross-node blocking get takes at least the latency") {
  Config c = cfg(ProgressMode::EagerDirect);
  c.net_latency = std::chrono::milliseconds(2);
  with_segment(c, 64, [&](Runtime& rt, Unit& u, GlobalPtr seg) {
    const auto t0 = Clock::now();
    get(u, seg.at(3), rt.memory().pin(seg + 64, 64).view, 64);
    CHECK(Clock::now() - t0 >= std::chrono::milliseconds(2));
    const auto t1 = Clock::now();
    get(u, seg.at(1), rt.memory().pin(seg + 64, 64).view, 64);
    CHECK(Clock::now() - t1 < std::chrono::milliseconds(2));
  });
}

TEST_CASE("non-collective region through the agent") {
  Config c = cfg(ProgressMode::Agent);
  c.threshold_bytes = 16;
  auto rt = Runtime::init(c);
  rt->run([&](Unit& u) {
    if (u.rank() != 0) return;
    auto remote = rt->memory().local_alloc(3, 64);
    auto local = rt->memory().local_alloc(0, 64);
    auto data = testing::pattern(64, 4);
    std::memcpy(rt->memory().pin(remote, 64).view.data(), data.data(), 64);
    get(u, remote, rt->memory().pin(local, 64).view, 64);
    CHECK(std::memcmp(rt->memory().pin(local, 64).view.data(), data.data(), 64) == 0);
  });
  rt->finalize();
  CHECK(testing::count_ctrl(rt->transport().transcript().snapshot(), Tag::Get) == 1);
}
