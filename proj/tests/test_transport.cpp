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
#include <sstream>
#include <thread>

#include "pgas/error.hpp"
#include "support.hpp"

using namespace pgas;
using namespace std::chrono_literals;

namespace {

struct Fixture {
  Config cfg;
  Topology topo;
  Memory mem;
  Transport tr;

  explicit Fixture(Config c = testing::small_config(2, 3, 1))
      : cfg(c), topo(cfg), mem(topo, 1 << 20), tr(topo, mem, cfg) {}

  void send(Rank src, Rank dst, Tag tag, std::vector<std::byte> payload = {}) {
    tr.send_ctrl({src, dst, tag, std::move(payload)});
  }
};

std::vector<std::byte> u32(std::uint32_t v) {
  std::vector<std::byte> b(4);
  std::memcpy(b.data(), &v, 4);
  return b;
}

std::uint32_t as_u32(const std::vector<std::byte>& b) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data(), 4);
  return v;
}

}  // namespace

TEST_CASE("send then probe then recv") {
  Fixture f;
  CHECK_FALSE(f.tr.iprobe(2));
  f.send(0, 2, Tag::Get, u32(7));
  auto h = f.tr.iprobe(2);
  REQUIRE(h);
  CHECK(h->src == 0);
  CHECK(h->tag == Tag::Get);
  auto again = f.tr.iprobe(2);
  REQUIRE(again);
  CHECK(again->src == 0);
  CHECK(f.tr.pending(2) == 1);
  auto m = f.tr.recv_ctrl(2, h->src, h->tag);
  CHECK(as_u32(m.payload) == 7);
  CHECK_FALSE(f.tr.iprobe(2));
}

TEST_CASE("same-pair messages stay in order") {
  Fixture f;
  f.send(0, 2, Tag::Get, u32(1));
  f.send(0, 2, Tag::Get, u32(2));
  CHECK(as_u32(f.tr.recv_ctrl(2, 0, Tag::Get).payload) == 1);
  CHECK(as_u32(f.tr.recv_ctrl(2, 0, Tag::Get).payload) == 2);
}

TEST_CASE("recv by tag leaves earlier messages queued") {
  Fixture f;
  f.send(0, 2, Tag::Get, u32(1));
  f.send(0, 2, Tag::Wait);
  CHECK(f.tr.recv_ctrl(2, 0, Tag::Wait).tag == Tag::Wait);
  auto h = f.tr.iprobe(2);
  REQUIRE(h);
  CHECK(h->tag == Tag::Get);
  CHECK(as_u32(f.tr.recv_ctrl(2, 0, Tag::Get).payload) == 1);
}

TEST_CASE("blocking recv returns after the send") {
  Fixture f;
  std::thread t([&] {
    std::this_thread::sleep_for(5ms);
    f.send(1, 2, Tag::Exit);
  });
  auto m = f.tr.recv_ctrl(2, 1, Tag::Exit);
  CHECK(m.src == 1);
  t.join();
}

TEST_CASE("probe fairness across sources") {
  Fixture f;
  for (int i = 0; i < 1000; ++i) {
    f.send(0, 2, Tag::Get);
    f.send(1, 2, Tag::Get);
  }
  int from0 = 0, from1 = 0;
  for (int i = 0; i < 1000; ++i) {
    auto h = f.tr.iprobe(2);
    REQUIRE(h);
    (h->src == 0 ? from0 : from1)++;
    f.tr.recv_ctrl(2, h->src, h->tag);
  }
  CHECK(from0 >= 400);
  CHECK(from1 >= 400);
}

TEST_CASE("probe soundness: a probed header never blocks recv") {
  Fixture f;
  std::mt19937 rng(3);
  for (int i = 0; i < 500; ++i) f.send(rng() % 2, 2, Tag(rng() % 7));
  while (auto h = f.tr.iprobe(2)) f.tr.recv_ctrl(2, h->src, h->tag);
  CHECK(f.tr.pending(2) == 0);
}

TEST_CASE("FIFO per channel under concurrent senders") {
  Fixture f(testing::small_config(1, 6, 1));
  constexpr std::uint32_t per_sender = 2500;
  std::vector<std::thread> senders;
  for (Rank s = 0; s < 4; ++s)
    senders.emplace_back([&, s] {
      std::mt19937 rng(s);
      for (std::uint32_t i = 0; i < per_sender; ++i) {
        f.send(s, 5, Tag::Put, u32(i));
        if (rng() % 16 == 0) std::this_thread::yield();
      }
    });
  std::vector<std::uint32_t> next(4, 0);
  std::size_t received = 0;
  while (received < 4 * per_sender) {
    auto h = f.tr.iprobe(5);
    if (!h) {
      f.tr.wait_inbound(5, 1ms);
      continue;
    }
    auto m = f.tr.recv_ctrl(5, h->src, h->tag);
    CHECK(as_u32(m.payload) == next[m.src]);
    ++next[m.src];
    ++received;
  }
  for (auto& t : senders) t.join();
}

TEST_CASE("closed channels") {
  Fixture f;
  f.tr.close(2);
  CHECK(f.tr.closed(2));
  CHECK_THROWS_AS(f.send(0, 2, Tag::Get), ChannelClosedError);
  std::thread t([&] {
    std::this_thread::sleep_for(5ms);
    f.tr.close(1);
  });
  CHECK_THROWS_AS(f.tr.recv_ctrl(0, 1, Tag::WaitDone), ChannelClosedError);
  t.join();
}

TEST_CASE("cost model arithmetic") {
  // 64 KiB at 1 GiB/s: ceil(65536 / 2^30 s) = 61036 ns.
  CHECK(transfer_duration(65536, 100us, 1ull << 30) == 161036ns);
  CHECK(transfer_duration(0, 100us, 1ull << 30) == 100us);
  CHECK(transfer_duration(65536, 100us, 1ull << 30, 2.0) == 322072ns);
  std::chrono::nanoseconds prev{0};
  for (std::size_t n = 0; n <= (1u << 20); n = n ? n * 2 : 1) {
    auto d = transfer_duration(n, 50us, 1'000'000'000);
    CHECK(d >= prev);
    CHECK(transfer_duration(n, 60us, 1'000'000'000) > d);
    prev = d;
  }
}

TEST_CASE("intra-node read is a completed copy") {
  Fixture f;
  auto src = f.mem.local_alloc(1, 1024);
  auto dst = f.mem.local_alloc(0, 1024);
  auto data = testing::pattern(1024, 1);
  std::memcpy(f.mem.pin(src, 1024).view.data(), data.data(), 1024);
  auto into = f.mem.pin(dst, 1024).view;
  auto tok = f.tr.rma_read(0, src, into);
  CHECK_FALSE(tok.inter_node);
  CHECK(tok.complete_time == tok.issue_time);
  CHECK(std::memcmp(into.data(), data.data(), 1024) == 0);
  CHECK(f.tr.outstanding(0) == 0);
  CHECK(f.tr.flush(0, 1, 0) == 0);
}

TEST_CASE("inter-node transfer lands at flush after the model time") {
  Config c = testing::small_config(2, 3, 1);
  c.net_latency = 100us;
  c.net_bandwidth = 1ull << 30;
  Fixture f(c);
  auto src = f.mem.local_alloc(3, 65536);
  auto dst = f.mem.local_alloc(0, 65536);
  auto data = testing::pattern(65536, 9);
  std::memcpy(f.mem.pin(src, 65536).view.data(), data.data(), 65536);
  auto into = f.mem.pin(dst, 65536).view;
  auto tok = f.tr.rma_read(0, src, into);
  CHECK(tok.inter_node);
  CHECK(tok.complete_time - tok.issue_time == 161036ns);
  CHECK(f.tr.outstanding(0, 3, 0) == 1);
  CHECK(f.tr.flush(0, 3, 0) == 1);
  CHECK(Clock::now() >= tok.complete_time);
  CHECK(std::memcmp(into.data(), data.data(), 65536) == 0);
  CHECK(f.tr.flush(0, 3, 0) == 0);
}

TEST_CASE("flush completeness for writes") {
  Fixture f;
  auto target = f.mem.local_alloc(3, 4096);
  auto staging = f.mem.local_alloc(0, 4096);
  auto from = f.mem.pin(staging, 4096).view;
  std::mt19937 rng(11);
  std::vector<std::byte> model(4096, std::byte{0});
  for (int i = 0; i < 50; ++i) {
    const std::size_t off = rng() % 4000, len = 1 + rng() % 96;
    for (std::size_t k = 0; k < len; ++k) from[off + k] = model[off + k] = std::byte(rng());
    f.tr.rma_write(0, from.subspan(off, len), target + off);
    f.tr.flush(0, 3, 0);
  }
  CHECK(std::memcmp(f.mem.pin(target, 4096).view.data(), model.data(), 4096) == 0);
}

TEST_CASE("transfer bounds") {
  Fixture f;
  std::vector<std::byte> buf(16);
  CHECK_THROWS_AS(f.tr.rma_read(0, {3, 0, 0, (1 << 20) - 8}, buf), BoundsError);
  CHECK_THROWS_AS(f.tr.rma_read(0, {3, 7, 0, 0}, buf), StaleSegmentError);
}

TEST_CASE("transcript lines are tab separated") {
  Fixture f;
  auto src = f.mem.local_alloc(1, 8);
  std::vector<std::byte> buf(8);
  f.send(0, 2, Tag::Wait);
  f.tr.rma_read(0, src, buf);
  std::ostringstream os;
  f.tr.transcript().write(os);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), '\t') == 5);
  }
  CHECK(lines == 2);
  CHECK(os.str().find("CTRL\t0\t2\tWAIT\t0") != std::string::npos);
  CHECK(os.str().find("COPY\t0\t1\t0\t8") != std::string::npos);
}
