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
#include "pgas/packet.hpp"
#include "support.hpp"

using namespace pgas;

namespace {

PacketFrame frame_from_hex(const std::string& hex) {
  std::vector<std::byte> bytes;
  for (std::size_t i = 0; i < hex.size();) {
    if (hex[i] == ' ') {
      ++i;
      continue;
    }
    bytes.push_back(std::byte(std::stoi(hex.substr(i, 2), nullptr, 16)));
    i += 2;
  }
  REQUIRE(bytes.size() == kPacketBytes);
  PacketFrame f;
  std::copy(bytes.begin(), bytes.end(), f.begin());
  return f;
}

}  // namespace

TEST_CASE("golden vectors") {
  struct Golden {
    Packet p;
    const char* hex;
  };
  const Golden cases[] = {
      {{1, 0, 0, 16, 8192, 0, 1},
       "01000000 00000000 0000000000000000 1000000000000000 0020000000000000 00000000 01 00000000"},
      {{0x04030201, 0x08070605, 0x100F0E0D0C0B0A09, 0x1817161514131211, 0x201F1E1D1C1B1A19,
        0x24232221, 0},
       "01020304 05060708 090A0B0C0D0E0F10 1112131415161718 191A1B1C1D1E1F20 21222324 00 00000000"},
      {{7, 3, 65536, 1048576, 4097, 2, 0},
       "07000000 03000000 0000010000000000 0000100000000000 0110000000000000 02000000 00 00000000"},
  };
  for (const auto& g : cases) {
    const PacketFrame expect = frame_from_hex(g.hex);
    CHECK(encode(g.p) == expect);
    CHECK(decode(expect) == g.p);
  }
}

TEST_CASE("randomized round trips") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    Packet p;
    p.dest = static_cast<std::uint32_t>(rng());
    p.index = static_cast<std::uint32_t>(rng());
    p.origin_offset = rng();
    p.target_offset = rng();
    p.data_size = rng();
    p.segid = static_cast<std::uint32_t>(rng());
    p.is_shmem = static_cast<std::uint8_t>(rng() & 1);
    const auto f = encode(p);
    CHECK(f.size() == 41);
    CHECK(decode(f) == p);
  }
}

TEST_CASE("malformed frames") {
  std::vector<std::byte> short_frame(5);
  CHECK_THROWS_AS(decode(short_frame), ProtocolError);
  std::vector<std::byte> long_frame(42);
  CHECK_THROWS_AS(decode(long_frame), ProtocolError);
  auto f = encode(Packet{});
  f[36] = std::byte{2};
  CHECK_THROWS_AS(decode(f), ProtocolError);
  f[36] = std::byte{1};
  CHECK_NOTHROW(decode(f));
  f[40] = std::byte{1};
  CHECK_THROWS_AS(decode(f), ProtocolError);
}

TEST_CASE("encode_packet fills locality and segment") {
  Config c = testing::small_config(2, 3, 1);  // apps 0,1 | 3,4
  Topology topo(c);
  Memory mem(topo, 4096);
  Packet same = encode_packet(topo, mem, 0, {1, 0, 0, 128}, 64, 256);
  CHECK(same.is_shmem == 1);
  CHECK(same.segid == 0);
  CHECK(same.dest == 1);
  CHECK(same.target_offset == 128);
  CHECK(same.origin_offset == 64);
  CHECK(same.data_size == 256);
  Packet cross = encode_packet(topo, mem, 0, {3, 0, 0, 0}, 0, 8);
  CHECK(cross.is_shmem == 0);
  CHECK_THROWS_AS(encode_packet(topo, mem, 0, {3, 0, 0, 4000}, 0, 200), BoundsError);
  CHECK_THROWS_AS(encode_packet(topo, mem, 0, {3, 0, 0, 0}, 4000, 200), BoundsError);
}
