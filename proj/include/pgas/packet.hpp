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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "pgas/memory.hpp"
#include "pgas/topology.hpp"

namespace pgas {

// An RMA request as an origin hands it to its progress agent.
struct Packet {
  std::uint32_t dest = 0;           // target rank
  std::uint32_t index = 0;          // team of the segment
  std::uint64_t origin_offset = 0;  // into the origin's portion of the segment
  std::uint64_t target_offset = 0;  // into the target's portion
  std::uint64_t data_size = 0;
  std::uint32_t segid = 0;          // 0: non-collective region
  std::uint8_t is_shmem = 0;        // 1: origin and target share a node

  friend bool operator==(const Packet&, const Packet&) = default;
};

// dest:u32 index:u32 origin_offset:u64 target_offset:u64 data_size:u64
// segid:u32 is_shmem:u8, little-endian, packed, then 4 reserved zero bytes.
inline constexpr std::size_t kPacketFieldBytes = 37;
inline constexpr std::size_t kPacketBytes = 41;

using PacketFrame = std::array<std::byte, kPacketBytes>;

PacketFrame encode(const Packet& packet);
// Throws ProtocolError on a short/long frame, is_shmem outside {0, 1} or a
// non-zero reserved tail.
Packet decode(std::span<const std::byte> frame);

// Builds the packet for `nbytes` at `gptr`, with the origin's data at
// `origin_offset` of its own portion of the same segment. Checks bounds on
// both sides.
Packet encode_packet(const Topology& topology, const Memory& memory, Rank origin,
                     const GlobalPtr& gptr, std::uint64_t origin_offset, std::uint64_t nbytes);

}  // namespace pgas
