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

#include "pgas/packet.hpp"

#include <string>

#include "pgas/error.hpp"

namespace pgas {

namespace {

template <typename T>
std::byte* put_le(std::byte* out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    *out++ = static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu);
  return out;
}

template <typename T>
const std::byte* get_le(const std::byte* in, T& value) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
  value = static_cast<T>(v);
  return in + sizeof(T);
}

}  // namespace

PacketFrame encode(const Packet& p) {
  PacketFrame frame{};
  std::byte* out = frame.data();
  out = put_le(out, p.dest);
  out = put_le(out, p.index);
  out = put_le(out, p.origin_offset);
  out = put_le(out, p.target_offset);
  out = put_le(out, p.data_size);
  out = put_le(out, p.segid);
  put_le(out, p.is_shmem);
  return frame;
}

Packet decode(std::span<const std::byte> frame) {
  if (frame.size() != kPacketBytes)
    throw ProtocolError("packet frame is " + std::to_string(frame.size()) + " bytes, expected " +
                        std::to_string(kPacketBytes));
  Packet p;
  const std::byte* in = frame.data();
  in = get_le(in, p.dest);
  in = get_le(in, p.index);
  in = get_le(in, p.origin_offset);
  in = get_le(in, p.target_offset);
  in = get_le(in, p.data_size);
  in = get_le(in, p.segid);
  in = get_le(in, p.is_shmem);
  for (const std::byte* end = frame.data() + kPacketBytes; in != end; ++in)
    if (*in != std::byte{0}) throw ProtocolError("packet reserved tail is not zero");
  if (p.is_shmem > 1)
    throw ProtocolError("packet is_shmem flag is " + std::to_string(p.is_shmem));
  return p;
}

Packet encode_packet(const Topology& topology, const Memory& memory, Rank origin,
                     const GlobalPtr& gptr, std::uint64_t origin_offset, std::uint64_t nbytes) {
  // Both pins throw BoundsError / StaleSegmentError as appropriate.
  memory.pin(gptr, nbytes);
  memory.pin(GlobalPtr{origin, gptr.segid, gptr.index, origin_offset}, nbytes);

  Packet p;
  p.dest = gptr.unit;
  p.index = gptr.index;
  p.origin_offset = origin_offset;
  p.target_offset = gptr.offset;
  p.data_size = nbytes;
  p.segid = gptr.segid;
  p.is_shmem = topology.same_node(origin, gptr.unit) ? 1 : 0;
  return p;
}

}  // namespace pgas
