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

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pgas/topology.hpp"

namespace pgas {

class Unit;

// Locality-aware reference to remote data. segid 0 addresses the target's
// non-collective region; segid >= 1 names a collective segment allocated on
// team `index`.
struct GlobalPtr {
  Rank unit = 0;
  std::uint32_t segid = 0;
  std::uint32_t index = 0;
  std::uint64_t offset = 0;

  GlobalPtr at(Rank target) const { return {target, segid, index, offset}; }
  GlobalPtr operator+(std::uint64_t bytes) const { return {unit, segid, index, offset + bytes}; }
  friend bool operator==(const GlobalPtr&, const GlobalPtr&) = default;
};

std::string describe(const GlobalPtr& gptr);

using LocalView = std::span<std::byte>;
using ConstView = std::span<const std::byte>;

// What a cross-node accessor gets back from resolve: enough for the
// transport to reach the bytes, but no direct view.
struct RemoteDescriptor {
  Rank unit = 0;
  std::uint32_t segid = 0;
  std::uint32_t index = 0;
  std::uint64_t offset = 0;
};

using Resolution = std::variant<LocalView, RemoteDescriptor>;

inline constexpr std::size_t kSegmentAlignment = 64;
inline constexpr std::size_t kRegionGranularity = 8;

struct Portion {
  std::byte* base = nullptr;
  std::size_t size = 0;
};

struct SegmentRecord {
  std::uint32_t segid = 0;
  std::uint32_t index = 0;
  std::size_t size_per_unit = 0;
  std::map<Rank, Portion> bases;  // agents appear with size 0 once joined
  bool epoch_open = false;

  struct AlignedFree {
    void operator()(std::byte* p) const;
  };
  std::vector<std::unique_ptr<std::byte, AlignedFree>> storage;
};

// Bytes pinned for a transfer: the view stays valid as long as `keepalive`
// is held, even if the segment is retired meanwhile.
struct Pinned {
  LocalView view;
  std::shared_ptr<const void> keepalive;
};

// Owns every unit's non-collective region and the collective segment table.
// All units share one address space; locality is enforced by resolve().
class Memory {
 public:
  Memory(const Topology& topology, std::size_t region_bytes);
  Memory(const Memory&) = delete;
  Memory& operator=(const Memory&) = delete;

  // First fit, 8-byte granularity. Freed blocks are not coalesced.
  GlobalPtr local_alloc(Rank owner, std::size_t nbytes);
  void local_free(const GlobalPtr& gptr);
  std::size_t region_size(Rank owner) const;

  std::shared_ptr<const SegmentRecord> create_segment(std::uint32_t index,
                                                      std::span<const UnitId> members,
                                                      std::size_t size_per_unit);
  // Agent joins a live segment with a zero-byte portion.
  void attach_agent(std::uint32_t segid, std::uint32_t index, Rank agent);
  void retire_segment(std::uint32_t segid);
  bool is_live(std::uint32_t segid) const;
  std::shared_ptr<const SegmentRecord> segment(std::uint32_t segid, std::uint32_t index) const;
  // Id the next create_segment will hand out. Ids are never reused.
  std::uint32_t next_segid() const;

  // Same node: a direct view of [offset, offset + len). Cross node: a
  // descriptor the transport can act on.
  Resolution resolve(const GlobalPtr& gptr, Rank accessor, std::size_t len) const;
  // Direct access regardless of node; used by the transport engine.
  Pinned pin(const GlobalPtr& gptr, std::size_t len) const;
  // Offset of [p, p + len) inside `owner`'s portion of the segment, if the
  // bytes lie entirely there.
  std::optional<std::uint64_t> offset_within(Rank owner, std::uint32_t segid, std::uint32_t index,
                                             const std::byte* p, std::size_t len) const;

  std::string dump() const;

 private:
  // calloc'd so untouched pages cost nothing.
  struct ZeroedBytes {
    struct Free {
      void operator()(std::byte* p) const;
    };
    std::unique_ptr<std::byte, Free> ptr;
    std::size_t len = 0;
    std::byte* data() const { return ptr.get(); }
    std::size_t size() const { return len; }
  };

  struct Region {
    ZeroedBytes bytes;
    std::vector<std::pair<std::size_t, std::size_t>> free_list;  // (offset, length), sorted
    std::map<std::size_t, std::size_t> live;                     // offset -> length
    mutable std::mutex mu;
  };

  Portion portion_locked(const GlobalPtr& gptr, std::size_t len,
                         std::shared_ptr<const SegmentRecord>* keep) const;

  const Topology& topology_;
  std::size_t region_bytes_;
  std::vector<std::unique_ptr<Region>> regions_;

  mutable std::shared_mutex table_mu_;
  std::map<std::uint32_t, std::shared_ptr<SegmentRecord>> segments_;
  std::uint32_t next_segid_ = 1;
};

// Collective allocation on `team`: every member calls it. Returns the
// caller's own portion (offset 0) of a fresh segment. On each node the
// lowest-ranked member notifies that node's agents, which join with a
// zero-byte portion before anyone returns.
GlobalPtr team_alloc_aligned(Unit& self, const Team& team, std::size_t nbytes_per_unit);
// Collective release; the segment id is never handed out again.
void team_free(Unit& self, const GlobalPtr& gptr);

}  // namespace pgas
