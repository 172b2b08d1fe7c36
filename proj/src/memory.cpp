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

#include "pgas/memory.hpp"

#include <algorithm>
#include <cstdlib>
#include <new>
#include <sstream>

#include "pgas/error.hpp"
#include "pgas/progress.hpp"
#include "pgas/runtime.hpp"

namespace pgas {

namespace {

std::size_t round_up(std::size_t n, std::size_t quantum) { return (n + quantum - 1) / quantum * quantum; }

}  // namespace

std::string describe(const GlobalPtr& g) {
  std::ostringstream os;
  os << "gptr{unit=" << g.unit << ", segid=" << g.segid << ", index=" << g.index
     << ", offset=" << g.offset << "}";
  return os.str();
}

void SegmentRecord::AlignedFree::operator()(std::byte* p) const {
  ::operator delete(p, std::align_val_t{kSegmentAlignment});
}

void Memory::ZeroedBytes::Free::operator()(std::byte* p) const { std::free(p); }

Memory::Memory(const Topology& topology, std::size_t region_bytes)
    : topology_(topology), region_bytes_(round_up(region_bytes, kRegionGranularity)) {
  regions_.reserve(topology.size());
  for (const auto& u : topology.units()) {
    auto region = std::make_unique<Region>();
    if (!u.is_agent()) {
      if (region_bytes_ > 0) {
        region->bytes.ptr.reset(static_cast<std::byte*>(std::calloc(region_bytes_, 1)));
        if (!region->bytes.ptr)
          throw StartupError("cannot reserve " + std::to_string(region_bytes_) +
                             " bytes for " + describe(u));
        region->bytes.len = region_bytes_;
        region->free_list.emplace_back(0, region_bytes_);
      }
    }
    regions_.push_back(std::move(region));
  }
}

GlobalPtr Memory::local_alloc(Rank owner, std::size_t nbytes) {
  if (nbytes == 0) throw ArgumentError("local_alloc: nbytes must be positive");
  Region& region = *regions_.at(owner);
  const std::size_t need = round_up(nbytes, kRegionGranularity);
  std::lock_guard lock(region.mu);
  for (auto it = region.free_list.begin(); it != region.free_list.end(); ++it) {
    if (it->second < need) continue;
    const std::size_t offset = it->first;
    if (it->second == need) {
      region.free_list.erase(it);
    } else {
      it->first += need;
      it->second -= need;
    }
    region.live.emplace(offset, need);
    return GlobalPtr{owner, 0, 0, offset};
  }
  std::size_t remaining = 0;
  std::size_t largest = 0;
  for (const auto& [off, len] : region.free_list) {
    remaining += len;
    largest = std::max(largest, len);
  }
  throw AllocationError("local_alloc: " + describe(topology_.unit(owner)) + " requested " +
                        std::to_string(nbytes) + " bytes, " + std::to_string(remaining) +
                        " bytes remain (largest free block " + std::to_string(largest) + ")");
}

void Memory::local_free(const GlobalPtr& gptr) {
  if (gptr.segid != 0) throw ArgumentError("local_free: " + describe(gptr) + " is collective");
  Region& region = *regions_.at(gptr.unit);
  std::lock_guard lock(region.mu);
  auto it = region.live.find(gptr.offset);
  if (it == region.live.end())
    throw ArgumentError("local_free: no allocation at " + describe(gptr));
  const std::pair<std::size_t, std::size_t> block{it->first, it->second};
  region.live.erase(it);
  region.free_list.insert(std::upper_bound(region.free_list.begin(), region.free_list.end(), block),
                          block);
}

std::size_t Memory::region_size(Rank owner) const { return regions_.at(owner)->bytes.size(); }

std::shared_ptr<const SegmentRecord> Memory::create_segment(std::uint32_t index,
                                                            std::span<const UnitId> members,
                                                            std::size_t size_per_unit) {
  auto record = std::make_shared<SegmentRecord>();
  record->index = index;
  record->size_per_unit = size_per_unit;
  record->epoch_open = true;
  const std::size_t alloc = round_up(std::max<std::size_t>(size_per_unit, 1), kSegmentAlignment);
  for (const auto& m : members) {
    auto* raw = static_cast<std::byte*>(::operator new(alloc, std::align_val_t{kSegmentAlignment}));
    std::fill_n(raw, alloc, std::byte{0});
    record->storage.emplace_back(raw);
    record->bases[m.rank] = Portion{raw, size_per_unit};
  }
  std::unique_lock lock(table_mu_);
  record->segid = next_segid_++;
  segments_[record->segid] = record;
  return record;
}

void Memory::attach_agent(std::uint32_t segid, std::uint32_t index, Rank agent) {
  std::unique_lock lock(table_mu_);
  auto it = segments_.find(segid);
  if (it == segments_.end() || it->second->index != index)
    throw StaleSegmentError("no live segment " + std::to_string(segid) + " on team " +
                            std::to_string(index));
  it->second->bases[agent] = Portion{nullptr, 0};
}

void Memory::retire_segment(std::uint32_t segid) {
  std::unique_lock lock(table_mu_);
  auto it = segments_.find(segid);
  if (it == segments_.end())
    throw StaleSegmentError("segment " + std::to_string(segid) + " is not live");
  it->second->epoch_open = false;
  segments_.erase(it);
}

bool Memory::is_live(std::uint32_t segid) const {
  std::shared_lock lock(table_mu_);
  return segments_.count(segid) != 0;
}

std::shared_ptr<const SegmentRecord> Memory::segment(std::uint32_t segid,
                                                     std::uint32_t index) const {
  std::shared_lock lock(table_mu_);
  auto it = segments_.find(segid);
  if (it == segments_.end() || it->second->index != index)
    throw StaleSegmentError("segment " + std::to_string(segid) + " (team " +
                            std::to_string(index) + ") is not live");
  return it->second;
}

std::uint32_t Memory::next_segid() const {
  std::shared_lock lock(table_mu_);
  return next_segid_;
}

Portion Memory::portion_locked(const GlobalPtr& gptr, std::size_t len,
                               std::shared_ptr<const SegmentRecord>* keep) const {
  Portion portion;
  if (gptr.segid == 0) {
    if (gptr.unit >= regions_.size())
      throw ArgumentError("rank " + std::to_string(gptr.unit) + " out of range");
    auto& bytes = regions_[gptr.unit]->bytes;
    portion = Portion{bytes.data(), bytes.size()};
  } else {
    auto it = segments_.find(gptr.segid);
    if (it == segments_.end() || it->second->index != gptr.index)
      throw StaleSegmentError(describe(gptr) + ": segment is not live");
    auto base = it->second->bases.find(gptr.unit);
    if (base == it->second->bases.end())
      throw ArgumentError(describe(gptr) + ": unit has no portion in segment");
    portion = base->second;
    if (keep) *keep = it->second;
  }
  if (gptr.offset >= portion.size || len > portion.size - gptr.offset)
    throw BoundsError(describe(gptr) + ": [" + std::to_string(gptr.offset) + ", +" +
                      std::to_string(len) + ") exceeds portion of " +
                      std::to_string(portion.size) + " bytes");
  return portion;
}

Resolution Memory::resolve(const GlobalPtr& gptr, Rank accessor, std::size_t len) const {
  std::shared_lock lock(table_mu_);
  const Portion portion = portion_locked(gptr, len, nullptr);
  if (!topology_.same_node(accessor, gptr.unit))
    return RemoteDescriptor{gptr.unit, gptr.segid, gptr.index, gptr.offset};
  return LocalView(portion.base + gptr.offset, len);
}

Pinned Memory::pin(const GlobalPtr& gptr, std::size_t len) const {
  std::shared_lock lock(table_mu_);
  std::shared_ptr<const SegmentRecord> keep;
  const Portion portion = portion_locked(gptr, len, &keep);
  return Pinned{LocalView(portion.base + gptr.offset, len), std::move(keep)};
}

std::optional<std::uint64_t> Memory::offset_within(Rank owner, std::uint32_t segid,
                                                   std::uint32_t index, const std::byte* p,
                                                   std::size_t len) const {
  std::shared_lock lock(table_mu_);
  Portion portion;
  try {
    portion = portion_locked(GlobalPtr{owner, segid, index, 0}, 0, nullptr);
  } catch (const Error&) {
    return std::nullopt;
  }
  const auto base = reinterpret_cast<std::uintptr_t>(portion.base);
  const auto ptr = reinterpret_cast<std::uintptr_t>(p);
  if (ptr < base || ptr - base > portion.size || len > portion.size - (ptr - base))
    return std::nullopt;
  return ptr - base;
}

std::string Memory::dump() const {
  std::ostringstream os;
  std::shared_lock lock(table_mu_);
  os << "segid\tindex\tsize_per_unit\tepoch\tunit:bytes\n";
  for (const auto& [segid, rec] : segments_) {
    os << segid << '\t' << rec->index << '\t' << rec->size_per_unit << '\t'
       << (rec->epoch_open ? "open" : "closed") << '\t';
    bool first = true;
    for (const auto& [rank, portion] : rec->bases) {
      os << (first ? "" : ",") << rank << ':' << portion.size;
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

namespace {

// The node leader of the team tells each on-node agent about the segment
// and collects one acknowledgement per agent.
void notify_agents(Unit& self, const Team& team, Tag tag, std::uint32_t segid) {
  const UnitId* leader = team.leader_on(self.id().node);
  if (leader == nullptr || leader->rank != self.rank()) return;
  Runtime& rt = self.runtime();
  const auto agents = rt.topology().agents_on(self.id().node);
  const auto payload = progress::encode_notice({team.index, segid});
  for (const auto& agent : agents)
    rt.transport().send_ctrl(CtrlMessage{self.rank(), agent.rank, tag, payload});
  std::string failed;
  for (const auto& agent : agents) {
    const CtrlMessage ack = rt.transport().recv_ctrl(self.rank(), agent.rank, tag);
    if (ack.payload.empty() || ack.payload[0] != progress::kStatusOk)
      failed += (failed.empty() ? "" : ", ") + describe(agent);
  }
  if (!failed.empty())
    throw ProtocolError(std::string(to_string(tag)) + " of segment " + std::to_string(segid) +
                        " rejected by " + failed);
}

}  // namespace

GlobalPtr team_alloc_aligned(Unit& self, const Team& team, std::size_t nbytes_per_unit) {
  if (nbytes_per_unit == 0) throw ArgumentError("team_alloc_aligned: nbytes_per_unit must be positive");
  if (!team.contains(self.rank()))
    throw UsageError(describe(self.id()) + " is not a member of team " + std::to_string(team.index));
  Runtime& rt = self.runtime();
  TeamState& state = rt.team_state(team.index);
  const auto timeout = rt.config().collective_timeout;

  state.sync.arrive(timeout, "team_alloc_aligned", [&] {
    state.failure.clear();
    state.segid = rt.memory().create_segment(team.index, team.members, nbytes_per_unit)->segid;
  });
  const std::uint32_t segid = state.segid;

  std::string failure;
  try {
    notify_agents(self, team, Tag::Alloc, segid);
  } catch (const Error& e) {
    failure = e.what();
  }
  // Nobody returns before every agent has joined.
  state.sync.arrive(timeout, "team_alloc_aligned", [&] {});
  if (!failure.empty()) throw ProtocolError(failure);
  return GlobalPtr{self.rank(), segid, team.index, 0};
}

void team_free(Unit& self, const GlobalPtr& gptr) {
  if (gptr.segid == 0) throw ArgumentError("team_free: " + describe(gptr) + " is not collective");
  Runtime& rt = self.runtime();
  const auto busy = self.origin_state().touching(gptr.segid, self.rank());
  if (!busy.empty())
    throw PreconditionError("team_free of segment " + std::to_string(gptr.segid) +
                            " with outstanding " + busy.front());
  TeamState& state = rt.team_state(gptr.index);
  const auto timeout = rt.config().collective_timeout;

  state.sync.arrive(timeout, "team_free", [&] {
    state.failure.clear();
    if (!rt.memory().is_live(gptr.segid))
      state.failure = "team_free: segment " + std::to_string(gptr.segid) + " is stale";
  });
  if (!state.failure.empty()) {
    const std::string msg = state.failure;
    // Keep everyone in step before reporting.
    state.sync.arrive(timeout, "team_free", [] {});
    throw StaleSegmentError(msg);
  }

  std::string failure;
  try {
    notify_agents(self, state.team, Tag::Free, gptr.segid);
  } catch (const Error& e) {
    failure = e.what();
  }
  state.sync.arrive(timeout, "team_free", [&] { rt.memory().retire_segment(gptr.segid); });
  if (!failure.empty()) throw ProtocolError(failure);
}

}  // namespace pgas
