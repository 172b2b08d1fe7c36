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
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgas/memory.hpp"
#include "pgas/topology.hpp"

namespace pgas {

class Unit;

enum class RmaOp : std::uint8_t { Get, Put };

// Origin-side completion token. `agent` names the progress agent that owns
// the transfer, or is empty when the origin moves the data itself.
struct Handle {
  std::optional<Rank> agent;
  RmaOp op = RmaOp::Get;
  std::uint64_t seq = 0;
  Rank origin = 0;
  bool completed = false;
};

std::string describe(const Handle& handle);

namespace detail {

enum class Path : std::uint8_t { Agent, Direct, Deferred };

struct PendingOp {
  Path path = Path::Direct;
  RmaOp op = RmaOp::Get;
  Rank agent = 0;
  GlobalPtr target;
  std::byte* dst = nullptr;        // Get
  const std::byte* src = nullptr;  // Put
  std::size_t nbytes = 0;
};

}  // namespace detail

// Per-application-unit bookkeeping of un-waited handles. Only the owning
// unit mutates it; the lock lets finalize inspect it from outside.
class OriginState {
 public:
  std::uint64_t add(const detail::PendingOp& op);
  std::optional<detail::PendingOp> take(std::uint64_t seq);
  std::size_t size() const;
  // Handles touching segment `segid`, described for diagnostics.
  std::vector<std::string> touching(std::uint32_t segid, Rank owner) const;
  std::vector<std::string> describe_all(Rank owner) const;

 private:
  mutable std::mutex mu_;
  std::map<std::uint64_t, detail::PendingOp> pending_;
  std::uint64_t next_seq_ = 1;
};

// Non-blocking one-sided operations. In agent mode a transfer larger than
// the threshold is delegated to the origin's progress agent; the origin's
// side of such a transfer must then live in its own portion of the same
// segment as `gptr` (its non-collective region when segid is 0).
Handle get_nb(Unit& origin, const GlobalPtr& gptr, LocalView dst, std::size_t nbytes);
Handle put_nb(Unit& origin, const GlobalPtr& gptr, ConstView src, std::size_t nbytes);

// Returns once the transfer is complete at both ends. Waiting on a
// completed handle is a no-op.
void wait(Unit& origin, Handle& handle);
// One WAIT exchange per distinct agent; other handles are flushed.
void waitall(Unit& origin, std::span<Handle> handles);

void get(Unit& origin, const GlobalPtr& gptr, LocalView dst, std::size_t nbytes);
void put(Unit& origin, const GlobalPtr& gptr, ConstView src, std::size_t nbytes);

}  // namespace pgas
