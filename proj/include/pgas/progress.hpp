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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <set>

#include "pgas/config.hpp"
#include "pgas/memory.hpp"
#include "pgas/topology.hpp"
#include "pgas/transport.hpp"

namespace pgas::progress {

// A transfer the agent has initiated but not yet flushed.
struct Request {
  Rank dest = 0;
  std::uint32_t segid = 0;
  Rank origin = 0;
};

struct Metrics {
  std::uint64_t requests = 0;     // GET/PUT commands accepted
  std::uint64_t flushes = 0;      // flush calls that retired at least one transfer
  std::uint64_t batches = 0;      // drains of a non-empty queue
  std::uint64_t idle_drains = 0;  // drains triggered by an empty probe
  std::uint64_t wait_drains = 0;  // drains triggered by WAIT
  std::uint64_t protocol_errors = 0;
  std::uint64_t max_queue = 0;
};

// Control payloads other than packets.
struct SegmentNotice {
  std::uint32_t index = 0;
  std::uint32_t segid = 0;
};
std::vector<std::byte> encode_notice(const SegmentNotice& notice);
SegmentNotice decode_notice(std::span<const std::byte> payload);

inline constexpr std::byte kStatusOk{0};
inline constexpr std::byte kStatusError{1};

// The progress agent. Probes its inbox; GET/PUT commands are decoded and
// initiated immediately, then queued. The queue is drained (one flush per
// outstanding target) when a WAIT arrives or when a probe comes back empty.
class Agent {
 public:
  Agent(const UnitId& self, const Topology& topology, Memory& memory, Transport& transport,
        const Config& config);
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  // Loops until every expected EXIT has arrived.
  void run();
  // One probe iteration. Returns false once the agent has terminated.
  bool step();
  // Leaves the loop at the next iteration without the EXIT protocol.
  void stop() { running_.store(false); }

  const UnitId& id() const { return self_; }
  bool running() const { return running_.load(); }
  std::size_t queue_length() const { return queue_size_.load(); }
  Metrics metrics() const;
  bool epoch_open(std::uint32_t segid) const;

 private:
  void dispatch(const Header& header);
  void handle_transfer(const Header& header);
  void handle_wait(const Header& header);
  void handle_segment(const Header& header);
  void handle_exit(const Header& header);
  void drain();
  void protocol_error(Rank origin, const std::string& what);
  void bump(std::atomic<std::uint64_t>& counter) { counter.fetch_add(1, std::memory_order_relaxed); }

  UnitId self_;
  const Topology& topology_;
  Memory& memory_;
  Transport& transport_;
  std::chrono::microseconds park_;

  std::deque<Request> queue_;
  std::atomic<std::size_t> queue_size_{0};
  std::set<Rank> failed_origins_;
  std::set<std::uint32_t> open_epochs_;
  mutable std::mutex epochs_mu_;
  std::size_t exits_expected_;
  std::size_t exits_seen_ = 0;
  std::atomic<bool> running_{true};

  std::atomic<std::uint64_t> requests_{0}, flushes_{0}, batches_{0}, idle_drains_{0},
      wait_drains_{0}, protocol_errors_{0}, max_queue_{0};
};

}  // namespace pgas::progress
