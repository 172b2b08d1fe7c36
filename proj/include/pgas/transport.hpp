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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pgas/config.hpp"
#include "pgas/memory.hpp"
#include "pgas/topology.hpp"

namespace pgas {

using Clock = std::chrono::steady_clock;

enum class Tag : std::uint8_t { Get, Put, Wait, WaitDone, Alloc, Free, Exit };

std::string_view to_string(Tag tag);

struct Header {
  Rank src = 0;
  Tag tag = Tag::Get;
};

struct CtrlMessage {
  Rank src = 0;
  Rank dst = 0;
  Tag tag = Tag::Get;
  std::vector<std::byte> payload;
};

struct TransferToken {
  std::uint64_t id = 0;
  Rank accessor = 0;
  Rank dest = 0;
  std::uint32_t segid = 0;
  std::size_t bytes = 0;
  bool inter_node = false;
  Clock::time_point issue_time;
  Clock::time_point complete_time;
};

// latency + ceil(bytes / bandwidth), both scaled by `dilation`.
std::chrono::nanoseconds transfer_duration(std::size_t bytes, std::chrono::nanoseconds latency,
                                           std::uint64_t bandwidth, double dilation = 1.0);

// One line per control message, data movement, flush and agent-side error.
//   CTRL   src dst tag   payload-bytes
//   COPY   src dst segid bytes        (intra-node, completed at issue)
//   XFER   src dst segid bytes        (inter-node, completes per cost model)
//   FLUSH  src dst segid bytes-completed
//   ERROR  src dst -     0            (protocol error noted by `src`)
struct TranscriptRecord {
  enum class Kind : std::uint8_t { Ctrl, Copy, Xfer, Flush, Error };
  std::uint64_t seq = 0;
  double time_us = 0;
  Kind kind = Kind::Ctrl;
  Rank src = 0;
  Rank dst = 0;
  Tag tag = Tag::Get;            // Ctrl only
  std::uint32_t segid = 0;       // Copy, Xfer, Flush
  std::uint64_t bytes = 0;
  std::string note;              // Error only
};

std::string_view to_string(TranscriptRecord::Kind kind);

class Transcript {
 public:
  explicit Transcript(bool enabled) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void append(TranscriptRecord record);
  std::vector<TranscriptRecord> snapshot() const;
  void clear();
  // Tab-separated: time, kind, src, dst, tag-or-segid, bytes.
  void write(std::ostream& out) const;

 private:
  bool enabled_;
  Clock::time_point epoch_ = Clock::now();
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
  std::uint64_t next_seq_ = 0;
};

// Lowers the calling thread's timer slack so modeled delays are honoured
// with microsecond precision. No-op off Linux.
void tune_timer_slack();

// Point-to-point control channels plus one-sided data movement.
//
// Every destination owns an inbox with one FIFO lane per source. Probing
// walks the lanes round-robin starting after the last lane received from.
// Intra-node transfers are plain copies done at issue; inter-node transfers
// land at their modeled completion time and are retired by flush().
class Transport {
 public:
  Transport(const Topology& topology, Memory& memory, const Config& config);
  ~Transport();
  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  void send_ctrl(CtrlMessage msg);
  std::optional<Header> iprobe(Rank self);
  // Blocks until a message from `src` with `tag` is queued. Earlier messages
  // with other tags stay queued.
  CtrlMessage recv_ctrl(Rank self, Rank src, Tag tag);
  // Parks until any message is queued for `self` or `timeout` passes.
  bool wait_inbound(Rank self, std::chrono::nanoseconds timeout);
  std::size_t pending(Rank self) const;

  TransferToken rma_read(Rank accessor, const GlobalPtr& remote, LocalView into);
  TransferToken rma_write(Rank accessor, ConstView from, const GlobalPtr& remote);
  // Completes every transfer `accessor` issued toward (dest, segid), in issue
  // order. Returns how many were outstanding.
  std::size_t flush(Rank accessor, Rank dest, std::uint32_t segid);
  std::size_t outstanding(Rank accessor, Rank dest, std::uint32_t segid) const;
  std::size_t outstanding(Rank accessor) const;

  // Marks a unit terminated: later sends to it fail, and receivers blocked
  // on it are released with ChannelClosedError.
  void close(Rank unit);
  bool closed(Rank unit) const;

  void note_error(Rank unit, Rank peer, std::string what);
  Transcript& transcript() { return transcript_; }
  const Transcript& transcript() const { return transcript_; }

 private:
  struct Inbox {
    mutable std::mutex mu;
    std::condition_variable cv;
    std::vector<std::deque<CtrlMessage>> lanes;
    std::size_t cursor = 0;
    std::size_t queued = 0;
  };

  struct InFlight {
    TransferToken token;
    std::shared_ptr<const void> keepalive;
    const std::byte* from = nullptr;
    std::byte* to = nullptr;
  };

  struct Outbox {
    mutable std::mutex mu;
    std::deque<InFlight> in_flight;
  };

  TransferToken start(Rank accessor, const GlobalPtr& remote, const std::byte* from,
                      std::byte* to, std::size_t nbytes, bool is_read);

  const Topology& topology_;
  Memory& memory_;
  std::chrono::nanoseconds latency_;
  std::uint64_t bandwidth_;
  double dilation_;
  Transcript transcript_;
  std::vector<std::unique_ptr<Inbox>> inboxes_;
  std::vector<std::unique_ptr<Outbox>> outboxes_;
  std::unique_ptr<std::atomic<bool>[]> closed_;
  std::atomic<std::uint64_t> next_token_{1};
};

}  // namespace pgas
