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

#include "pgas/transport.hpp"

#include <cstring>
#include <iomanip>
#include <ostream>
#include <thread>

#if defined(__linux__)
#include <sys/prctl.h>
#endif

#include "pgas/error.hpp"

namespace pgas {

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::Get: return "GET";
    case Tag::Put: return "PUT";
    case Tag::Wait: return "WAIT";
    case Tag::WaitDone: return "WAIT_DONE";
    case Tag::Alloc: return "ALLOC";
    case Tag::Free: return "FREE";
    case Tag::Exit: return "EXIT";
  }
  return "?";
}

std::string_view to_string(TranscriptRecord::Kind kind) {
  using K = TranscriptRecord::Kind;
  switch (kind) {
    case K::Ctrl: return "CTRL";
    case K::Copy: return "COPY";
    case K::Xfer: return "XFER";
    case K::Flush: return "FLUSH";
    case K::Error: return "ERROR";
  }
  return "?";
}

std::chrono::nanoseconds transfer_duration(std::size_t bytes, std::chrono::nanoseconds latency,
                                           std::uint64_t bandwidth, double dilation) {
  const unsigned __int128 scaled = static_cast<unsigned __int128>(bytes) * 1'000'000'000u;
  const auto wire = static_cast<std::int64_t>((scaled + bandwidth - 1) / bandwidth);
  const double total = static_cast<double>(latency.count() + wire) * dilation;
  return std::chrono::nanoseconds(static_cast<std::int64_t>(total + 0.5));
}

void tune_timer_slack() {
#if defined(__linux__)
  ::prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL);
#endif
}

void Transcript::append(TranscriptRecord record) {
  if (!enabled_) return;
  const auto now = Clock::now();
  std::lock_guard lock(mu_);
  record.seq = next_seq_++;
  record.time_us = std::chrono::duration<double, std::micro>(now - epoch_).count();
  records_.push_back(std::move(record));
}

std::vector<TranscriptRecord> Transcript::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

void Transcript::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

void Transcript::write(std::ostream& out) const {
  std::lock_guard lock(mu_);
  out << std::fixed << std::setprecision(3);
  for (const auto& r : records_) {
    out << r.time_us << '\t' << to_string(r.kind) << '\t' << r.src << '\t' << r.dst << '\t';
    switch (r.kind) {
      case TranscriptRecord::Kind::Ctrl: out << to_string(r.tag); break;
      case TranscriptRecord::Kind::Error: out << r.note; break;
      default: out << r.segid; break;
    }
    out << '\t' << r.bytes << '\n';
  }
}

Transport::Transport(const Topology& topology, Memory& memory, const Config& config)
    : topology_(topology),
      memory_(memory),
      latency_(config.net_latency),
      bandwidth_(config.net_bandwidth),
      dilation_(config.time_dilation),
      transcript_(config.transcript),
      closed_(new std::atomic<bool>[topology.size()]) {
  const std::size_t n = topology.size();
  inboxes_.reserve(n);
  outboxes_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto inbox = std::make_unique<Inbox>();
    inbox->lanes.resize(n);
    inboxes_.push_back(std::move(inbox));
    outboxes_.push_back(std::make_unique<Outbox>());
    closed_[i].store(false);
  }
}

Transport::~Transport() = default;

void Transport::send_ctrl(CtrlMessage msg) {
  if (msg.dst >= inboxes_.size() || msg.src >= inboxes_.size())
    throw ArgumentError("send_ctrl: rank out of range");
  if (closed_[msg.dst].load())
    throw ChannelClosedError("send_ctrl: " + describe(topology_.unit(msg.dst)) +
                             " has terminated (" + std::string(to_string(msg.tag)) + " from " +
                             std::to_string(msg.src) + ")");
  Inbox& inbox = *inboxes_[msg.dst];
  {
    std::lock_guard lock(inbox.mu);
    TranscriptRecord rec;
    rec.kind = TranscriptRecord::Kind::Ctrl;
    rec.src = msg.src;
    rec.dst = msg.dst;
    rec.tag = msg.tag;
    rec.bytes = msg.payload.size();
    transcript_.append(std::move(rec));
    inbox.lanes[msg.src].push_back(std::move(msg));
    ++inbox.queued;
  }
  inbox.cv.notify_all();
}

std::optional<Header> Transport::iprobe(Rank self) {
  Inbox& inbox = *inboxes_.at(self);
  std::lock_guard lock(inbox.mu);
  if (inbox.queued == 0) return std::nullopt;
  const std::size_t n = inbox.lanes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lane = (inbox.cursor + i) % n;
    if (!inbox.lanes[lane].empty()) {
      const auto& front = inbox.lanes[lane].front();
      return Header{front.src, front.tag};
    }
  }
  return std::nullopt;
}

CtrlMessage Transport::recv_ctrl(Rank self, Rank src, Tag tag) {
  Inbox& inbox = *inboxes_.at(self);
  std::unique_lock lock(inbox.mu);
  auto& lane = inbox.lanes.at(src);
  for (;;) {
    for (auto it = lane.begin(); it != lane.end(); ++it) {
      if (it->tag == tag) {
        CtrlMessage msg = std::move(*it);
        lane.erase(it);
        --inbox.queued;
        inbox.cursor = (static_cast<std::size_t>(src) + 1) % inbox.lanes.size();
        return msg;
      }
    }
    if (closed_[src].load())
      throw ChannelClosedError("recv_ctrl: " + describe(topology_.unit(src)) +
                               " terminated without sending " + std::string(to_string(tag)));
    inbox.cv.wait(lock);
  }
}

bool Transport::wait_inbound(Rank self, std::chrono::nanoseconds timeout) {
  Inbox& inbox = *inboxes_.at(self);
  std::unique_lock lock(inbox.mu);
  return inbox.cv.wait_for(lock, timeout, [&] { return inbox.queued > 0; });
}

std::size_t Transport::pending(Rank self) const {
  const Inbox& inbox = *inboxes_.at(self);
  std::lock_guard lock(inbox.mu);
  return inbox.queued;
}

TransferToken Transport::start(Rank accessor, const GlobalPtr& remote, const std::byte* from,
                               std::byte* to, std::size_t nbytes, bool is_read) {
  Pinned pinned = memory_.pin(remote, nbytes);
  if (is_read) from = pinned.view.data();
  else to = pinned.view.data();

  TransferToken token;
  token.id = next_token_.fetch_add(1);
  token.accessor = accessor;
  token.dest = remote.unit;
  token.segid = remote.segid;
  token.bytes = nbytes;
  token.inter_node = !topology_.same_node(accessor, remote.unit);
  token.issue_time = Clock::now();

  TranscriptRecord rec;
  rec.src = accessor;
  rec.dst = remote.unit;
  rec.segid = remote.segid;
  rec.bytes = nbytes;

  if (!token.inter_node) {
    token.complete_time = token.issue_time;
    if (nbytes > 0) std::memmove(to, from, nbytes);
    rec.kind = TranscriptRecord::Kind::Copy;
    transcript_.append(std::move(rec));
    return token;
  }

  token.complete_time =
      token.issue_time + transfer_duration(nbytes, latency_, bandwidth_, dilation_);
  rec.kind = TranscriptRecord::Kind::Xfer;
  transcript_.append(std::move(rec));
  Outbox& out = *outboxes_.at(accessor);
  std::lock_guard lock(out.mu);
  out.in_flight.push_back(InFlight{token, std::move(pinned.keepalive), from, to});
  return token;
}

TransferToken Transport::rma_read(Rank accessor, const GlobalPtr& remote, LocalView into) {
  return start(accessor, remote, nullptr, into.data(), into.size(), true);
}

TransferToken Transport::rma_write(Rank accessor, ConstView from, const GlobalPtr& remote) {
  return start(accessor, remote, from.data(), nullptr, from.size(), false);
}

std::size_t Transport::flush(Rank accessor, Rank dest, std::uint32_t segid) {
  std::vector<InFlight> due;
  {
    Outbox& out = *outboxes_.at(accessor);
    std::lock_guard lock(out.mu);
    for (auto it = out.in_flight.begin(); it != out.in_flight.end();) {
      if (it->token.dest == dest && it->token.segid == segid) {
        due.push_back(std::move(*it));
        it = out.in_flight.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (due.empty()) return 0;

  std::uint64_t bytes = 0;
  for (auto& t : due) {
    if (Clock::now() < t.token.complete_time) std::this_thread::sleep_until(t.token.complete_time);
    if (t.token.bytes > 0) std::memmove(t.to, t.from, t.token.bytes);
    bytes += t.token.bytes;
  }
  TranscriptRecord rec;
  rec.kind = TranscriptRecord::Kind::Flush;
  rec.src = accessor;
  rec.dst = dest;
  rec.segid = segid;
  rec.bytes = bytes;
  transcript_.append(std::move(rec));
  return due.size();
}

std::size_t Transport::outstanding(Rank accessor, Rank dest, std::uint32_t segid) const {
  const Outbox& out = *outboxes_.at(accessor);
  std::lock_guard lock(out.mu);
  std::size_t n = 0;
  for (const auto& t : out.in_flight)
    if (t.token.dest == dest && t.token.segid == segid) ++n;
  return n;
}

std::size_t Transport::outstanding(Rank accessor) const {
  const Outbox& out = *outboxes_.at(accessor);
  std::lock_guard lock(out.mu);
  return out.in_flight.size();
}

void Transport::close(Rank unit) {
  closed_[unit].store(true);
  for (auto& inbox : inboxes_) {
    { std::lock_guard lock(inbox->mu); }
    inbox->cv.notify_all();
  }
}

bool Transport::closed(Rank unit) const { return closed_[unit].load(); }

void Transport::note_error(Rank unit, Rank peer, std::string what) {
  TranscriptRecord rec;
  rec.kind = TranscriptRecord::Kind::Error;
  rec.src = unit;
  rec.dst = peer;
  rec.note = std::move(what);
  transcript_.append(std::move(rec));
}

}  // namespace pgas
