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

#include "pgas/progress.hpp"

#include <algorithm>
#include <string>

#include "pgas/error.hpp"
#include "pgas/packet.hpp"

namespace pgas::progress {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::byte> in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::byte> encode_notice(const SegmentNotice& notice) {
  std::vector<std::byte> out;
  out.reserve(8);
  put_u32(out, notice.index);
  put_u32(out, notice.segid);
  return out;
}

SegmentNotice decode_notice(std::span<const std::byte> payload) {
  if (payload.size() != 8)
    throw ProtocolError("segment notice is " + std::to_string(payload.size()) +
                        " bytes, expected 8");
  return {get_u32(payload.first(4)), get_u32(payload.subspan(4, 4))};
}

Agent::Agent(const UnitId& self, const Topology& topology, Memory& memory, Transport& transport,
             const Config& config)
    : self_(self),
      topology_(topology),
      memory_(memory),
      transport_(transport),
      park_(config.agent_park),
      exits_expected_(topology.exit_senders(self).size()) {
  if (!self.is_agent()) throw UsageError(describe(self) + " cannot run a progress agent");
}

Metrics Agent::metrics() const {
  Metrics m;
  m.requests = requests_.load();
  m.flushes = flushes_.load();
  m.batches = batches_.load();
  m.idle_drains = idle_drains_.load();
  m.wait_drains = wait_drains_.load();
  m.protocol_errors = protocol_errors_.load();
  m.max_queue = max_queue_.load();
  return m;
}

bool Agent::epoch_open(std::uint32_t segid) const {
  std::lock_guard lock(epochs_mu_);
  return open_epochs_.count(segid) != 0;
}

void Agent::run() {
  tune_timer_slack();
  while (step()) {
  }
}

bool Agent::step() {
  if (!running_.load()) return false;
  if (auto header = transport_.iprobe(self_.rank)) {
    dispatch(*header);
  } else if (!queue_.empty()) {
    bump(idle_drains_);
    drain();
  } else {
    transport_.wait_inbound(self_.rank, park_);
  }
  return running_.load();
}

void Agent::dispatch(const Header& header) {
  switch (header.tag) {
    case Tag::Get:
    case Tag::Put: handle_transfer(header); break;
    case Tag::Wait: handle_wait(header); break;
    case Tag::Alloc:
    case Tag::Free: handle_segment(header); break;
    case Tag::Exit: handle_exit(header); break;
    case Tag::WaitDone: {
      transport_.recv_ctrl(self_.rank, header.src, header.tag);
      protocol_error(header.src, "unexpected WAIT_DONE");
      break;
    }
  }
}

void Agent::handle_transfer(const Header& header) {
  const CtrlMessage msg = transport_.recv_ctrl(self_.rank, header.src, header.tag);
  bump(requests_);
  const Rank origin = header.src;
  Packet p;
  try {
    p = decode(msg.payload);
    if (!topology_.same_node(self_.rank, origin))
      throw ProtocolError("origin " + std::to_string(origin) + " is not on this node");
    if ((p.is_shmem == 1) != topology_.same_node(origin, p.dest))
      throw ProtocolError("is_shmem flag disagrees with placement of unit " +
                          std::to_string(p.dest));
    if (p.segid != 0 && !epoch_open(p.segid))
      throw StaleSegmentError("no open access epoch for segment " + std::to_string(p.segid));

    // The origin's bytes are mapped into this address space; the packet
    // only carries their offset inside the origin's portion.
    const Pinned local =
        memory_.pin(GlobalPtr{origin, p.segid, p.index, p.origin_offset}, p.data_size);
    const GlobalPtr target{p.dest, p.segid, p.index, p.target_offset};
    if (header.tag == Tag::Get)
      transport_.rma_read(self_.rank, target, local.view);
    else
      transport_.rma_write(self_.rank, local.view, target);
  } catch (const Error& e) {
    protocol_error(origin, std::string(to_string(header.tag)) + ": " + e.what());
    return;
  }
  queue_.push_back(Request{p.dest, p.segid, origin});
  queue_size_.store(queue_.size());
  std::uint64_t len = queue_.size();
  std::uint64_t seen = max_queue_.load();
  while (len > seen && !max_queue_.compare_exchange_weak(seen, len)) {
  }
}

void Agent::drain() {
  if (queue_.empty()) return;
  bump(batches_);
  while (!queue_.empty()) {
    const Request req = queue_.front();
    queue_.pop_front();
    queue_size_.store(queue_.size());
    // Earlier flushes in this batch may already have covered the target.
    if (transport_.flush(self_.rank, req.dest, req.segid) > 0) bump(flushes_);
  }
}

void Agent::handle_wait(const Header& header) {
  transport_.recv_ctrl(self_.rank, header.src, Tag::Wait);
  if (!queue_.empty()) bump(wait_drains_);
  drain();
  const bool failed = failed_origins_.erase(header.src) > 0;
  transport_.send_ctrl(CtrlMessage{self_.rank, header.src, Tag::WaitDone,
                                   {failed ? kStatusError : kStatusOk}});
}

void Agent::handle_segment(const Header& header) {
  const CtrlMessage msg = transport_.recv_ctrl(self_.rank, header.src, header.tag);
  std::byte status = kStatusOk;
  try {
    const SegmentNotice notice = decode_notice(msg.payload);
    if (header.tag == Tag::Alloc) {
      memory_.attach_agent(notice.segid, notice.index, self_.rank);
      std::lock_guard lock(epochs_mu_);
      open_epochs_.insert(notice.segid);
    } else {
      // Transfers still queued against the segment must land first.
      drain();
      std::lock_guard lock(epochs_mu_);
      if (open_epochs_.erase(notice.segid) == 0)
        throw ProtocolError("FREE for unknown segment " + std::to_string(notice.segid) +
                            " (team " + std::to_string(notice.index) + ")");
    }
  } catch (const Error& e) {
    status = kStatusError;
    bump(protocol_errors_);
    transport_.note_error(self_.rank, header.src,
                          std::string(to_string(header.tag)) + ": " + e.what());
  }
  transport_.send_ctrl(CtrlMessage{self_.rank, header.src, header.tag, {status}});
}

void Agent::handle_exit(const Header& header) {
  transport_.recv_ctrl(self_.rank, header.src, Tag::Exit);
  if (++exits_seen_ < exits_expected_) return;
  drain();
  transport_.send_ctrl(
      CtrlMessage{self_.rank, topology_.node_leader(self_.node).rank, Tag::Exit, {}});
  running_.store(false);
}

void Agent::protocol_error(Rank origin, const std::string& what) {
  bump(protocol_errors_);
  failed_origins_.insert(origin);
  transport_.note_error(self_.rank, origin, what);
}

}  // namespace pgas::progress
