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

#include "pgas/rma.hpp"

#include <algorithm>
#include <cstring>
#include <utility>

#include "pgas/error.hpp"
#include "pgas/packet.hpp"
#include "pgas/progress.hpp"
#include "pgas/runtime.hpp"

namespace pgas {

std::string describe(const Handle& h) {
  std::string s = "handle #" + std::to_string(h.seq) + " (" +
                   (h.op == RmaOp::Get ? "GET" : "PUT") + " by unit " + std::to_string(h.origin);
  if (h.agent) s += " via agent " + std::to_string(*h.agent);
  return s + ")";
}

namespace {

std::string describe_op(std::uint64_t seq, const detail::PendingOp& op, Rank owner) {
  Handle h;
  h.seq = seq;
  h.op = op.op;
  h.origin = owner;
  if (op.path == detail::Path::Agent) h.agent = op.agent;
  return describe(h) + " on " + describe(op.target);
}

}  // namespace

std::uint64_t OriginState::add(const detail::PendingOp& op) {
  std::lock_guard lock(mu_);
  const std::uint64_t seq = next_seq_++;
  pending_.emplace(seq, op);
  return seq;
}

std::optional<detail::PendingOp> OriginState::take(std::uint64_t seq) {
  std::lock_guard lock(mu_);
  auto it = pending_.find(seq);
  if (it == pending_.end()) return std::nullopt;
  detail::PendingOp op = it->second;
  pending_.erase(it);
  return op;
}

std::size_t OriginState::size() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

std::vector<std::string> OriginState::touching(std::uint32_t segid, Rank owner) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [seq, op] : pending_)
    if (op.target.segid == segid) out.push_back(describe_op(seq, op, owner));
  return out;
}

std::vector<std::string> OriginState::describe_all(Rank owner) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [seq, op] : pending_) out.push_back(describe_op(seq, op, owner));
  return out;
}

namespace {

Handle issue(Unit& origin, const GlobalPtr& gptr, RmaOp op, std::byte* dst, const std::byte* src,
             std::size_t capacity, std::size_t nbytes) {
  Runtime& rt = origin.runtime();
  if (nbytes == 0) throw ArgumentError("zero-length transfer on " + describe(gptr));
  if (capacity < nbytes)
    throw ArgumentError("local view holds " + std::to_string(capacity) + " bytes, " +
                        std::to_string(nbytes) + " requested");
  // Bounds and liveness of the target, whatever the path.
  rt.memory().pin(gptr, nbytes);

  detail::PendingOp pending;
  pending.op = op;
  pending.target = gptr;
  pending.dst = dst;
  pending.src = src;
  pending.nbytes = nbytes;

  Handle h;
  h.op = op;
  h.origin = origin.rank();

  const Config& cfg = rt.config();
  if (cfg.mode == ProgressMode::Agent && nbytes > cfg.threshold_bytes) {
    const std::byte* local = op == RmaOp::Get ? dst : src;
    const auto origin_offset =
        rt.memory().offset_within(origin.rank(), gptr.segid, gptr.index, local, nbytes);
    if (!origin_offset)
      throw ArgumentError("agent path needs the local buffer inside unit " +
                          std::to_string(origin.rank()) + "'s portion of segment " +
                          std::to_string(gptr.segid));
    const Packet packet =
        encode_packet(rt.topology(), rt.memory(), origin.rank(), gptr, *origin_offset, nbytes);
    const UnitId& agent = rt.agent_for(origin.id());
    const PacketFrame frame = encode(packet);
    rt.transport().send_ctrl(CtrlMessage{origin.rank(), agent.rank,
                                         op == RmaOp::Get ? Tag::Get : Tag::Put,
                                         {frame.begin(), frame.end()}});
    pending.path = detail::Path::Agent;
    pending.agent = agent.rank;
    h.agent = agent.rank;
  } else if (cfg.mode == ProgressMode::Deferred) {
    pending.path = detail::Path::Deferred;
  } else {
    pending.path = detail::Path::Direct;
    if (op == RmaOp::Get)
      rt.transport().rma_read(origin.rank(), gptr, LocalView(dst, nbytes));
    else
      rt.transport().rma_write(origin.rank(), ConstView(src, nbytes), gptr);
  }
  h.seq = origin.origin_state().add(pending);
  return h;
}

void start_deferred(Unit& origin, const detail::PendingOp& op) {
  Transport& t = origin.runtime().transport();
  if (op.op == RmaOp::Get)
    t.rma_read(origin.rank(), op.target, LocalView(op.dst, op.nbytes));
  else
    t.rma_write(origin.rank(), ConstView(op.src, op.nbytes), op.target);
}

// One WAIT / WAIT_DONE exchange; true when the agent reported a failure.
bool wait_agent(Unit& origin, Rank agent) {
  Transport& t = origin.runtime().transport();
  t.send_ctrl(CtrlMessage{origin.rank(), agent, Tag::Wait, {}});
  const CtrlMessage done = t.recv_ctrl(origin.rank(), agent, Tag::WaitDone);
  return done.payload.empty() || done.payload[0] != progress::kStatusOk;
}

void check_owner(const Unit& origin, const Handle& h) {
  if (h.origin != origin.rank())
    throw UsageError(describe(h) + " waited on by unit " + std::to_string(origin.rank()));
}

}  // namespace

Handle get_nb(Unit& origin, const GlobalPtr& gptr, LocalView dst, std::size_t nbytes) {
  return issue(origin, gptr, RmaOp::Get, dst.data(), nullptr, dst.size(), nbytes);
}

Handle put_nb(Unit& origin, const GlobalPtr& gptr, ConstView src, std::size_t nbytes) {
  return issue(origin, gptr, RmaOp::Put, nullptr, src.data(), src.size(), nbytes);
}

void wait(Unit& origin, Handle& h) {
  if (h.completed) return;
  check_owner(origin, h);
  auto op = origin.origin_state().take(h.seq);
  h.completed = true;
  if (!op) return;
  Transport& t = origin.runtime().transport();
  switch (op->path) {
    case detail::Path::Agent:
      if (wait_agent(origin, op->agent))
        throw ProtocolError("agent " + std::to_string(op->agent) + " failed a transfer of unit " +
                            std::to_string(origin.rank()));
      break;
    case detail::Path::Deferred:
      start_deferred(origin, *op);
      [[fallthrough]];
    case detail::Path::Direct:
      t.flush(origin.rank(), op->target.unit, op->target.segid);
      break;
  }
}

void waitall(Unit& origin, std::span<Handle> handles) {
  std::vector<detail::PendingOp> ops;
  std::vector<Rank> agents;
  for (auto& h : handles) {
    if (h.completed) continue;
    check_owner(origin, h);
    h.completed = true;
    auto op = origin.origin_state().take(h.seq);
    if (!op) continue;
    if (op->path == detail::Path::Agent) {
      if (std::find(agents.begin(), agents.end(), op->agent) == agents.end())
        agents.push_back(op->agent);
    } else {
      ops.push_back(*op);
    }
  }

  std::vector<Rank> failed;
  for (Rank agent : agents)
    if (wait_agent(origin, agent)) failed.push_back(agent);

  Transport& t = origin.runtime().transport();
  for (const auto& op : ops)
    if (op.path == detail::Path::Deferred) start_deferred(origin, op);
  for (const auto& op : ops) t.flush(origin.rank(), op.target.unit, op.target.segid);

  if (!failed.empty())
    throw ProtocolError("agent " + std::to_string(failed.front()) + " failed a transfer of unit " +
                        std::to_string(origin.rank()));
}

void get(Unit& origin, const GlobalPtr& gptr, LocalView dst, std::size_t nbytes) {
  Handle h = get_nb(origin, gptr, dst, nbytes);
  wait(origin, h);
}

void put(Unit& origin, const GlobalPtr& gptr, ConstView src, std::size_t nbytes) {
  Handle h = put_nb(origin, gptr, src, nbytes);
  wait(origin, h);
}

}  // namespace pgas
