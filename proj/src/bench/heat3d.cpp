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

#include "pgas/bench/heat3d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>

#include "pgas/error.hpp"
#include "pgas/rma.hpp"

namespace pgas::bench {

double HeatConfig::kappa_max() const {
  double lo = *std::min_element(boundary.begin(), boundary.end());
  double hi = *std::max_element(boundary.begin(), boundary.end());
  if (initial != InitialField::Zero) {
    lo = std::min(lo, std::min(0.0, initial_value));
    hi = std::max(hi, std::max(0.0, initial_value));
  } else {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  return std::max(kappa(lo), kappa(hi));
}

double HeatConfig::dt_bound() const { return dx * dx / (6.0 * kappa_max()); }

void HeatConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (grid[a] == 0) throw ArgumentError("heat3d: grid dimensions must be positive");
    if (decomposition[a] == 0 || grid[a] % decomposition[a] != 0)
      throw ArgumentError("heat3d: decomposition " + grid_string(decomposition) +
                          " does not tile grid " + grid_string(grid));
  }
  if (!(dx > 0) || !(dt > 0)) throw ArgumentError("heat3d: dt and dx must be positive");
  if (!(kappa_max() > 0)) throw NumericError("heat3d: diffusivity must stay positive");
  if (dt > dt_bound()) {
    std::ostringstream os;
    os << "heat3d: dt=" << dt << " violates the explicit stability bound dx^2/(6*kappa_max)="
       << dt_bound();
    throw NumericError(os.str());
  }
}

double initial_value(const HeatConfig& c, std::size_t i, std::size_t j, std::size_t k) {
  switch (c.initial) {
    case InitialField::Zero: return 0.0;
    case InitialField::Constant: return c.initial_value;
    case InitialField::Bump: {
      // Folding the index makes the bump exactly mirror-symmetric.
      auto profile = [](std::size_t x, std::size_t n) {
        const std::size_t d = std::min(x, n - 1 - x);
        return std::sin(std::numbers::pi * (static_cast<double>(d) + 0.5) / static_cast<double>(n));
      };
      return c.initial_value * profile(i, c.grid[0]) * profile(j, c.grid[1]) * profile(k, c.grid[2]);
    }
  }
  return 0.0;
}

double field_checksum(std::span<const double> field) {
  double sum = 0.0;
  for (double v : field) sum += v;
  return sum;
}

std::vector<double> heat3d_serial_oracle(const HeatConfig& c) {
  c.validate();
  const std::size_t nx = c.grid[0], ny = c.grid[1], nz = c.grid[2];
  const std::size_t sx = nx + 2, sxy = (nx + 2) * (ny + 2);
  std::vector<double> a(sxy * (nz + 2), 0.0);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return (k * (ny + 2) + j) * sx + i; };

  for (std::size_t k = 1; k <= nz; ++k)
    for (std::size_t j = 1; j <= ny; ++j) {
      a[at(0, j, k)] = c.boundary[0];
      a[at(nx + 1, j, k)] = c.boundary[1];
    }
  for (std::size_t k = 1; k <= nz; ++k)
    for (std::size_t i = 1; i <= nx; ++i) {
      a[at(i, 0, k)] = c.boundary[2];
      a[at(i, ny + 1, k)] = c.boundary[3];
    }
  for (std::size_t j = 1; j <= ny; ++j)
    for (std::size_t i = 1; i <= nx; ++i) {
      a[at(i, j, 0)] = c.boundary[4];
      a[at(i, j, nz + 1)] = c.boundary[5];
    }
  for (std::size_t k = 1; k <= nz; ++k)
    for (std::size_t j = 1; j <= ny; ++j)
      for (std::size_t i = 1; i <= nx; ++i) a[at(i, j, k)] = initial_value(c, i - 1, j - 1, k - 1);
  std::vector<double> b = a;

  const double r = c.dt / (c.dx * c.dx);
  for (std::size_t it = 0; it < c.iterations; ++it) {
    for (std::size_t k = 1; k <= nz; ++k)
      for (std::size_t j = 1; j <= ny; ++j)
        for (std::size_t i = 1; i <= nx; ++i) {
          const std::size_t id = at(i, j, k);
          const double u = a[id];
          const double ku = c.kappa(u);
          double acc = 0.0;
          double v = a[id - 1];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          v = a[id + 1];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          v = a[id - sx];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          v = a[id + sx];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          v = a[id - sxy];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          v = a[id + sxy];
          acc += 0.5 * (ku + c.kappa(v)) * (v - u);
          b[id] = u + r * acc;
        }
    std::swap(a, b);
  }

  std::vector<double> field(nx * ny * nz);
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) field[(k * ny + j) * nx + i] = a[at(i + 1, j + 1, k + 1)];
  return field;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Faces in order x-, x+, y-, y+, z-, z+.
constexpr int opposite(int f) { return f ^ 1; }

// A block with one ghost layer, plus the stencil sweep over it.
struct Block {
  std::size_t bx, by, bz, sx, sxy;
  std::vector<double> cur, next;

  Block(std::size_t x, std::size_t y, std::size_t z)
      : bx(x), by(y), bz(z), sx(x + 2), sxy((x + 2) * (y + 2)),
        cur(sxy * (z + 2), 0.0), next(cur) {}

  std::size_t at(std::size_t i, std::size_t j, std::size_t k) const { return (k * (by + 2) + j) * sx + i; }

  std::size_t face_cells(int f) const {
    return f < 2 ? by * bz : f < 4 ? bx * bz : bx * by;
  }

  // Visits the boundary layer (inner = true) or ghost layer of face f in
  // the order shared by pack and unpack.
  template <typename F>
  void for_face(int f, bool inner, F&& fn) const {
    const std::size_t lo = inner ? 1 : 0;
    std::size_t n = 0;
    switch (f / 2) {
      case 0: {
        const std::size_t i = (f & 1) ? (inner ? bx : bx + 1) : lo;
        for (std::size_t k = 1; k <= bz; ++k)
          for (std::size_t j = 1; j <= by; ++j) fn(n++, at(i, j, k));
        break;
      }
      case 1: {
        const std::size_t j = (f & 1) ? (inner ? by : by + 1) : lo;
        for (std::size_t k = 1; k <= bz; ++k)
          for (std::size_t i = 1; i <= bx; ++i) fn(n++, at(i, j, k));
        break;
      }
      default: {
        const std::size_t k = (f & 1) ? (inner ? bz : bz + 1) : lo;
        for (std::size_t j = 1; j <= by; ++j)
          for (std::size_t i = 1; i <= bx; ++i) fn(n++, at(i, j, k));
        break;
      }
    }
  }

  void update(const HeatConfig& c, double r, std::size_t id) {
    const double u = cur[id];
    const double ku = c.kappa(u);
    double acc = 0.0;
    double v = cur[id - 1];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    v = cur[id + 1];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    v = cur[id - sx];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    v = cur[id + sx];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    v = cur[id - sxy];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    v = cur[id + sxy];
    acc += 0.5 * (ku + c.kappa(v)) * (v - u);
    next[id] = u + r * acc;
  }

  // Cells whose stencil stays inside the block.
  void sweep_interior(const HeatConfig& c, double r) {
    for (std::size_t k = 2; k + 1 <= bz; ++k)
      for (std::size_t j = 2; j + 1 <= by; ++j)
        for (std::size_t i = 2; i + 1 <= bx; ++i) update(c, r, at(i, j, k));
  }

  // Cells touching a ghost.
  void sweep_shell(const HeatConfig& c, double r) {
    for (std::size_t k = 1; k <= bz; ++k)
      for (std::size_t j = 1; j <= by; ++j) {
        if (k == 1 || k == bz || j == 1 || j == by) {
          for (std::size_t i = 1; i <= bx; ++i) update(c, r, at(i, j, k));
        } else {
          update(c, r, at(1, j, k));
          if (bx > 1) update(c, r, at(bx, j, k));
        }
      }
  }
};

struct UnitStats {
  double total_ms = 0, comm_ms = 0, calc_ms = 0;
};

}  // namespace

HeatResult heat3d(Runtime& rt, const HeatConfig& c) {
  c.validate();
  const Team& team = rt.team_all();
  const auto [px, py, pz] = c.decomposition;
  if (px * py * pz != team.size())
    throw ArgumentError("heat3d: decomposition " + grid_string(c.decomposition) + " needs " +
                        std::to_string(px * py * pz) + " units, team has " +
                        std::to_string(team.size()));
  const std::size_t bx = c.grid[0] / px, by = c.grid[1] / py, bz = c.grid[2] / pz;
  const double r = c.dt / (c.dx * c.dx);

  HeatResult result;
  result.field.assign(c.cells(), 0.0);
  std::vector<UnitStats> stats(team.size());

  rt.run([&](Unit& u) {
    std::size_t pos = 0;
    while (team.members[pos].rank != u.rank()) ++pos;
    const std::size_t cx = pos % px, cy = (pos / px) % py, cz = pos / (px * py);
    const std::array<std::size_t, 3> coord{cx, cy, cz};
    const std::array<std::size_t, 3> dims{px, py, pz};
    std::array<std::optional<Rank>, 6> neighbor;
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      auto nc = coord;
      if (f & 1) {
        if (nc[axis] + 1 == dims[axis]) continue;
        ++nc[axis];
      } else {
        if (nc[axis] == 0) continue;
        --nc[axis];
      }
      neighbor[f] = team.members[(nc[2] * py + nc[1]) * px + nc[0]].rank;
    }

    Block blk(bx, by, bz);
    // Segment: two parities of outgoing faces, then incoming halos.
    std::array<std::size_t, 6> face_off{};
    std::size_t faces_total = 0;
    for (int f = 0; f < 6; ++f) {
      face_off[f] = faces_total;
      faces_total += blk.face_cells(f);
    }
    auto send_off = [&](std::size_t parity, int f) { return (parity * faces_total + face_off[f]) * sizeof(double); };
    auto recv_off = [&](int f) { return (2 * faces_total + face_off[f]) * sizeof(double); };
    const std::size_t seg_bytes = 3 * faces_total * sizeof(double);

    const GlobalPtr seg = team_alloc_aligned(u, team, seg_bytes);
    const Pinned mem = rt.memory().pin(seg, seg_bytes);
    std::byte* base = mem.view.data();
    auto slot = [&](std::size_t offset) { return reinterpret_cast<double*>(base + offset); };

    for (std::size_t k = 1; k <= bz; ++k)
      for (std::size_t j = 1; j <= by; ++j)
        for (std::size_t i = 1; i <= bx; ++i)
          blk.cur[blk.at(i, j, k)] =
              initial_value(c, cx * bx + i - 1, cy * by + j - 1, cz * bz + k - 1);
    for (int f = 0; f < 6; ++f) {
      if (neighbor[f]) continue;
      blk.for_face(f, false, [&](std::size_t, std::size_t id) {
        blk.cur[id] = c.boundary[f];
        blk.next[id] = c.boundary[f];
      });
    }
    auto pack = [&](std::size_t parity) {
      for (int f = 0; f < 6; ++f) {
        if (!neighbor[f]) continue;
        double* out = slot(send_off(parity, f));
        blk.for_face(f, true, [&](std::size_t n, std::size_t id) { out[n] = blk.cur[id]; });
      }
    };
    pack(0);
    rt.barrier(u, team);

    UnitStats s;
    const auto start = Clock::now();
    std::vector<Handle> handles;
    for (std::size_t it = 0; it < c.iterations; ++it) {
      const std::size_t parity = it & 1;
      auto t = Clock::now();
      handles.clear();
      for (int f = 0; f < 6; ++f) {
        if (!neighbor[f]) continue;
        const std::size_t bytes = blk.face_cells(f) * sizeof(double);
        const GlobalPtr src{*neighbor[f], seg.segid, seg.index, send_off(parity, opposite(f))};
        handles.push_back(get_nb(u, src, LocalView(base + recv_off(f), bytes), bytes));
      }
      s.comm_ms += ms_since(t);

      t = Clock::now();
      blk.sweep_interior(c, r);
      s.calc_ms += ms_since(t);

      t = Clock::now();
      waitall(u, handles);
      s.comm_ms += ms_since(t);

      t = Clock::now();
      for (int f = 0; f < 6; ++f) {
        if (!neighbor[f]) continue;
        const double* in = slot(recv_off(f));
        blk.for_face(f, false, [&](std::size_t n, std::size_t id) { blk.cur[id] = in[n]; });
      }
      blk.sweep_shell(c, r);
      std::swap(blk.cur, blk.next);
      pack(parity ^ 1);
      s.calc_ms += ms_since(t);

      rt.barrier(u, team);
    }
    s.total_ms = ms_since(start);

    for (std::size_t k = 0; k < bz; ++k)
      for (std::size_t j = 0; j < by; ++j)
        for (std::size_t i = 0; i < bx; ++i) {
          const std::size_t gi = cx * bx + i, gj = cy * by + j, gk = cz * bz + k;
          result.field[(gk * c.grid[1] + gj) * c.grid[0] + gi] = blk.cur[blk.at(i + 1, j + 1, k + 1)];
        }
    stats[pos] = s;
    rt.barrier(u, team);
    team_free(u, seg);
  });

  result.checksum = field_checksum(result.field);
  if (!std::isfinite(result.checksum)) {
    std::ostringstream os;
    os << "heat3d: temperature field became non-finite; dt=" << c.dt
       << " against the stability bound dx^2/(6*kappa_max)=" << c.dt_bound();
    throw NumericError(os.str());
  }
  double fraction = 0;
  for (const auto& s : stats) {
    result.total_t_ms = std::max(result.total_t_ms, s.total_ms);
    result.comm_t_ms += s.comm_ms;
    fraction += s.total_ms > 0 ? s.calc_ms / s.total_ms : 0.0;
  }
  result.comm_t_ms /= static_cast<double>(stats.size());
  result.calc_fraction = fraction / static_cast<double>(stats.size());
  return result;
}

HeatResult heat3d(const Config& base, const HeatConfig& config, ProgressMode mode) {
  Config cfg = base;
  cfg.mode = mode;
  auto rt = Runtime::init(cfg);
  HeatResult r = heat3d(*rt, config);
  rt->finalize();
  return r;
}

std::array<std::size_t, 3> choose_decomposition(std::size_t units,
                                                const std::array<std::size_t, 3>& grid) {
  std::array<std::size_t, 3> best{0, 0, 0};
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t x = 1; x <= units; ++x) {
    if (units % x || grid[0] % x) continue;
    for (std::size_t y = 1; y <= units / x; ++y) {
      if ((units / x) % y || grid[1] % y) continue;
      const std::size_t z = units / x / y;
      if (grid[2] % z) continue;
      const double bx = double(grid[0]) / x, by = double(grid[1]) / y, bz = double(grid[2]) / z;
      const double surface = bx * by + by * bz + bx * bz;
      const std::size_t spread = std::max({x, y, z}) - std::min({x, y, z});
      const std::size_t best_spread =
          std::max({best[0], best[1], best[2]}) - std::min({best[0], best[1], best[2]});
      if (surface < best_cost || (surface == best_cost && spread < best_spread)) {
        best_cost = surface;
        best = {x, y, z};
      }
    }
  }
  if (best[0] == 0)
    throw ArgumentError("no decomposition of " + std::to_string(units) + " units tiles grid " +
                        grid_string(grid));
  return best;
}

std::string grid_string(const std::array<std::size_t, 3>& g) {
  return std::to_string(g[0]) + "x" + std::to_string(g[1]) + "x" + std::to_string(g[2]);
}

std::array<std::size_t, 3> parse_grid(const std::string& text) {
  std::array<std::size_t, 3> g{};
  std::istringstream in(text);
  char sep1 = 0, sep2 = 0;
  if (!(in >> g[0] >> sep1 >> g[1] >> sep2 >> g[2]) || sep1 != 'x' || sep2 != 'x' || !in.eof())
    throw ArgumentError("grid must look like NXxNYxNZ, got '" + text + "'");
  return g;
}

}  // namespace pgas::bench
