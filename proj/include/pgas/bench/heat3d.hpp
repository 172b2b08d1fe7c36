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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pgas/config.hpp"
#include "pgas/runtime.hpp"

namespace pgas::bench {

enum class Diffusivity { Constant, Linear };

enum class InitialField { Zero, Constant, Bump };

// Explicit-Euler 3D heat conduction on a cell grid with fixed-temperature
// faces. Thermal diffusivity is constant or linear in temperature,
// kappa(T) = kappa0 * (1 + alpha * T); the conductance between two cells is
// the mean of their diffusivities.
struct HeatConfig {
  std::array<std::size_t, 3> grid{32, 32, 32};
  std::size_t iterations = 100;
  std::array<std::size_t, 3> decomposition{1, 1, 1};
  Diffusivity model = Diffusivity::Linear;
  double kappa0 = 1.0;
  double alpha = 0.1;
  double dx = 1.0;
  double dt = 0.1;
  // Face temperatures in order x-, x+, y-, y+, z-, z+.
  std::array<double, 6> boundary{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  InitialField initial = InitialField::Bump;
  double initial_value = 1.0;  // constant value or bump amplitude

  double kappa(double t) const {
    return model == Diffusivity::Constant ? kappa0 : kappa0 * (1.0 + alpha * t);
  }
  double kappa_max() const;
  // dx^2 / (6 kappa_max)
  double dt_bound() const;
  std::size_t cells() const { return grid[0] * grid[1] * grid[2]; }
  // Throws NumericError when dt exceeds the bound, ArgumentError when the
  // decomposition does not tile the grid.
  void validate() const;
};

double initial_value(const HeatConfig& config, std::size_t i, std::size_t j, std::size_t k);

// Single-context reference: the same stencil, same operation order. The
// returned field is x-fastest, nx * ny * nz values.
std::vector<double> heat3d_serial_oracle(const HeatConfig& config);

// Sum of the field in x-fastest order.
double field_checksum(std::span<const double> field);

struct HeatResult {
  double total_t_ms = 0;      // slowest unit's wall time
  double comm_t_ms = 0;       // mean per unit: posting gets plus waitall
  double calc_fraction = 0;   // mean per unit: compute time / wall time
  double checksum = 0;
  std::vector<double> field;  // gathered, x-fastest
};

// Distributed run over Runtime::team_all(); the decomposition must have one
// block per application unit. Halo faces travel through non-blocking gets in
// the runtime's configured progress mode.
HeatResult heat3d(Runtime& runtime, const HeatConfig& config);

// Fresh runtime from `base` with `mode` swapped in.
HeatResult heat3d(const Config& base, const HeatConfig& config, ProgressMode mode);

// Most cubic factorisation of `units` whose factors divide the grid.
std::array<std::size_t, 3> choose_decomposition(std::size_t units,
                                                const std::array<std::size_t, 3>& grid);

std::string grid_string(const std::array<std::size_t, 3>& grid);
std::array<std::size_t, 3> parse_grid(const std::string& text);

}  // namespace pgas::bench
