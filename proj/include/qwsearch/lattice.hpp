#pragma once

// Geometry of the L x L periodic grid, its 2x2 cell decomposition, and
// matrix-free application of the free, oracle and Kerr-type Hamiltonians.
//
// Vertices are stored row-major over (v_x, v_y): index = v_x * L + v_y.
// All neighbour arithmetic is modulo L.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qwsearch/errors.hpp"

namespace qwsearch {

using Complex = std::complex<double>;
using Amplitudes = std::vector<Complex>;

/// Tolerance on |<psi|psi> - 1| accepted when a WalkerState is constructed.
inline constexpr double kNormTolerance = 1e-9;

struct VertexCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const VertexCoord&, const VertexCoord&) = default;
};

/// Cell label r in [0, l)^2 and internal index sigma in Z_2^2.
struct CellCoord {
  std::array<int, 2> cell{0, 0};
  std::array<int, 2> internal{0, 0};

  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

class GridSpec {
 public:
  explicit GridSpec(int side) : side_(side) {
    if (side < 4 || side % 2 != 0) {
      throw DomainError("grid side must be even and >= 4, got " + std::to_string(side));
    }
  }

  /// Grid of N vertices; N must be the square of an even side >= 4.
  static GridSpec from_vertex_count(std::int64_t n_vertices) {
    const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n_vertices))));
    if (n_vertices <= 0 || side * side != n_vertices) {
      throw DomainError("vertex count " + std::to_string(n_vertices) + " is not a perfect square");
    }
    return GridSpec(static_cast<int>(side));
  }

  int side() const noexcept { return side_; }
  std::size_t vertices() const noexcept { return static_cast<std::size_t>(side_) * side_; }
  int cell_side() const noexcept { return side_ / 2; }
  std::size_t cells() const noexcept { return vertices() / 4; }

  bool contains(VertexCoord v) const noexcept {
    return v.x >= 0 && v.x < side_ && v.y >= 0 && v.y < side_;
  }

  std::size_t index(VertexCoord v) const noexcept {
    return static_cast<std::size_t>(v.x) * side_ + static_cast<std::size_t>(v.y);
  }

  VertexCoord coord(std::size_t index) const noexcept {
    return {static_cast<int>(index / side_), static_cast<int>(index % side_)};
  }

  /// Reduces arbitrary integer coordinates onto the torus.
  VertexCoord wrap(int x, int y) const noexcept {
    auto mod = [this](int a) { return ((a % side_) + side_) % side_; };
    return {mod(x), mod(y)};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int side_;
};

inline CellCoord vertex_to_cell(VertexCoord v, const GridSpec& grid) {
  if (!grid.contains(v)) {
    throw DomainError("vertex (" + std::to_string(v.x) + "," + std::to_string(v.y) +
                      ") outside grid of side " + std::to_string(grid.side()));
  }
  // v is non-negative, so integer division is the floor.
  CellCoord c;
  c.cell = {v.x / 2, v.y / 2};
  c.internal = {v.x - 2 * c.cell[0], v.y - 2 * c.cell[1]};
  return c;
}

inline VertexCoord cell_to_vertex(const CellCoord& c, const GridSpec& grid) {
  const int l = grid.cell_side();
  for (int i = 0; i < 2; ++i) {
    if (c.cell[i] < 0 || c.cell[i] >= l || (c.internal[i] != 0 && c.internal[i] != 1)) {
      throw DomainError("cell coordinate outside grid of cell side " + std::to_string(l));
    }
  }
  return {2 * c.cell[0] + c.internal[0], 2 * c.cell[1] + c.internal[1]};
}

/// The searched vertex |w, alpha>.
struct MarkedVertex {
  std::array<int, 2> cell{0, 0};
  std::array<int, 2> internal{0, 0};

  /// w = (l/2, l/2), alpha = (0, 0).
  static MarkedVertex centered(const GridSpec& grid) {
    const int h = grid.cell_side() / 2;
    return {{h, h}, {0, 0}};
  }

  VertexCoord vertex(const GridSpec& grid) const { return cell_to_vertex({cell, internal}, grid); }
  std::size_t index(const GridSpec& grid) const { return grid.index(vertex(grid)); }

  friend bool operator==(const MarkedVertex&, const MarkedVertex&) = default;
};

/// Unit-norm amplitude vector over the vertices of a grid.
class WalkerState {
 public:
  WalkerState(const GridSpec& grid, Amplitudes amplitudes, double tolerance = kNormTolerance)
      : grid_(grid), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != grid_.vertices()) {
      throw DomainError("state has " + std::to_string(amplitudes_.size()) + " amplitudes, grid has " +
                        std::to_string(grid_.vertices()) + " vertices");
    }
    const double drift = std::abs(norm_squared() - 1.0);
    if (!(drift <= tolerance)) {
      throw DomainError("state is not normalised: |norm^2 - 1| = " + std::to_string(drift));
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  const Complex& operator[](std::size_t i) const noexcept { return amplitudes_[i]; }
  std::size_t size() const noexcept { return amplitudes_.size(); }

  double norm_squared() const noexcept {
    double sum = 0.0;
    for (const auto& z : amplitudes_) sum += std::norm(z);
    return sum;
  }

  /// Releases the storage; the state is empty afterwards.
  Amplitudes take() && { return std::move(amplitudes_); }

 private:
  GridSpec grid_;
  Amplitudes amplitudes_;
};

/// <a|b>, summed in index order.
inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  Complex sum{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

inline double norm_squared(std::span<const Complex> a) {
  double sum = 0.0;
  for (const auto& z : a) sum += std::norm(z);
  return sum;
}

namespace detail {

inline void check_size(std::span<const Complex> psi, const GridSpec& grid) {
  if (psi.size() != grid.vertices()) {
    throw DomainError("amplitude vector of size " + std::to_string(psi.size()) + " for grid with " +
                      std::to_string(grid.vertices()) + " vertices");
  }
}

}  // namespace detail

/// The four non-zero entries of the column H0|v>: H0|v> = sum_k coeff[k] |index[k]>.
struct Neighborhood {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> coeff{};
};

inline Neighborhood free_column(VertexCoord v, const GridSpec& grid) {
  const double sx = (v.x & 1) ? -1.0 : 1.0;
  const double sxy = ((v.x + v.y) & 1) ? -1.0 : 1.0;
  Neighborhood nb;
  nb.index = {grid.index(grid.wrap(v.x + 1, v.y)), grid.index(grid.wrap(v.x - 1, v.y)),
              grid.index(grid.wrap(v.x, v.y + 1)), grid.index(grid.wrap(v.x, v.y - 1))};
  nb.coeff = {sx, -sx, sxy, -sxy};
  return nb;
}

/// (H0 psi)_v for a single vertex. H0 is real symmetric, so the row at v has
/// the same support and signs as the column.
inline Complex free_element(std::span<const Complex> psi, VertexCoord v, const GridSpec& grid) {
  const Neighborhood nb = free_column(v, grid);
  return nb.coeff[0] * psi[nb.index[0]] + nb.coeff[1] * psi[nb.index[1]] +
         nb.coeff[2] * psi[nb.index[2]] + nb.coeff[3] * psi[nb.index[3]];
}

/// out = H0 psi.  out must not alias psi.
inline void apply_free_hamiltonian(std::span<const Complex> psi, std::span<Complex> out, const GridSpec& grid) {
  detail::check_size(psi, grid);
  detail::check_size(out, grid);
  const int L = grid.side();
  for (int x = 0; x < L; ++x) {
    const int xp = (x + 1 == L) ? 0 : x + 1;
    const int xm = (x == 0) ? L - 1 : x - 1;
    const double sx = (x & 1) ? -1.0 : 1.0;
    const Complex* row = psi.data() + static_cast<std::size_t>(x) * L;
    const Complex* row_p = psi.data() + static_cast<std::size_t>(xp) * L;
    const Complex* row_m = psi.data() + static_cast<std::size_t>(xm) * L;
    Complex* dst = out.data() + static_cast<std::size_t>(x) * L;
    for (int y = 0; y < L; ++y) {
      const int yp = (y + 1 == L) ? 0 : y + 1;
      const int ym = (y == 0) ? L - 1 : y - 1;
      const double sxy = ((x + y) & 1) ? -1.0 : 1.0;
      dst[y] = sx * (row_p[y] - row_m[y]) + sxy * (row[yp] - row[ym]);
    }
  }
}

inline Amplitudes apply_free_hamiltonian(std::span<const Complex> psi, const GridSpec& grid) {
  Amplitudes out(grid.vertices());
  apply_free_hamiltonian(psi, out, grid);
  return out;
}

/// H_oracle psi = -|m><m|H0 psi - H0|m><m|psi>.
inline Amplitudes apply_oracle(std::span<const Complex> psi, const MarkedVertex& marked, const GridSpec& grid) {
  detail::check_size(psi, grid);
  const VertexCoord m = marked.vertex(grid);
  const std::size_t mi = grid.index(m);
  Amplitudes out(grid.vertices(), Complex{0.0, 0.0});
  out[mi] = -free_element(psi, m, grid);
  const Neighborhood nb = free_column(m, grid);
  for (int k = 0; k < 4; ++k) out[nb.index[k]] -= nb.coeff[k] * psi[mi];
  return out;
}

/// out = (H0 + H_oracle) psi, the search Hamiltonian H_L.  The marked row is
/// set to exactly zero and the marked column is removed from the neighbours.
inline void apply_search_hamiltonian(std::span<const Complex> psi, std::span<Complex> out,
                                     const MarkedVertex& marked, const GridSpec& grid) {
  apply_free_hamiltonian(psi, out, grid);
  const VertexCoord m = marked.vertex(grid);
  const std::size_t mi = grid.index(m);
  const Neighborhood nb = free_column(m, grid);
  for (int k = 0; k < 4; ++k) out[nb.index[k]] -= nb.coeff[k] * psi[mi];
  out[mi] = Complex{0.0, 0.0};
}

inline Amplitudes apply_search_hamiltonian(std::span<const Complex> psi, const MarkedVertex& marked,
                                           const GridSpec& grid) {
  Amplitudes out(grid.vertices());
  apply_search_hamiltonian(psi, out, marked, grid);
  return out;
}

/// out = H_NL psi with (H_NL psi)_v = -g |psi_v|^2 psi_v.
inline void apply_nonlinear(std::span<const Complex> psi, std::span<Complex> out, double g) {
  if (g < 0.0) throw DomainError("nonlinear coupling g must be non-negative");
  for (std::size_t i = 0; i < psi.size(); ++i) out[i] = -g * std::norm(psi[i]) * psi[i];
}

inline Amplitudes apply_nonlinear(std::span<const Complex> psi, double g) {
  Amplitudes out(psi.size());
  apply_nonlinear(psi, out, g);
  return out;
}

/// |Gamma> = (1/2) H0 |m>: four amplitudes of +-1/2 on the neighbours of m.
inline WalkerState target_state(const MarkedVertex& marked, const GridSpec& grid) {
  Amplitudes amps(grid.vertices(), Complex{0.0, 0.0});
  const Neighborhood nb = free_column(marked.vertex(grid), grid);
  for (int k = 0; k < 4; ++k) amps[nb.index[k]] = 0.5 * nb.coeff[k];
  return WalkerState(grid, std::move(amps));
}

/// |s> = sqrt(4/N) sum_r |r, alpha>.
inline WalkerState initial_state(std::array<int, 2> internal, const GridSpec& grid) {
  if ((internal[0] != 0 && internal[0] != 1) || (internal[1] != 0 && internal[1] != 1)) {
    throw DomainError("internal index must be a pair of bits");
  }
  Amplitudes amps(grid.vertices(), Complex{0.0, 0.0});
  const double value = 2.0 / std::sqrt(static_cast<double>(grid.vertices()));
  const int l = grid.cell_side();
  for (int rx = 0; rx < l; ++rx) {
    for (int ry = 0; ry < l; ++ry) {
      amps[grid.index({2 * rx + internal[0], 2 * ry + internal[1]})] = Complex{value, 0.0};
    }
  }
  return WalkerState(grid, std::move(amps));
}

/// Probability of finding the walker on the marked vertex or one of its four
/// lattice neighbours.
inline double ball_probability(std::span<const Complex> psi, const MarkedVertex& marked, const GridSpec& grid) {
  detail::check_size(psi, grid);
  const VertexCoord m = marked.vertex(grid);
  double p = std::norm(psi[grid.index(m)]);
  for (const std::size_t i : free_column(m, grid).index) p += std::norm(psi[i]);
  return p;
}

inline double ball_probability(const WalkerState& psi, const MarkedVertex& marked) {
  return ball_probability(psi.amplitudes(), marked, psi.grid());
}

}  // namespace qwsearch
