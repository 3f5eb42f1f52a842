#pragma once

#include "plate/types.hpp"

namespace plate {

// Uniform grid on [0, L] with a material interface at a grid node.
//
// Node 0 is the clamped end (Dirichlet, Γ₁), node N-1 is the feedback end
// (Γ₂) and node `interface_index` sits on Γ₀. `alpha` holds c1 on nodes
// 0..interface_index and c2 beyond; the interface node itself is shared by
// both phases and the stencil uses effective_alpha() there.
struct Mesh1D {
  double length = 1.0;
  double interface_x = 0.5;
  Index nodes = 0;
  double spacing = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  Index interface_index = 0;
  Vec alpha;

  Index last() const { return nodes - 1; }
  double x(Index j) const { return static_cast<double>(j) * spacing; }
  Vec coordinates() const;

  bool is_interface(Index j) const { return j == interface_index; }

  // Harmonic mean of c1, c2 on the shared node, alpha(j) elsewhere. With it
  // the trapezoid weight h/effective_alpha at the interface equals the sum of
  // the two half-cell weights h/(2 c1) + h/(2 c2).
  double effective_alpha(Index j) const;

  // Trapezoid weights (h inside, h/2 at both ends).
  Vec quadrature_weights() const;

  // Trapezoid weights divided by effective_alpha: the discrete L²(α⁻¹ dx).
  Vec metric_weights() const;
};

Mesh1D build_mesh(double length, double interface_x, double c1, double c2, Index nodes);

// Closest interface coordinate that lies on the grid with `nodes` nodes.
double snap_interface(double length, double interface_x, Index nodes);

// Tensor-product sampling lattice over [x_lo, x_hi] × [y_lo, y_hi], both ends
// included.
struct Grid2D {
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 1.0;
  Index nx = 0, ny = 0;
  Vec xs, ys;

  double dx() const { return (x_hi - x_lo) / static_cast<double>(nx - 1); }
  double dy() const { return (y_hi - y_lo) / static_cast<double>(ny - 1); }
  Vec2 point(Index i, Index j) const { return {xs(i), ys(j)}; }
  bool contains(const Vec2& p, double slack = 0.0) const {
    return p.x() >= x_lo - slack && p.x() <= x_hi + slack && p.y() >= y_lo - slack &&
           p.y() <= y_hi + slack;
  }
  double distance_to_boundary(const Vec2& p) const;
};

Grid2D build_grid(double x_lo, double x_hi, double y_lo, double y_hi, Index nx, Index ny);

}  // namespace plate
