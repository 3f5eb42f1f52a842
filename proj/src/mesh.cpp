#include "plate/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plate {

Vec Mesh1D::coordinates() const {
  return Vec::LinSpaced(nodes, 0.0, length);
}

double Mesh1D::effective_alpha(Index j) const {
  if (j == interface_index) return 2.0 / (1.0 / c1 + 1.0 / c2);
  return alpha(j);
}

Vec Mesh1D::quadrature_weights() const {
  Vec w = Vec::Constant(nodes, spacing);
  w(0) *= 0.5;
  w(nodes - 1) *= 0.5;
  return w;
}

Vec Mesh1D::metric_weights() const {
  Vec w = quadrature_weights();
  for (Index j = 0; j < nodes; ++j) w(j) /= effective_alpha(j);
  return w;
}

double snap_interface(double length, double interface_x, Index nodes) {
  const double cells = static_cast<double>(nodes - 1);
  double k = std::round(interface_x / length * cells);
  k = std::clamp(k, 1.0, cells - 1.0);
  return k * length / cells;
}

Mesh1D build_mesh(double length, double interface_x, double c1, double c2, Index nodes) {
  if (!(length > 0.0)) throw ValidationError("mesh length L must be positive");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ValidationError("wave speeds c1, c2 must be positive");
  if (nodes < 8) throw ValidationError("mesh needs at least 8 nodes");
  if (!(interface_x > 0.0) || !(interface_x < length))
    throw ValidationError("interface x0 must lie strictly inside (0, L)");

  const double cells = static_cast<double>(nodes - 1);
  const double position = interface_x / length * cells;
  const double k = std::round(position);
  if (std::abs(position - k) > 1e-9 || k < 1.0 || k > cells - 1.0) {
    const double nearest = snap_interface(length, interface_x, nodes);
    std::ostringstream msg;
    msg.precision(17);
    msg << "interface x0=" << interface_x << " is not a grid node for N=" << nodes
        << "; nearest admissible x0=" << nearest;
    throw AlignmentError(msg.str(), nearest);
  }

  Mesh1D mesh;
  mesh.length = length;
  mesh.nodes = nodes;
  mesh.spacing = length / cells;
  mesh.c1 = c1;
  mesh.c2 = c2;
  mesh.interface_index = static_cast<Index>(k);
  mesh.interface_x = static_cast<double>(mesh.interface_index) * mesh.spacing;
  mesh.alpha.resize(nodes);
  for (Index j = 0; j < nodes; ++j) mesh.alpha(j) = j <= mesh.interface_index ? c1 : c2;
  return mesh;
}

double Grid2D::distance_to_boundary(const Vec2& p) const {
  return std::min({p.x() - x_lo, x_hi - p.x(), p.y() - y_lo, y_hi - p.y()});
}

Grid2D build_grid(double x_lo, double x_hi, double y_lo, double y_hi, Index nx, Index ny) {
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw ValidationError("grid bounds must be nonempty");
  if (nx < 16 || ny < 16) throw ValidationError("grid needs at least 16 samples per axis");
  Grid2D g;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.y_lo = y_lo;
  g.y_hi = y_hi;
  g.nx = nx;
  g.ny = ny;
  g.xs = Vec::LinSpaced(nx, x_lo, x_hi);
  g.ys = Vec::LinSpaced(ny, y_lo, y_hi);
  return g;
}

}  // namespace plate
