#pragma once

#include <string>

#include <Eigen/SparseCore>

#include "plate/mesh.hpp"

namespace plate {

// Displacement and velocity sampled at all N nodes.
struct PlateState {
  CVec u;
  CVec v;

  static PlateState zero(const Mesh1D& mesh) {
    return {CVec::Zero(mesh.nodes), CVec::Zero(mesh.nodes)};
  }
};

// Boundary condition at x = L.
enum class EndCondition {
  // Force/moment feedback with coefficients a, b (a = b = 0 is the
  // conservative free end).
  Feedback,
  // u = w = 0, the undamped reference beam with closed-form modes.
  Hinged,
};

// Discrete generator in energy coordinates z = (w, v).
//
// The moment w = -α u'' is carried on nodes 1..N-2 and the velocity on nodes
// 1..N-1 (1..N-2 for the hinged end). In these coordinates the energy is
// ½ zᴴ diag(metric) z, so `metric` is the diagonal of the H-inner product.
// The linear map (u, v) -> (w, v) removes the rigid rotation u = x, which has
// zero energy and is a stationary solution of the free-end problem.
struct GeneratorMatrix {
  Mesh1D mesh;
  double a = 0.0;
  double b = 0.0;
  EndCondition end = EndCondition::Feedback;
  Mat A;
  Vec metric;
  Index w_size = 0;
  Index v_size = 0;
  std::string bc_map;

  Index dim() const { return w_size + v_size; }
  // Velocity-block offset and node lookup.
  Index w_index(Index node) const { return node - 1; }
  Index v_index(Index node) const { return w_size + node - 1; }
};

// 3-point Laplacian (f(x-h) - 2 f(x) + f(x+h)) / h² on interior rows; rows 0
// and N-1 are left empty for the caller's ghost elimination.
Eigen::SparseMatrix<double> discrete_laplacian(const Mesh1D& mesh);

// Interior values of the 3-point Laplacian applied to a nodal field.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> laplacian_interior(
    const Mesh1D& mesh, const Eigen::MatrixBase<Derived>& f) {
  const Index n = mesh.nodes;
  const double inv_h2 = 1.0 / (mesh.spacing * mesh.spacing);
  return (f.segment(0, n - 2) - 2.0 * f.segment(1, n - 2) + f.segment(2, n - 2)) * inv_h2;
}

GeneratorMatrix assemble_generator(const Mesh1D& mesh, double a, double b,
                                   EndCondition end = EndCondition::Feedback);

// Nodal form of the same generator acting on (u_1..u_m, v_1..v_m). It has
// the extra eigenvalue 0 (rigid rotation) for the feedback end; used where
// the displacement itself is needed, e.g. resolvent boundary-value problems.
Mat assemble_nodal_generator(const GeneratorMatrix& gen);

// Number of nodal unknowns per field in the nodal form.
Index nodal_unknowns(const GeneratorMatrix& gen);

// G u = -α Δ_h u with G u = 0 at x = 0 (the Γ₁ condition Δu = 0) and a
// zero-slope ghost at x = L, which makes the discrete Green boundary term
// u ∂ν u at Γ₂ vanish. Throws if u(0) != 0.
CVec apply_G(const Mesh1D& mesh, const CVec& u);

// Moment w = -α Δ_h u on interior nodes 1..N-2.
CVec interior_moment(const Mesh1D& mesh, const CVec& u);

// E = ½ Σ ω/α (|v|² + |w|²), trapezoid weights ω, w on the interior nodes
// (w vanishes at x = 0; at x = L it is boundary data, not state).
double energy(const Mesh1D& mesh, const PlateState& state);

// Map a nodal state to energy coordinates and back. from_energy_coordinates
// needs a displacement to fix the rigid mode; it returns the velocity part
// and leaves `u` untouched.
CVec to_energy_coordinates(const GeneratorMatrix& gen, const PlateState& state);
CVec velocity_from_energy_coordinates(const GeneratorMatrix& gen, const CVec& z);

// Forces u(0) = v(0) = 0 (and u(L) = v(L) = 0 for the hinged end).
PlateState project_to_domain(const GeneratorMatrix& gen, PlateState state);

// H-inner product ⟨x, y⟩ = Σ metric x ȳ in energy coordinates.
Complex energy_inner(const GeneratorMatrix& gen, const CVec& x, const CVec& y);
double energy_norm(const GeneratorMatrix& gen, const CVec& z);

// Discrete traces at Γ₂ in energy coordinates: v(L) and the one-sided slope
// (v(L) - v(L-h)) / h. ∂ν = -∂ₓ there.
Complex velocity_trace(const GeneratorMatrix& gen, const CVec& z);
Complex velocity_slope(const GeneratorMatrix& gen, const CVec& z);

// c2 (a |∂ν v(L)|² + b |v(L)|²), the rate at which the feedback removes energy.
double boundary_dissipation_rate(const GeneratorMatrix& gen, const CVec& z);

// Solves (I - A) z = f; throws NumericalError when the residual exceeds
// 1e-10 ‖f‖.
CVec solve_identity_minus_A(const GeneratorMatrix& gen, const CVec& f);

}  // namespace plate
