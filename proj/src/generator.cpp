#include "plate/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/LU>

namespace plate {

Eigen::SparseMatrix<double> discrete_laplacian(const Mesh1D& mesh) {
  const Index n = mesh.nodes;
  const double inv_h2 = 1.0 / (mesh.spacing * mesh.spacing);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<size_t>(3 * n));
  for (Index j = 1; j + 1 < n; ++j) {
    entries.emplace_back(j, j - 1, inv_h2);
    entries.emplace_back(j, j, -2.0 * inv_h2);
    entries.emplace_back(j, j + 1, inv_h2);
  }
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(entries.begin(), entries.end());
  return lap;
}

GeneratorMatrix assemble_generator(const Mesh1D& mesh, double a, double b, EndCondition end) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw ValidationError("damping coefficients a, b must be >= 0");
  if (end == EndCondition::Hinged && (a != 0.0 || b != 0.0))
    throw ValidationError("the hinged reference end carries no feedback; use a = b = 0");

  GeneratorMatrix gen;
  gen.mesh = mesh;
  gen.a = a;
  gen.b = b;
  gen.end = end;

  const Index last = mesh.last();
  const double h = mesh.spacing;
  const double inv_h2 = 1.0 / (h * h);
  const bool feedback = end == EndCondition::Feedback;

  gen.w_size = last - 1;
  gen.v_size = feedback ? last : last - 1;
  const Index dim = gen.dim();
  gen.A = Mat::Zero(dim, dim);
  gen.metric.resize(dim);

  auto& A = gen.A;
  auto has_v = [&](Index node) { return node >= 1 && node <= gen.v_size; };
  auto has_w = [&](Index node) { return node >= 1 && node <= last - 1; };
  const double stencil[3] = {1.0, -2.0, 1.0};

  // w_t = -α Δ_h v on interior nodes.
  for (Index j = 1; j <= last - 1; ++j) {
    const double alpha = mesh.effective_alpha(j);
    const Index row = gen.w_index(j);
    for (int s = 0; s < 3; ++s) {
      const Index k = j - 1 + s;
      if (has_v(k)) A(row, gen.v_index(k)) += -alpha * stencil[s] * inv_h2;
    }
    gen.metric(row) = h / alpha;
  }

  // v_t = α Δ_h w; w(0) = 0, and for the feedback end w(L) = c2 a ∂ₓv(L).
  const double c2 = mesh.c2;
  const double moment_gain = c2 * a / h;  // w(L) = moment_gain (v_L - v_{L-1})
  for (Index j = 1; j <= last - 1; ++j) {
    const double alpha = mesh.effective_alpha(j);
    const Index row = gen.v_index(j);
    for (int s = 0; s < 3; ++s) {
      const Index k = j - 1 + s;
      if (has_w(k)) A(row, gen.w_index(k)) += alpha * stencil[s] * inv_h2;
    }
    if (feedback && j == last - 1) {
      A(row, gen.v_index(last)) += alpha * inv_h2 * moment_gain;
      A(row, gen.v_index(last - 1)) -= alpha * inv_h2 * moment_gain;
    }
    gen.metric(row) = h / alpha;
  }

  if (feedback) {
    // Ghost row at x = L: α (2/h) [(w_{L-1} - w_L)/h + ∂ₓw(L)], ∂ₓw(L) = -c2 b v(L).
    const double alpha = mesh.effective_alpha(last);
    const Index row = gen.v_index(last);
    const double g = 2.0 * alpha / h;
    A(row, gen.w_index(last - 1)) += g / h;
    A(row, gen.v_index(last)) += -g / h * moment_gain - g * c2 * b;
    A(row, gen.v_index(last - 1)) += g / h * moment_gain;
    gen.metric(row) = 0.5 * h / alpha;
  }

  std::ostringstream map;
  map << "x=0: u=0, v=0, w=0 (odd ghost); interface node " << mesh.interface_index
      << " uses harmonic-mean alpha; ";
  if (feedback)
    map << "x=L: w(L)=c2*a*(v_L-v_{L-1})/h, ghost slope dw/dx(L)=-c2*b*v_L";
  else
    map << "x=L: hinged, u=v=w=0";
  gen.bc_map = map.str();
  return gen;
}

Index nodal_unknowns(const GeneratorMatrix& gen) { return gen.v_size; }

Mat assemble_nodal_generator(const GeneratorMatrix& gen) {
  // The moment rows of A are exactly the map K: u -> w, since w_t = K v.
  const Index m = gen.v_size;
  const Mat K = gen.A.topRightCorner(gen.w_size, m);
  const Mat Avw = gen.A.bottomLeftCorner(m, gen.w_size);
  const Mat Avv = gen.A.bottomRightCorner(m, m);
  Mat nodal = Mat::Zero(2 * m, 2 * m);
  nodal.topRightCorner(m, m).setIdentity();
  nodal.bottomLeftCorner(m, m) = Avw * K;
  nodal.bottomRightCorner(m, m) = Avv;
  return nodal;
}

CVec interior_moment(const Mesh1D& mesh, const CVec& u) {
  CVec w = laplacian_interior(mesh, u);
  for (Index j = 1; j + 1 < mesh.nodes; ++j) w(j - 1) *= -mesh.effective_alpha(j);
  return w;
}

CVec apply_G(const Mesh1D& mesh, const CVec& u) {
  if (u.size() != mesh.nodes) throw ValidationError("apply_G: field length differs from mesh");
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  if (std::abs(u(0)) > 1e-12 * scale)
    throw ValidationError("apply_G: u(0) must vanish (Dirichlet trace on Γ₁)");
  const Index last = mesh.last();
  const double h = mesh.spacing;
  CVec g(mesh.nodes);
  g(0) = 0.0;
  g.segment(1, last - 1) = interior_moment(mesh, u);
  g(last) = -mesh.effective_alpha(last) * 2.0 * (u(last - 1) - u(last)) / (h * h);
  return g;
}

double energy(const Mesh1D& mesh, const PlateState& state) {
  if (state.u.size() != mesh.nodes || state.v.size() != mesh.nodes)
    throw ValidationError("energy: state length differs from mesh");
  const Vec weights = mesh.metric_weights();
  const CVec w = interior_moment(mesh, state.u);
  double sum = weights.dot(state.v.cwiseAbs2());
  sum += weights.segment(1, mesh.nodes - 2).dot(w.cwiseAbs2());
  return 0.5 * sum;
}

CVec to_energy_coordinates(const GeneratorMatrix& gen, const PlateState& state) {
  CVec z(gen.dim());
  z.head(gen.w_size) = interior_moment(gen.mesh, state.u);
  z.tail(gen.v_size) = state.v.segment(1, gen.v_size);
  return z;
}

CVec velocity_from_energy_coordinates(const GeneratorMatrix& gen, const CVec& z) {
  CVec v = CVec::Zero(gen.mesh.nodes);
  v.segment(1, gen.v_size) = z.tail(gen.v_size);
  return v;
}

PlateState project_to_domain(const GeneratorMatrix& gen, PlateState state) {
  state.u(0) = 0.0;
  state.v(0) = 0.0;
  if (gen.end == EndCondition::Hinged) {
    state.u(gen.mesh.last()) = 0.0;
    state.v(gen.mesh.last()) = 0.0;
  }
  return state;
}

Complex energy_inner(const GeneratorMatrix& gen, const CVec& x, const CVec& y) {
  return y.dot(gen.metric.asDiagonal() * x);
}

double energy_norm(const GeneratorMatrix& gen, const CVec& z) {
  return std::sqrt(gen.metric.dot(z.cwiseAbs2()));
}

Complex velocity_trace(const GeneratorMatrix& gen, const CVec& z) {
  if (gen.end == EndCondition::Hinged) return 0.0;
  return z(gen.v_index(gen.mesh.last()));
}

Complex velocity_slope(const GeneratorMatrix& gen, const CVec& z) {
  const Index last = gen.mesh.last();
  const Complex v_last = velocity_trace(gen, z);
  return (v_last - z(gen.v_index(last - 1))) / gen.mesh.spacing;
}

double boundary_dissipation_rate(const GeneratorMatrix& gen, const CVec& z) {
  if (gen.end == EndCondition::Hinged) return 0.0;
  return gen.mesh.c2 * (gen.a * std::norm(velocity_slope(gen, z)) +
                        gen.b * std::norm(velocity_trace(gen, z)));
}

CVec solve_identity_minus_A(const GeneratorMatrix& gen, const CVec& f) {
  if (f.size() != gen.dim()) throw ValidationError("solve_identity_minus_A: size mismatch");
  const CMat M = CMat::Identity(gen.dim(), gen.dim()) - gen.A.cast<Complex>();
  Eigen::PartialPivLU<CMat> lu(M);
  CVec z = lu.solve(f);
  const double residual = (M * z - f).norm();
  if (!std::isfinite(residual) || residual > 1e-10 * f.norm())
    throw NumericalError("(I - A) solve failed: residual " + std::to_string(residual));
  return z;
}

}  // namespace plate
