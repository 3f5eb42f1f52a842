#pragma once

#include <vector>

#include "plate/carleman.hpp"

namespace plate {

// Straight arc γ(t) = center + t·direction, t ∈ [-1, 1].
struct Arc {
  Vec2 center = Vec2::Zero();
  Vec2 direction = Vec2(0.0, 0.5);

  Vec2 at(double t) const { return center + t * direction; }
};

struct FlowSpec {
  std::vector<Arc> arcs;
  double tube_radius = 0.1;
  double step = 1e-3;
};

// C∞ cutoff: 1 on [0, 1/2], 0 on [1, ∞).
double smooth_cutoff(double r);

// X = Σ χ(dist/ρ) χ(overshoot/ρ) γ̇ with dist the distance to the arc's line
// and overshoot the distance past the arc's ends along it. X = γ̇ on the arc
// and X = 0 farther than ρ from the arc extended by ρ at both ends.
Vec2 flow_field(const FlowSpec& spec, const Vec2& x);

// Checks that the ρ-tubes stay ρ away from the boundary and from each other.
// Throws GeometryError.
void validate_flow(const FlowSpec& spec, const Grid2D& region);

// Time-`time` flow map by fixed-step RK4 (negative time flows backwards).
Vec2 flow_map(const FlowSpec& spec, const Vec2& x, double time);

struct FlowReport {
  Grid2D grid;
  Mat psi1;
  Mat psi2;
  std::vector<CriticalPoint> critical_psi1;
  // c' = φ₋₁(c): the critical points of ψ₂ = ψ₁ ∘ φ₁.
  std::vector<Vec2> critical_psi2;
  // (i) min over c of ψ₂(c) - ψ₁(c), (ii) min over c' of ψ₁(c') - ψ₂(c').
  double margin_i = 0.0;
  double margin_ii = 0.0;
  // (iii) max |ψ₂ - ψ₁| over grid points within tube_radius of the boundary.
  double band_difference = 0.0;
  double roundtrip_error = 0.0;
  // Largest |∇ψ₂(c')| by central differences; should be ~0.
  double critical_gradient_residual = 0.0;
  // min |∇ψ₂| over critical points of ψ₁ and min |∇ψ₁| over those of ψ₂.
  double exclusivity_gradient = 0.0;
  bool pass_i = false;
  bool pass_ii = false;
  bool pass_iii = false;
  bool pass_roundtrip = false;

  bool pass() const { return pass_i && pass_ii && pass_iii && pass_roundtrip; }
};

// ψ₂ = ψ₁ ∘ φ₁ sampled on the grid, with the weight-pair diagnostics.
// Each arc must satisfy γ(0) = c for a critical point c of ψ₁ and
// ψ₁(γ(1)) = ψ₁(γ(-1)) > ψ₁(c) within 1e-8.
FlowReport flow_deform(const Polynomial2& psi1, const FlowSpec& spec, const Grid2D& region);

}  // namespace plate
