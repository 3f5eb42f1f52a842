#pragma once

#include <array>
#include <string>
#include <tuple>
#include <vector>

#include "plate/mesh.hpp"

namespace plate {

// Bivariate polynomial Σ c(i, j) x^i y^j of total degree <= 4.
class Polynomial2 {
 public:
  static constexpr int kMaxDegree = 4;
  using Coefficients = Eigen::Matrix<double, kMaxDegree + 1, kMaxDegree + 1>;

  Polynomial2() : c_(Coefficients::Zero()) {}
  explicit Polynomial2(const Coefficients& c);

  // Terms (i, j, coefficient); repeated monomials add up.
  static Polynomial2 from_terms(const std::vector<std::tuple<int, int, double>>& terms);

  const Coefficients& coefficients() const { return c_; }
  double operator()(const Vec2& p) const;
  Vec2 gradient(const Vec2& p) const;
  Mat2 hessian(const Vec2& p) const;
  bool is_constant() const;

 private:
  Coefficients c_;
};

// φ = exp(λ ψ).
struct WeightFunction {
  Polynomial2 psi;
  double lambda_c = 1.0;

  double phi(const Vec2& x) const;
  Vec2 grad_phi(const Vec2& x) const;
  // φ'' = φ (λ² ∇ψ ∇ψᵀ + λ ψ'').
  Mat2 hess_phi(const Vec2& x) const;
};

// p_φ(x, ξ) = |ξ|² - |∇φ|² + 2i ⟨ξ, ∇φ⟩.
Complex conjugated_symbol(const WeightFunction& w, const Vec2& x, const Vec2& xi);

// {Re p_φ, Im p_φ} = ∇_ξ Re · ∇_x Im - ∇_x Re · ∇_ξ Im.
double poisson_bracket(const WeightFunction& w, const Vec2& x, const Vec2& xi);

enum class BracketForm {
  // 4λe^{λψ} ξᵀψ''ξ + 4e^{3λψ}(λ⁴|∇ψ|² + λ³ ∇ψᵀψ''∇ψ), as printed.
  Printed,
  // The same with λ⁴|∇ψ|⁴, which is what the expansion gives on p_φ = 0.
  Corrected,
};

double bracket_closed_form(const WeightFunction& w, const Vec2& x, const Vec2& xi,
                           BracketForm form = BracketForm::Corrected);

// In 2D the characteristic set over x is {±|∇φ| R∇φ/|∇φ|}, R the quarter turn.
// Empty when ∇φ(x) = 0.
std::vector<Vec2> characteristic_covectors(const WeightFunction& w, const Vec2& x);

struct CriticalPoint {
  Vec2 x;
  double value = 0.0;
  double hessian_det = 0.0;
};

// Newton (exact Hessian, tolerance 1e-10) started from the grid-local minima
// of |∇ψ|; keeps distinct converged points inside the grid rectangle.
// With require_morse, throws ValidationError for a degenerate point
// (|det ψ''| < 1e-8).
std::vector<CriticalPoint> find_critical_points(const Polynomial2& psi, const Grid2D& grid,
                                                bool require_morse = true);

struct SubellipticityReport {
  bool certified = false;
  double min_bracket = 0.0;
  Vec2 argmin = Vec2::Zero();
  // Set when ∇ψ vanishes inside the region (or the bracket is <= 0).
  bool has_witness = false;
  Vec2 witness = Vec2::Zero();
  std::string reason;
  Index samples = 0;
  // max |p_φ| / (|ξ|² + |∇φ|²) over emitted samples.
  double max_symbol_residual = 0.0;
  // Per-point minimum (NaN where ∇φ = 0), nx × ny.
  Mat point_min;
};

SubellipticityReport verify_subellipticity(const WeightFunction& w, const Grid2D& region, Index n_xi);

enum class Side { Left, Right, Bottom, Top };

Side parse_side(const std::string& name);
std::string side_name(Side side);

// u = amplitude · (η + eta_offset) · exp(-|x - center|² / (2σ²)), η the distance
// to the γ side, so u vanishes on γ when eta_offset = 0. f = Δu exactly.
struct ManufacturedField {
  Side gamma = Side::Left;
  Vec2 center = Vec2(0.5, 0.5);
  double sigma = 0.1;
  double amplitude = 1.0;
  double eta_offset = 0.0;

  double value(const Grid2D& g, const Vec2& x) const;
  Vec2 gradient(const Grid2D& g, const Vec2& x) const;
  double laplacian(const Grid2D& g, const Vec2& x) const;
};

struct CarlemanReport {
  std::vector<double> h_values;
  // Both sides carry the common factor exp(-log_scale[k]).
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> ratios;
  std::vector<double> log_scale;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  // max/min over the positive ratios (1 when fewer than two).
  double spread = 1.0;
};

// h ∫ e^{2φ/h}|u|² + h³ ∫ e^{2φ/h}|∇u|² against
// h⁴ ∫ e^{2φ/h}|f|² + h ∫_{∂U\γ} e^{2φ/h}|u|² + h³ ∫_{∂U\γ} e^{2φ/h}|∂ν u|²,
// trapezoid quadrature on `grid`. Requires u|γ = 0, ∂ν ψ < 0 on γ (outward
// normal) and a certified sub-ellipticity sweep over the grid.
CarlemanReport carleman_inequality_check(const WeightFunction& w, const Grid2D& grid,
                                         const ManufacturedField& u, const std::vector<double>& h_values);

}  // namespace plate
