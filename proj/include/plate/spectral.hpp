#pragma once

#include <vector>

#include "plate/generator.hpp"

namespace plate {

// Eigenvalue-free region {λ : |Im λ| <= C1 exp(-C2 |Re λ|), |λ| > C3} in the
// resolvent variable λ = -iμ, μ an eigenvalue of A.
struct RegionFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 1.0;
  // Least-squares slope of ln|Re μ| against |Im μ| over the modes used.
  double fitted_slope = 0.0;
  Index modes_used = 0;
};

bool in_region(const RegionFit& region, Complex lambda);

struct SpectralReport {
  std::vector<Complex> eigenvalues;
  double spectral_abscissa = 0.0;
  // (Im μ, Re μ) sorted by |Im μ|.
  std::vector<std::pair<double, double>> mode_table;
  RegionFit region;
  // Largest |μ - conj(partner)| over the spectrum; zero for an exactly
  // conjugation-closed set.
  double conjugation_defect = 0.0;
};

// Dense eigendecomposition of A (dimension <= 2000). The region constants are
// fitted on modes with |μ| > cutoff: C2 = max(-slope, 1e-3) and C1 half the
// smallest |Re μ| exp(C2 |Im μ|), so no eigenvalue image lies inside.
SpectralReport compute_spectrum(const GeneratorMatrix& gen, double cutoff = 1.0);

// ‖(λ I + i A)⁻¹‖ in the H-norm, 1/σ_min of W^{1/2} (λ I + i A) W^{-1/2} by a
// dense SVD. Returns +inf at (numerically) singular λ.
double resolvent_norm(const GeneratorMatrix& gen, Complex lambda);

// Fast repeated resolvent norms: one complex Schur form of W^{1/2} A W^{-1/2},
// then σ_min of the triangular λ I + i T by Lanczos on (MᴴM)⁻¹.
class ResolventEvaluator {
 public:
  explicit ResolventEvaluator(const GeneratorMatrix& gen);
  double norm(Complex lambda) const;

 private:
  CMat schur_;
  double scale_ = 1.0;
};

struct ScanGrid {
  double re_lo = -10.0, re_hi = 10.0;
  double im_lo = -1.0, im_hi = 1.0;
  Index n_re = 41, n_im = 21;
};

// ln‖R(λ)‖ <= C + C' |Re λ| on every real-axis sample.
struct GrowthFit {
  double C = 0.0;
  double C_prime = 0.0;
  Index samples = 0;
  bool finite = false;
};

struct ResolventScan {
  ScanGrid grid;
  // Row-major over (im, re): index = i_im * n_re + i_re.
  std::vector<Complex> lambdas;
  std::vector<double> norms;
  std::vector<double> axis_re;
  std::vector<double> axis_norms;
  GrowthFit growth;
  RegionFit region;
  Index points_in_region = 0;
  Index singular_in_region = 0;
  Index eigenvalues_in_region = 0;

  bool region_clear() const { return singular_in_region == 0 && eigenvalues_in_region == 0; }
};

ResolventScan scan_resolvent(const GeneratorMatrix& gen, const ScanGrid& grid,
                             const SpectralReport& spectrum, unsigned threads = 1);

// Indices of strict interior local maxima of a sampled curve.
std::vector<Index> local_maxima(const std::vector<double>& values);

// Direct solve of (λ I + i A)(u, v) = (F, G) in nodal coordinates. Values of
// F, G on constrained nodes (x = 0, and x = L for the hinged end) are ignored.
PlateState direct_resolvent_solve(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                  const CVec& G);

// Same system through the second-order factorization: with s = sign(Re λ)
// and Φ = iG - λF, solve (α Δ - sλ) u = ζ coupled to (α Δ + sλ) ζ = Φ, where
// ζ carries the Γ₂ rows ζ(L) = c2 a i ∂ₓF(L) - i c2 λ a ∂ₓu(L) - sλ u(L) and
// ∂ₓζ(L) = c2 b (iλ u(L) - i F(L)) - sλ ∂ₓu(L), then v = iλ u - iF.
// Requires Re λ != 0.
PlateState factorized_resolvent_solve(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                      const CVec& G);

struct TraceReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double phi_norm = 0.0;
  double u_norm = 0.0;
  double f_h2_norm = 0.0;
  double u_h2_norm = 0.0;
};

// |Re λ| (a |∂ν u(L)|² + b |u(L)|²) against
// ‖Φ‖_H ‖u‖_H + 2 |Re λ Im λ|² ‖u‖²_H + ‖F‖_{H²(Ω₂)} ‖u‖_{H²(Ω₂)}.
TraceReport trace_estimate_check(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                 const CVec& G);

}  // namespace plate
