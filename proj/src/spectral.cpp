#include "plate/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace plate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDecayRate = 1e-3;
constexpr Index kMaxDenseDim = 2000;

CMat scaled_operator(const GeneratorMatrix& gen) {
  const Vec root = gen.metric.cwiseSqrt();
  const Vec inv_root = root.cwiseInverse();
  return (root.asDiagonal() * gen.A * inv_root.asDiagonal()).cast<Complex>();
}

double sign_of(double x) { return x > 0.0 ? 1.0 : -1.0; }

}  // namespace

bool in_region(const RegionFit& region, Complex lambda) {
  return std::abs(lambda) > region.C3 &&
         std::abs(lambda.imag()) <= region.C1 * std::exp(-region.C2 * std::abs(lambda.real()));
}

SpectralReport compute_spectrum(const GeneratorMatrix& gen, double cutoff) {
  if (gen.dim() > kMaxDenseDim) throw ValidationError("compute_spectrum: dimension exceeds 2000");
  Eigen::EigenSolver<Mat> solver(gen.A, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");

  SpectralReport report;
  const CVec mu = solver.eigenvalues();
  report.eigenvalues.assign(mu.data(), mu.data() + mu.size());
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(), [](Complex x, Complex y) {
    if (x.imag() != y.imag()) return x.imag() < y.imag();
    return x.real() < y.real();
  });

  report.spectral_abscissa = -kInf;
  for (const Complex m : report.eigenvalues) {
    report.spectral_abscissa = std::max(report.spectral_abscissa, m.real());
    report.mode_table.emplace_back(m.imag(), m.real());
  }
  std::stable_sort(report.mode_table.begin(), report.mode_table.end(),
                   [](const auto& x, const auto& y) { return std::abs(x.first) < std::abs(y.first); });

  for (const Complex m : report.eigenvalues) {
    double nearest = kInf;
    for (const Complex other : report.eigenvalues) nearest = std::min(nearest, std::abs(std::conj(m) - other));
    report.conjugation_defect = std::max(report.conjugation_defect, nearest);
  }

  // λ = -iμ: Re λ = Im μ, Im λ = -Re μ.
  RegionFit& region = report.region;
  region.C3 = cutoff;
  std::vector<double> xs, ys;
  bool touches_axis = false;
  for (const Complex m : report.eigenvalues) {
    if (std::abs(m) <= cutoff) continue;
    if (m.real() == 0.0) {
      touches_axis = true;
      continue;
    }
    xs.push_back(std::abs(m.imag()));
    ys.push_back(std::log(std::abs(m.real())));
  }
  region.modes_used = static_cast<Index>(xs.size());
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    region.fitted_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  region.C2 = std::max(-region.fitted_slope, kMinDecayRate);
  if (touches_axis || xs.empty()) {
    region.C1 = 0.0;
  } else {
    double smallest = kInf;
    for (size_t i = 0; i < xs.size(); ++i) smallest = std::min(smallest, ys[i] + region.C2 * xs[i]);
    region.C1 = 0.5 * std::exp(smallest);
  }
  return report;
}

double resolvent_norm(const GeneratorMatrix& gen, Complex lambda) {
  const Index n = gen.dim();
  CMat B = Complex(0.0, 1.0) * scaled_operator(gen);
  B.diagonal().array() += lambda;
  Eigen::BDCSVD<CMat> svd(B);
  const auto& sigma = svd.singularValues();
  const double smax = sigma.maxCoeff();
  const double smin = sigma(n - 1);
  if (!(smin > 1e-15 * smax)) return kInf;
  return 1.0 / smin;
}

ResolventEvaluator::ResolventEvaluator(const GeneratorMatrix& gen) {
  Eigen::ComplexSchur<CMat> schur(scaled_operator(gen));
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition did not converge");
  schur_ = Complex(0.0, 1.0) * schur.matrixT();
  scale_ = std::max(1.0, schur_.cwiseAbs().maxCoeff());
}

double ResolventEvaluator::norm(Complex lambda) const {
  const Index n = schur_.rows();
  CMat M = schur_;
  M.diagonal().array() += lambda;
  const double scale = std::max(scale_, std::abs(lambda));
  if (M.diagonal().cwiseAbs().minCoeff() <= 1e-15 * scale) return kInf;

  const auto upper = M.triangularView<Eigen::Upper>();
  auto apply = [&](const CVec& x) -> CVec {
    CVec s = upper.adjoint().solve(x);
    return upper.solve(s);
  };

  // Lanczos with full reorthogonalization for the top eigenvalue of (MᴴM)⁻¹.
  const Index max_steps = std::min<Index>(n, 80);
  CMat basis(n, max_steps + 1);
  std::vector<double> alphas, betas;
  CVec q(n);
  for (Index i = 0; i < n; ++i) q(i) = Complex(1.0 + 0.25 * std::sin(1.7 * static_cast<double>(i)), 0.0);
  q.normalize();
  basis.col(0) = q;
  double previous = 0.0, theta = 0.0;
  for (Index k = 0; k < max_steps; ++k) {
    CVec w = apply(basis.col(k));
    if (!w.allFinite()) return kInf;
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j <= k; ++j) w -= basis.col(j) * basis.col(j).dot(w);
    const double alpha = basis.col(k).dot(apply(basis.col(k))).real();
    alphas.push_back(alpha);
    const double beta = w.norm();

    const auto m = static_cast<Index>(alphas.size());
    Mat T = Mat::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      T(i, i) = alphas[static_cast<size_t>(i)];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = betas[static_cast<size_t>(i)];
    }
    theta = Eigen::SelfAdjointEigenSolver<Mat>(T, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    if (k > 0 && std::abs(theta - previous) <= 1e-14 * theta) break;
    if (beta <= 1e-14 * theta) break;
    previous = theta;
    betas.push_back(beta);
    basis.col(k + 1) = w / beta;
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) return kInf;
  const double smin = 1.0 / std::sqrt(theta);
  if (!(smin > 1e-15 * scale)) return kInf;
  return 1.0 / smin;
}

std::vector<Index> local_maxima(const std::vector<double>& values) {
  std::vector<Index> peaks;
  for (size_t i = 1; i + 1 < values.size(); ++i)
    if (values[i] > values[i - 1] && values[i] >= values[i + 1]) peaks.push_back(static_cast<Index>(i));
  return peaks;
}

ResolventScan scan_resolvent(const GeneratorMatrix& gen, const ScanGrid& grid,
                             const SpectralReport& spectrum, unsigned threads) {
  if (grid.n_re < 2 || grid.n_im < 1) throw ValidationError("scan grid needs n_re >= 2 and n_im >= 1");
  if (grid.n_re * grid.n_im > 10000) throw ValidationError("scan grid exceeds 10^4 points");
  if (!(grid.re_hi > grid.re_lo) || grid.im_hi < grid.im_lo)
    throw ValidationError("scan ranges must be nonempty");

  ResolventScan scan;
  scan.grid = grid;
  scan.region = spectrum.region;
  const ResolventEvaluator evaluator(gen);

  auto re_at = [&](Index i) {
    return grid.re_lo + (grid.re_hi - grid.re_lo) * static_cast<double>(i) / static_cast<double>(grid.n_re - 1);
  };
  auto im_at = [&](Index i) {
    if (grid.n_im == 1) return 0.5 * (grid.im_lo + grid.im_hi);
    return grid.im_lo + (grid.im_hi - grid.im_lo) * static_cast<double>(i) / static_cast<double>(grid.n_im - 1);
  };

  std::vector<Complex> points;
  for (Index j = 0; j < grid.n_im; ++j)
    for (Index i = 0; i < grid.n_re; ++i) points.emplace_back(re_at(i), im_at(j));
  const size_t grid_points = points.size();
  for (Index i = 0; i < grid.n_re; ++i) points.emplace_back(re_at(i), 0.0);

  std::vector<double> values(points.size());
  const unsigned workers = std::max(1u, threads);
  auto work = [&](unsigned id) {
    for (size_t p = id; p < points.size(); p += workers) values[p] = evaluator.norm(points[p]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }

  scan.lambdas.assign(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(grid_points));
  scan.norms.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(grid_points));
  for (Index i = 0; i < grid.n_re; ++i) {
    scan.axis_re.push_back(re_at(i));
    scan.axis_norms.push_back(values[grid_points + static_cast<size_t>(i)]);
  }

  // Upper envelope of ln‖R‖ along the real axis.
  GrowthFit& fit = scan.growth;
  fit.samples = static_cast<Index>(scan.axis_norms.size());
  fit.finite = std::all_of(scan.axis_norms.begin(), scan.axis_norms.end(),
                           [](double v) { return std::isfinite(v); });
  if (fit.finite) {
    const double n = static_cast<double>(fit.samples);
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < scan.axis_re.size(); ++i) {
      mx += std::abs(scan.axis_re[i]);
      my += std::log(scan.axis_norms[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < scan.axis_re.size(); ++i) {
      const double dx = std::abs(scan.axis_re[i]) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(scan.axis_norms[i]) - my);
    }
    fit.C_prime = std::max(sxx > 0.0 ? sxy / sxx : 0.0, 0.0);
    fit.C = -kInf;
    for (size_t i = 0; i < scan.axis_re.size(); ++i)
      fit.C = std::max(fit.C, std::log(scan.axis_norms[i]) - fit.C_prime * std::abs(scan.axis_re[i]));
  } else {
    fit.C = kInf;
  }

  for (size_t p = 0; p < grid_points; ++p) {
    if (!in_region(scan.region, scan.lambdas[p])) continue;
    ++scan.points_in_region;
    if (!std::isfinite(scan.norms[p])) ++scan.singular_in_region;
  }
  for (const Complex mu : spectrum.eigenvalues)
    if (in_region(scan.region, Complex(0.0, -1.0) * mu)) ++scan.eigenvalues_in_region;
  return scan;
}

namespace {

void check_data(const GeneratorMatrix& gen, const CVec& F, const CVec& G) {
  if (F.size() != gen.mesh.nodes || G.size() != gen.mesh.nodes)
    throw ValidationError("resolvent data must be nodal fields on the mesh");
}

// Row and column equilibration first: the raw rows mix O(1) and O(h⁻⁴)
// entries, so an unscaled rcond says little about singularity.
CVec solve_checked(const CMat& M, const CVec& rhs) {
  const Vec rows = M.cwiseAbs().rowwise().maxCoeff();
  if (!(rows.minCoeff() > 0.0)) throw NumericalError("resolvent system is singular: zero row");
  CMat S = rows.cwiseInverse().asDiagonal() * M;
  const Vec cols = S.cwiseAbs().colwise().maxCoeff().transpose();
  if (!(cols.minCoeff() > 0.0)) throw NumericalError("resolvent system is singular: zero column");
  S = S * cols.cwiseInverse().asDiagonal();
  Eigen::PartialPivLU<CMat> lu(S);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("resolvent system is singular: λ is in the spectrum");
  const Vec row_inv = rows.cwiseInverse(), col_inv = cols.cwiseInverse();
  CVec x = col_inv.asDiagonal() * lu.solve(row_inv.asDiagonal() * rhs);

  // Refinement with long double residuals; cond(S) reaches 1e10 on fine meshes.
  using LComplex = std::complex<long double>;
  for (int iter = 0; iter < 3; ++iter) {
    CVec r(rhs.size());
    for (Index i = 0; i < M.rows(); ++i) {
      LComplex acc(rhs(i).real(), rhs(i).imag());
      for (Index j = 0; j < M.cols(); ++j) {
        if (M(i, j) == Complex(0.0)) continue;
        acc -= LComplex(M(i, j).real(), M(i, j).imag()) * LComplex(x(j).real(), x(j).imag());
      }
      r(i) = Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
    }
    x += col_inv.asDiagonal() * lu.solve(row_inv.asDiagonal() * r);
  }
  return x;
}

}  // namespace

PlateState direct_resolvent_solve(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                  const CVec& G) {
  check_data(gen, F, G);
  const Index m = nodal_unknowns(gen);
  CMat M = Complex(0.0, 1.0) * assemble_nodal_generator(gen).cast<Complex>();
  M.diagonal().array() += lambda;
  CVec rhs(2 * m);
  rhs.head(m) = F.segment(1, m);
  rhs.tail(m) = G.segment(1, m);
  const CVec z = solve_checked(M, rhs);
  PlateState out = PlateState::zero(gen.mesh);
  out.u.segment(1, m) = z.head(m);
  out.v.segment(1, m) = z.tail(m);
  return out;
}

PlateState factorized_resolvent_solve(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                      const CVec& G) {
  check_data(gen, F, G);
  if (lambda.real() == 0.0) throw ValidationError("factorized resolvent needs Re λ != 0");
  const Mesh1D& mesh = gen.mesh;
  const bool feedback = gen.end == EndCondition::Feedback;
  const Index last = mesh.last();
  const double h = mesh.spacing;
  const double inv_h2 = 1.0 / (h * h);
  const Complex I(0.0, 1.0);
  const Complex s_lambda = sign_of(lambda.real()) * lambda;
  const double c2 = mesh.c2;

  // Unknowns: u_1..u_m, [ghost slope g of u at L], ζ_1..ζ_m.
  const Index m = nodal_unknowns(gen);
  const Index ghost = feedback ? m : -1;
  const Index zeta0 = feedback ? m + 1 : m;
  const Index size = zeta0 + m;
  auto U = [&](Index node) { return node - 1; };
  auto Z = [&](Index node) { return zeta0 + node - 1; };
  auto valid = [&](Index node) { return node >= 1 && node <= m; };

  CVec phi = CVec::Zero(mesh.nodes);
  for (Index j = 1; j <= m; ++j) phi(j) = I * G(j) - lambda * F(j);

  CMat M = CMat::Zero(size, size);
  CVec rhs = CVec::Zero(size);
  Index row = 0;
  const double stencil[3] = {1.0, -2.0, 1.0};

  // (α Δ - sλ) u - ζ = 0 on interior nodes.
  for (Index j = 1; j <= last - 1; ++j, ++row) {
    const double alpha = mesh.effective_alpha(j);
    for (int s = 0; s < 3; ++s) {
      const Index k = j - 1 + s;
      if (valid(k)) M(row, U(k)) += alpha * stencil[s] * inv_h2;
    }
    M(row, U(j)) -= s_lambda;
    M(row, Z(j)) -= 1.0;
  }

  if (feedback) {
    const double alpha = mesh.effective_alpha(last);
    // Same row at L with the ghost slope g: α (2/h) [(u_{L-1} - u_L)/h + g] - sλ u_L - ζ_L = 0.
    M(row, U(last - 1)) += 2.0 * alpha * inv_h2;
    M(row, U(last)) += -2.0 * alpha * inv_h2 - s_lambda;
    M(row, ghost) += 2.0 * alpha / h;
    M(row, Z(last)) -= 1.0;
    ++row;

    // Dirichlet row of ζ at Γ₂.
    const Complex moment = c2 * gen.a * I * lambda / h;
    M(row, Z(last)) += 1.0;
    M(row, U(last)) += moment + s_lambda;
    M(row, U(last - 1)) -= moment;
    rhs(row) = c2 * gen.a * I * (F(last) - F(last - 1)) / h;
    ++row;
  }

  // (α Δ + sλ) ζ = Φ on interior nodes.
  for (Index j = 1; j <= last - 1; ++j, ++row) {
    const double alpha = mesh.effective_alpha(j);
    for (int s = 0; s < 3; ++s) {
      const Index k = j - 1 + s;
      if (valid(k)) M(row, Z(k)) += alpha * stencil[s] * inv_h2;
    }
    M(row, Z(j)) += s_lambda;
    rhs(row) = phi(j);
  }

  if (feedback) {
    // Ghost row of ζ at L with ∂ₓζ(L) = c2 b (iλ u_L - i F_L) - sλ g.
    const double alpha = mesh.effective_alpha(last);
    const double g = 2.0 * alpha / h;
    M(row, Z(last - 1)) += g / h;
    M(row, Z(last)) += -g / h + s_lambda;
    M(row, U(last)) += g * c2 * gen.b * I * lambda;
    M(row, ghost) += -g * s_lambda;
    rhs(row) = phi(last) + g * c2 * gen.b * I * F(last);
    ++row;
  }

  const CVec x = solve_checked(M, rhs);
  PlateState out = PlateState::zero(mesh);
  for (Index j = 1; j <= m; ++j) {
    out.u(j) = x(U(j));
    out.v(j) = I * lambda * out.u(j) - I * F(j);
  }
  return out;
}

namespace {

double weighted_norm(const Vec& weights, const CVec& f) { return std::sqrt(weights.dot(f.cwiseAbs2())); }

// Discrete H² norm on nodes [first, last]: nodal values, cell slopes and
// interior second differences.
double h2_norm(const Mesh1D& mesh, const CVec& f, Index first, Index last) {
  const double h = mesh.spacing;
  double sum = 0.0;
  for (Index j = first; j <= last; ++j) {
    const double w = (j == first || j == last) ? 0.5 * h : h;
    sum += w * std::norm(f(j));
  }
  for (Index j = first; j < last; ++j) sum += h * std::norm((f(j + 1) - f(j)) / h);
  for (Index j = first + 1; j < last; ++j) sum += h * std::norm((f(j - 1) - 2.0 * f(j) + f(j + 1)) / (h * h));
  return std::sqrt(sum);
}

}  // namespace

TraceReport trace_estimate_check(const GeneratorMatrix& gen, Complex lambda, const CVec& F,
                                 const CVec& G) {
  const PlateState sol = factorized_resolvent_solve(gen, lambda, F, G);
  const Mesh1D& mesh = gen.mesh;
  const Index last = mesh.last();
  const Vec weights = mesh.metric_weights();
  const Complex I(0.0, 1.0);

  CVec phi = CVec::Zero(mesh.nodes);
  for (Index j = 1; j <= nodal_unknowns(gen); ++j) phi(j) = I * G(j) - lambda * F(j);

  TraceReport report;
  if (gen.end == EndCondition::Feedback) {
    const Complex normal_slope = -(sol.u(last) - sol.u(last - 1)) / mesh.spacing;
    report.lhs = std::abs(lambda.real()) * (gen.a * std::norm(normal_slope) + gen.b * std::norm(sol.u(last)));
  }
  report.phi_norm = weighted_norm(weights, phi);
  report.u_norm = weighted_norm(weights, sol.u);
  CVec f = F;
  f(0) = 0.0;
  report.f_h2_norm = h2_norm(mesh, f, mesh.interface_index, last);
  report.u_h2_norm = h2_norm(mesh, sol.u, mesh.interface_index, last);
  const double cross = lambda.real() * lambda.imag();
  report.rhs = report.phi_norm * report.u_norm + 2.0 * cross * cross * report.u_norm * report.u_norm +
               report.f_h2_norm * report.u_h2_norm;

  if (report.rhs == 0.0) {
    if (report.lhs > 0.0) throw NumericalError("trace estimate violated: RHS vanishes with LHS > 0");
    report.ratio = 0.0;
  } else {
    report.ratio = report.lhs / report.rhs;
  }
  return report;
}

}  // namespace plate
