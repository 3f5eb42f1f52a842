#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "plate/spectral.hpp"

using namespace plate;

namespace {

CVec random_field(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec f(n);
  for (Index i = 0; i < n; ++i) f(i) = Complex(nd(rng), nd(rng));
  return f;
}

CVec smooth_field(const Mesh1D& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVec f = CVec::Zero(m.nodes);
  for (int k = 1; k <= 6; ++k) {
    const Complex c(u(rng), u(rng));
    for (Index j = 0; j < m.nodes; ++j) f(j) += c * std::sin((k - 0.5) * M_PI * m.x(j)) / double(k);
  }
  return f;
}

std::vector<double> positive_frequencies(const SpectralReport& r) {
  std::vector<double> out;
  for (const Complex mu : r.eigenvalues)
    if (mu.imag() > 0.0) out.push_back(mu.imag());
  std::sort(out.begin(), out.end());
  return out;
}

double relative_error(const PlateState& x, const PlateState& y) {
  return std::sqrt(((x.u - y.u).squaredNorm() + (x.v - y.v).squaredNorm()) /
                   (y.u.squaredNorm() + y.v.squaredNorm()));
}

}  // namespace

TEST_CASE("hinged reference reproduces the discrete and continuous modes") {
  std::vector<std::vector<double>> errors(5);
  for (const Index N : {51, 101, 201}) {
    const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 1.0, N);
    const SpectralReport r = compute_spectrum(assemble_generator(m, 0.0, 0.0, EndCondition::Hinged));
    const auto freq = positive_frequencies(r);
    for (int k = 1; k <= 5; ++k) {
      const double discrete = 4.0 / (m.spacing * m.spacing) * std::pow(std::sin(k * M_PI * m.spacing / 2.0), 2);
      CHECK(freq[static_cast<size_t>(k - 1)] == doctest::Approx(discrete).epsilon(1e-9));
      const double exact = std::pow(k * M_PI, 2);
      errors[static_cast<size_t>(k - 1)].push_back(std::abs(freq[static_cast<size_t>(k - 1)] - exact) / exact);
    }
    for (const Complex mu : r.eigenvalues) CHECK(std::abs(mu.real()) <= 1e-8 * std::abs(mu));
  }
  for (const auto& e : errors)
    for (size_t i = 1; i < e.size(); ++i) CHECK(std::log2(e[i - 1] / e[i]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("damped spectrum lies in the open left half-plane") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 101);
  const SpectralReport r = compute_spectrum(assemble_generator(m, 1.0, 1.0));
  CHECK(r.spectral_abscissa < 0.0);
  for (const Complex mu : r.eigenvalues) CHECK(mu.real() < 0.0);
  CHECK(r.conjugation_defect <= 1e-9);
  CHECK(r.region.C1 > 0.0);
  CHECK(r.region.C2 >= 1e-3);
  for (const Complex mu : r.eigenvalues) CHECK_FALSE(in_region(r.region, Complex(0.0, -1.0) * mu));
  CHECK(r.mode_table.size() == r.eigenvalues.size());
}

TEST_CASE("stronger damping keeps the abscissa negative") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 41);
  for (const double d : {0.1, 1.0, 10.0}) CHECK(compute_spectrum(assemble_generator(m, d, d)).spectral_abscissa < 0.0);
}

TEST_CASE("resolvent norm: explicit inverse, Lanczos and the distance bound") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 51);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const SpectralReport r = compute_spectrum(g);
  const ResolventEvaluator fast(g);
  const Vec root = g.metric.cwiseSqrt();
  for (const Complex lambda : {Complex(3.0, 0.01), Complex(-20.0, 0.5), Complex(0.2, -2.0), Complex(40.0, 0.0)}) {
    CMat M = Complex(0.0, 1.0) * g.A.cast<Complex>();
    M.diagonal().array() += lambda;
    const CMat inv = root.asDiagonal() * M.inverse() * root.cwiseInverse().asDiagonal();
    const double explicit_norm = Eigen::JacobiSVD<CMat>(inv).singularValues()(0);
    const double norm = resolvent_norm(g, lambda);
    CHECK(norm == doctest::Approx(explicit_norm).epsilon(1e-8));
    CHECK(fast.norm(lambda) == doctest::Approx(norm).epsilon(1e-8));

    double dist = INFINITY;
    for (const Complex mu : r.eigenvalues) dist = std::min(dist, std::abs(lambda - Complex(0.0, -1.0) * mu));
    CHECK(norm >= (1.0 - 1e-12) / dist);
    CHECK(norm == doctest::Approx(resolvent_norm(g, -std::conj(lambda))).epsilon(1e-8));
  }
}

TEST_CASE("near an isolated eigenvalue the norm follows the rank-one estimate") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 51);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const Vec root = g.metric.cwiseSqrt();
  const Mat S = root.asDiagonal() * g.A * root.cwiseInverse().asDiagonal();
  Eigen::EigenSolver<Mat> right(S), left(S.transpose());
  Index k = 0;
  for (Index i = 0; i < S.rows(); ++i)
    if (right.eigenvalues()(i).imag() > 0.0 &&
        (right.eigenvalues()(k).imag() <= 0.0 || std::abs(right.eigenvalues()(i)) < std::abs(right.eigenvalues()(k))))
      k = i;
  const Complex mu = right.eigenvalues()(k);
  Index l = 0;
  for (Index i = 1; i < S.rows(); ++i)
    if (std::abs(left.eigenvalues()(i) - mu) < std::abs(left.eigenvalues()(l) - mu)) l = i;
  const CVec x = right.eigenvectors().col(k), y = left.eigenvectors().col(l).conjugate();
  const double kappa = x.norm() * y.norm() / std::abs(y.dot(x));

  const double eps = 1e-3;
  const double norm = resolvent_norm(g, Complex(0.0, -1.0) * mu + eps);
  CHECK(std::isfinite(norm));
  CHECK(norm * eps / kappa == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("undamped scan peaks at the mode images on the real axis") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 1.0, 41);
  const GeneratorMatrix g = assemble_generator(m, 0.0, 0.0, EndCondition::Hinged);
  const SpectralReport r = compute_spectrum(g);
  ScanGrid grid{-100.0, 100.0, -0.5, 0.5, 801, 3};
  const ResolventScan scan = scan_resolvent(g, grid, r);
  const auto freq = positive_frequencies(r);
  const double cell = 200.0 / 800.0;
  std::vector<double> expected;
  for (const double f : freq)
    if (f < 100.0) expected.push_back(f), expected.push_back(-f);
  const auto peaks = local_maxima(scan.axis_norms);
  CHECK(peaks.size() == expected.size());
  for (const Index p : peaks) {
    double nearest = INFINITY;
    for (const double e : expected) nearest = std::min(nearest, std::abs(scan.axis_re[static_cast<size_t>(p)] - e));
    CHECK(nearest <= cell);
  }
  CHECK(r.region.C1 == 0.0);
}

TEST_CASE("damped scan: finite envelope, clear region, deterministic threads") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 61);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const SpectralReport r = compute_spectrum(g);
  const ScanGrid grid{-30.0, 30.0, -1.0, 1.0, 61, 11};
  const ResolventScan one = scan_resolvent(g, grid, r, 1);
  const ResolventScan four = scan_resolvent(g, grid, r, 4);
  CHECK(one.norms == four.norms);
  CHECK(one.axis_norms == four.axis_norms);
  CHECK(one.growth.finite);
  CHECK(std::isfinite(one.growth.C));
  CHECK(one.growth.C_prime >= 0.0);
  for (size_t i = 0; i < one.axis_re.size(); ++i)
    CHECK(std::log(one.axis_norms[i]) <= one.growth.C + one.growth.C_prime * std::abs(one.axis_re[i]) + 1e-12);
  CHECK(one.region_clear());
  for (const double v : one.norms) CHECK(v > 0.0);

  // λ and -conj λ are both on this symmetric grid.
  for (Index j = 0; j < grid.n_im; ++j)
    for (Index i = 0; i < grid.n_re; ++i) {
      const double a = one.norms[static_cast<size_t>(j * grid.n_re + i)];
      const double b = one.norms[static_cast<size_t>(j * grid.n_re + (grid.n_re - 1 - i))];
      CHECK(a == doctest::Approx(b).epsilon(1e-8));
    }
  CHECK_THROWS_AS(scan_resolvent(g, ScanGrid{-1.0, 1.0, -1.0, 1.0, 200, 51}, r), ValidationError);
}

TEST_CASE("local maxima") {
  CHECK(local_maxima({0.0, 2.0, 1.0, 3.0, 3.0, 0.0}) == std::vector<Index>{1, 3});
  CHECK(local_maxima({1.0, 2.0}).empty());
}

TEST_CASE("factorized solve matches the direct solve") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 101);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Complex lambda(1.0 + 49.0 * u(rng), -1e-2 + 2e-2 * u(rng));
    const CVec F = random_field(m.nodes, rng), G = random_field(m.nodes, rng);
    const PlateState d = direct_resolvent_solve(g, lambda, F, G);
    const PlateState f = factorized_resolvent_solve(g, lambda, F, G);
    CHECK(relative_error(f, d) <= 1e-8);
  }
  const Complex lambda(3.0, 0.01);
  const CVec F = random_field(m.nodes, rng), G = random_field(m.nodes, rng);
  const PlateState z = factorized_resolvent_solve(g, lambda, F, G);
  const PlateState mirror = factorized_resolvent_solve(g, -std::conj(lambda), F.conjugate(), G.conjugate());
  CHECK(relative_error(mirror, PlateState{-z.u.conjugate(), -z.v.conjugate()}) <= 1e-10);

  const PlateState zero = factorized_resolvent_solve(g, lambda, CVec::Zero(m.nodes), CVec::Zero(m.nodes));
  CHECK(zero.u.norm() == 0.0);
  CHECK(zero.v.norm() == 0.0);
  CHECK_THROWS_AS(factorized_resolvent_solve(g, Complex(0.0, 1.0), F, G), ValidationError);
  CHECK_THROWS_AS(factorized_resolvent_solve(g, lambda, CVec::Zero(5), G), ValidationError);
}

TEST_CASE("factorized solve with the hinged end and with unequal damping") {
  std::mt19937_64 rng(9);
  const Mesh1D m = build_mesh(1.0, 0.3, 2.0, 0.5, 61);
  for (const GeneratorMatrix& g : {assemble_generator(m, 0.0, 0.0, EndCondition::Hinged), assemble_generator(m, 0.2, 3.0)}) {
    const CVec F = random_field(m.nodes, rng), G = random_field(m.nodes, rng);
    for (const Complex lambda : {Complex(7.5, 0.003), Complex(-12.0, -0.2)})
      CHECK(relative_error(factorized_resolvent_solve(g, lambda, F, G), direct_resolvent_solve(g, lambda, F, G)) <= 1e-8);
  }
}

TEST_CASE("a spectral point is reported as singular") {
  // λ = 0 meets the rigid rotation of the free end exactly.
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 1.0, 31);
  const GeneratorMatrix g = assemble_generator(m, 0.0, 0.0);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(direct_resolvent_solve(g, Complex(0.0), random_field(m.nodes, rng), random_field(m.nodes, rng)),
                  NumericalError);
}

TEST_CASE("trace estimate ratio") {
  std::mt19937_64 rng(77);
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 101);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);

  const TraceReport zero = trace_estimate_check(g, Complex(5.0, 0.0), CVec::Zero(m.nodes), CVec::Zero(m.nodes));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.ratio == 0.0);

  const CVec F = smooth_field(m, rng), G = smooth_field(m, rng);
  std::vector<double> ratios;
  for (int re = 1; re <= 50; ++re) {
    const TraceReport t = trace_estimate_check(g, Complex(re, 0.005), F, G);
    CHECK(t.lhs >= 0.0);
    CHECK(t.rhs > 0.0);
    CHECK(std::isfinite(t.ratio));
    ratios.push_back(t.ratio);
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[24] + sorted[25]);
  CHECK(sorted.back() <= 10.0 * median);
}

TEST_CASE("fields without a trace at x = L give a zero left side") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 81);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const Index n = nodal_unknowns(g);
  CVec u = CVec::Zero(n), v = CVec::Zero(n);
  for (Index j = 1; j <= n; ++j) {
    const double x = m.x(j);
    if (x < 0.8) u(j - 1) = std::pow(std::sin(M_PI * x / 0.8), 4), v(j - 1) = Complex(0.0, 0.5) * u(j - 1);
  }
  const Complex lambda(4.0, 0.01);
  CVec z(2 * n);
  z << u, v;
  const CVec f = lambda * z + Complex(0.0, 1.0) * (assemble_nodal_generator(g).cast<Complex>() * z);
  CVec F = CVec::Zero(m.nodes), G = CVec::Zero(m.nodes);
  F.segment(1, n) = f.head(n);
  G.segment(1, n) = f.tail(n);
  const TraceReport t = trace_estimate_check(g, lambda, F, G);
  CHECK(t.lhs <= 1e-20 * t.rhs);
  CHECK(t.rhs > 0.0);
}

TEST_CASE("fine meshes are not mistaken for singular systems") {
  // Raw rows span O(1) to O(h^-4) here; equilibration keeps rcond meaningful.
  std::mt19937_64 rng(4);
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 201);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const CVec F = smooth_field(m, rng), G = smooth_field(m, rng);
  const Complex lambda(3.5, -0.003);
  CHECK(relative_error(factorized_resolvent_solve(g, lambda, F, G), direct_resolvent_solve(g, lambda, F, G)) <= 1e-8);
}
