#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "plate/evolution.hpp"

using namespace plate;

namespace {

PlateState smooth_state(const Mesh1D& m) {
  PlateState s = PlateState::zero(m);
  for (Index j = 0; j < m.nodes; ++j) {
    const double x = m.x(j) / m.length;
    s.u(j) = std::sin(0.5 * M_PI * x) + 0.2 * std::sin(1.5 * M_PI * x);
    s.v(j) = 0.5 * std::sin(2.5 * M_PI * x);
  }
  return s;
}

}  // namespace

TEST_CASE("undamped Crank-Nicolson conserves energy") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 101);
  for (const EndCondition end : {EndCondition::Feedback, EndCondition::Hinged}) {
    const GeneratorMatrix g = assemble_generator(m, 0.0, 0.0, end);
    PlateState s = smooth_state(m);
    if (end == EndCondition::Hinged)
      for (Index j = 0; j < m.nodes; ++j) s.u(j) = std::sin(M_PI * m.x(j)), s.v(j) = 0.3 * std::sin(3 * M_PI * m.x(j));
    const TrajectoryRecord rec = run_trajectory(g, s, 1e-3, 1.0);
    CHECK(rec.times.size() == 1001);
    const double e0 = rec.energies.front();
    for (const double e : rec.energies) CHECK(std::abs(e - e0) <= 1e-12 * e0);
    CHECK(rec.total_dissipation() == 0.0);
  }
}

TEST_CASE("damped trajectory obeys the discrete energy identity") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 101);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const TrajectoryRecord rec = run_trajectory(g, smooth_state(m), 1e-3, 2.0);
  const double e0 = rec.energies.front();
  double dissipated = 0.0;
  for (size_t n = 1; n < rec.energies.size(); ++n) {
    dissipated += rec.boundary_dissipation[n];
    CHECK(rec.energies[n] <= rec.energies[n - 1] * (1.0 + 1e-14));
    CHECK(std::abs(e0 - rec.energies[n] - dissipated) <= 1e-11 * e0);
  }
  CHECK(rec.energies.back() < 0.99 * e0);
}

TEST_CASE("undamped map is reversible") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 61);
  const GeneratorMatrix g = assemble_generator(m, 0.0, 0.0);
  const CrankNicolson forward(g, 2e-3), backward(g, -2e-3);
  const PlateState s0 = smooth_state(m);
  PlateState s = s0;
  for (int n = 0; n < 200; ++n) s = forward.step(s);
  for (int n = 0; n < 200; ++n) s = backward.step(s);
  // Roundoff only: 400 solves with cond(I - dt/2 A) ~ 60.
  CHECK((s.u - s0.u).norm() <= 1e-10 * s0.u.norm());
  CHECK((s.v - s0.v).norm() <= 1e-10 * s0.v.norm());
}

TEST_CASE("nodal displacement stays consistent with the moment") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 41);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 0.5);
  const CrankNicolson cn(g, 1e-3);
  PlateState s = smooth_state(m);
  CVec z = to_energy_coordinates(g, s);
  for (int n = 0; n < 100; ++n) {
    s = cn.step(s);
    z = cn.step(z);
  }
  const CVec from_u = to_energy_coordinates(g, s);
  CHECK((from_u - z).norm() <= 1e-10 * z.norm());
}

TEST_CASE("second-order convergence in dt") {
  // Data in the lowest eigenmodes: the feedback also creates modes with
  // |mu| ~ 1/h^3 that Crank-Nicolson only resolves once dt |mu| << 1.
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 31);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  Eigen::EigenSolver<Mat> eig(g.A);
  std::vector<Index> order(static_cast<size_t>(g.dim()));
  for (Index i = 0; i < g.dim(); ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Index x, Index y) { return std::abs(eig.eigenvalues()(x)) < std::abs(eig.eigenvalues()(y)); });
  CVec z0 = CVec::Zero(g.dim());
  for (size_t k = 0; k < 6; ++k) z0 += eig.eigenvectors().col(order[k]).normalized();
  const double T = 0.2;
  auto solve = [&](double dt) {
    const CrankNicolson cn(g, dt);
    CVec z = z0;
    for (long n = 0; n < std::lround(T / dt); ++n) z = cn.step(z);
    return z;
  };
  const CVec ref = solve(T / 3200);
  std::vector<double> errors;
  for (const double dt : {T / 50, T / 100, T / 200}) errors.push_back(energy_norm(g, solve(dt) - ref));
  for (size_t k = 1; k < errors.size(); ++k)
    CHECK(std::log2(errors[k - 1] / errors[k]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("trajectory validation and snapshots") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 1.0, 21);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  CHECK_THROWS_AS(run_trajectory(g, smooth_state(m), 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(run_trajectory(g, smooth_state(m), 1e-2, -1.0), ValidationError);
  CHECK_THROWS_AS(step_crank_nicolson(g, smooth_state(m), -1.0), ValidationError);
  CHECK_THROWS_AS(CrankNicolson(g, 0.0), ValidationError);
  TrajectoryOptions opt;
  opt.snapshot_every = 10;
  const TrajectoryRecord rec = run_trajectory(g, smooth_state(m), 1e-2, 1.0, opt);
  CHECK(rec.snapshots.size() == 11);
  CHECK(rec.snapshot_times.back() == doctest::Approx(1.0));
  CHECK(default_time_step(m) == doctest::Approx(0.25 * 0.05 * 0.05));
}

TEST_CASE("decay fit on synthetic records") {
  TrajectoryRecord rec;
  for (int n = 0; n <= 10000; ++n) {
    const double t = 0.01 * n;
    rec.times.push_back(t);
    rec.energies.push_back(2.0 * std::exp(-0.1 * t));
    rec.boundary_dissipation.push_back(0.0);
  }
  const DecayFit fit = fit_decay(rec, 1);
  CHECK(fit.omega == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(fit.C_exp == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.tighter == "exponential");
  for (size_t n = 0; n < rec.times.size(); ++n)
    CHECK(rec.energies[n] * std::pow(std::log(2.0 + rec.times[n]), 2) <= fit.C_log);
  CHECK(fit.exp_residual < 1e-6);

  const DecayFit fit2 = fit_decay(rec, 2);
  CHECK(fit2.C_log > fit.C_log);

  TrajectoryRecord bumpy = rec;
  bumpy.energies[500] *= 1.01;
  CHECK_THROWS_AS(fit_decay(bumpy, 1), DataError);

  TrajectoryRecord brief = rec;
  brief.times.resize(50);
  brief.energies.resize(50);
  CHECK_THROWS_AS(fit_decay(brief, 1), ValidationError);
  CHECK_THROWS_AS(fit_decay(rec, 0), ValidationError);
}

TEST_CASE("logarithmic envelope on a simulated damped record") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 2.0, 41);
  const GeneratorMatrix g = assemble_generator(m, 1.0, 1.0);
  const TrajectoryRecord rec = run_trajectory(g, smooth_state(m), 1e-2, 50.0);
  const DecayFit fit = fit_decay(rec, 1);
  CHECK(std::isfinite(fit.C_log));
  for (size_t n = 0; n < rec.times.size(); ++n)
    CHECK(rec.energies[n] * std::pow(std::log(2.0 + rec.times[n]), 2) <= fit.C_log);
  CHECK(fit.omega > 0.0);
}
