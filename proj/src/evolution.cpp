#include "plate/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace plate {

CrankNicolson::CrankNicolson(const GeneratorMatrix& gen, double dt) : gen_(gen), dt_(dt) {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be nonzero");
  const Index n = gen.dim();
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  const Eigen::SparseMatrix<double> A = gen.A.sparseView();
  explicit_part_ = identity + 0.5 * dt * A;
  Eigen::SparseMatrix<double> implicit = identity - 0.5 * dt * A;
  implicit.makeCompressed();
  implicit_part_.compute(implicit);
  if (implicit_part_.info() != Eigen::Success)
    throw NumericalError("Crank–Nicolson factorization failed");
}

Vec CrankNicolson::solve_real(const Vec& rhs) const {
  Vec x = implicit_part_.solve(rhs);
  if (implicit_part_.info() != Eigen::Success) throw NumericalError("Crank–Nicolson solve failed");
  return x;
}

CVec CrankNicolson::step(const CVec& z) const {
  const Vec re = z.real();
  const Vec im = z.imag();
  CVec out(z.size());
  out.real() = solve_real(explicit_part_ * re);
  if (im.isZero(0.0))
    out.imag().setZero();
  else
    out.imag() = solve_real(explicit_part_ * im);
  return out;
}

PlateState CrankNicolson::step(const PlateState& state) const {
  const GeneratorMatrix& gen = gen_;
  const CVec z = to_energy_coordinates(gen, state);
  const CVec next = step(z);
  PlateState out;
  out.v = velocity_from_energy_coordinates(gen, next);
  out.u = state.u + 0.5 * dt_ * (state.v + out.v);
  return out;
}

PlateState step_crank_nicolson(const GeneratorMatrix& gen, const PlateState& z, double dt) {
  if (!(dt > 0.0)) throw ValidationError("step_crank_nicolson: dt must be positive");
  return CrankNicolson(gen, dt).step(z);
}

double TrajectoryRecord::total_dissipation() const {
  return std::accumulate(boundary_dissipation.begin(), boundary_dissipation.end(), 0.0);
}

double default_time_step(const Mesh1D& mesh) {
  return 0.25 * mesh.spacing * mesh.spacing / std::max(mesh.c1, mesh.c2);
}

TrajectoryRecord run_trajectory(const GeneratorMatrix& gen, const PlateState& initial, double dt,
                                double horizon, const TrajectoryOptions& options) {
  if (!(dt > 0.0)) throw ValidationError("run_trajectory: dt must be positive");
  if (!(horizon > 0.0)) throw ValidationError("run_trajectory: horizon T must be positive");
  const auto steps = static_cast<Index>(std::llround(horizon / dt));
  if (steps < 1) throw ValidationError("run_trajectory: horizon shorter than one step");

  const CrankNicolson stepper(gen, dt);
  PlateState state = project_to_domain(gen, initial);
  CVec z = to_energy_coordinates(gen, state);
  const Index last = gen.mesh.last();

  TrajectoryRecord rec;
  const auto reserve = static_cast<size_t>(steps + 1);
  rec.times.reserve(reserve);
  rec.energies.reserve(reserve);
  rec.boundary_dissipation.reserve(reserve);
  rec.u_trace_L.reserve(reserve);
  rec.v_trace_L.reserve(reserve);

  auto record = [&](double t, double dissipated) {
    rec.times.push_back(t);
    rec.energies.push_back(0.5 * gen.metric.dot(z.cwiseAbs2()));
    rec.boundary_dissipation.push_back(dissipated);
    rec.u_trace_L.push_back(state.u(last).real());
    rec.v_trace_L.push_back(velocity_trace(gen, z).real());
  };
  auto snapshot = [&](Index n, double t) {
    if (options.snapshot_every > 0 && n % options.snapshot_every == 0) {
      state.v = velocity_from_energy_coordinates(gen, z);
      rec.snapshots.push_back(state);
      rec.snapshot_times.push_back(t);
    }
  };

  record(0.0, 0.0);
  snapshot(0, 0.0);
  const double e0 = rec.energies.front();

  for (Index n = 1; n <= steps; ++n) {
    const CVec next = stepper.step(z);
    const CVec mid = 0.5 * (z + next);
    const double dissipated = dt * boundary_dissipation_rate(gen, mid);
    // u⁺ = u + dt v_mid, nodal.
    state.u += dt * velocity_from_energy_coordinates(gen, mid);
    z = next;
    const double t = static_cast<double>(n) * dt;
    record(t, dissipated);
    snapshot(n, t);
    if (!std::isfinite(rec.energies.back()) || rec.energies.back() > 2.0 * e0 + 1e-300) {
      std::ostringstream msg;
      msg << "energy blow-up at t=" << t << " with dt=" << dt;
      throw NumericalError(msg.str());
    }
  }
  return rec;
}

namespace {

// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

}  // namespace

DecayFit fit_decay(const TrajectoryRecord& record, int k) {
  if (k < 1) throw ValidationError("fit_decay: k must be a positive integer");
  const auto& t = record.times;
  const auto& e = record.energies;
  if (t.size() < 3 || t.size() != e.size()) throw ValidationError("fit_decay: record too short");
  if (!(t.back() >= 100.0 * t[1])) throw ValidationError("fit_decay: record spans less than two decades");

  const double e0 = e.front();
  for (size_t n = 1; n < e.size(); ++n) {
    if (e[n] > e[n - 1] + 1e-10 * e0) {
      std::ostringstream msg;
      msg << "fit_decay: energy increases at t=" << t[n] << " (" << e[n - 1] << " -> " << e[n] << ")";
      throw DataError(msg.str());
    }
  }

  DecayFit fit;
  fit.k = k;
  const double power = 2.0 * k;
  auto log_factor = [&](double time) { return power * std::log(std::log(2.0 + time)); };

  for (size_t n = 0; n < e.size(); ++n)
    fit.C_log = std::max(fit.C_log, e[n] * std::pow(std::log(2.0 + t[n]), power));
  const double log_c = std::log(fit.C_log);

  std::vector<double> tail_t, tail_log_e;
  const double half = 0.5 * t.back();
  for (size_t n = 0; n < e.size(); ++n) {
    if (t[n] >= half && e[n] > 1e-290) {
      tail_t.push_back(t[n]);
      tail_log_e.push_back(std::log(e[n]));
    }
  }
  if (tail_t.size() >= 2) fit.omega = -fit_line(tail_t, tail_log_e).first;

  double log_c_exp = -INFINITY;
  for (size_t n = 0; n < e.size(); ++n)
    if (e[n] > 0.0) log_c_exp = std::max(log_c_exp, std::log(e[n]) + fit.omega * t[n]);
  fit.C_exp = e0 > 0.0 ? std::exp(log_c_exp) : 0.0;

  double sum_log = 0.0, sum_exp = 0.0;
  size_t count = 0;
  for (size_t n = 0; n < e.size(); ++n) {
    if (!(e[n] > 1e-290)) continue;
    const double le = std::log(e[n]);
    const double rl = log_c - log_factor(t[n]) - le;
    const double re = log_c_exp - fit.omega * t[n] - le;
    sum_log += rl * rl;
    sum_exp += re * re;
    ++count;
  }
  if (count > 0) {
    fit.log_residual = std::sqrt(sum_log / static_cast<double>(count));
    fit.exp_residual = std::sqrt(sum_exp / static_cast<double>(count));
  }

  const double tf = t.back();
  fit.log_bound_final = fit.C_log * std::exp(-log_factor(tf));
  fit.exp_bound_final = fit.C_exp * std::exp(-fit.omega * tf);
  fit.tighter = fit.exp_bound_final < fit.log_bound_final ? "exponential" : "logarithmic";
  return fit;
}

}  // namespace plate
