#pragma once

#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "plate/generator.hpp"

namespace plate {

// Implicit midpoint / Crank–Nicolson map (I - dt/2 A)⁻¹ (I + dt/2 A) with the
// factorization cached. A negative dt runs the map backwards in time.
class CrankNicolson {
 public:
  CrankNicolson(const GeneratorMatrix& gen, double dt);

  double dt() const { return dt_; }
  const GeneratorMatrix& generator() const { return gen_; }

  // One step in energy coordinates.
  CVec step(const CVec& z) const;

  // One step of the nodal state; the displacement follows u⁺ = u + dt/2 (v + v⁺).
  PlateState step(const PlateState& state) const;

 private:
  Vec solve_real(const Vec& rhs) const;

  GeneratorMatrix gen_;
  double dt_;
  Eigen::SparseMatrix<double> explicit_part_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> implicit_part_;
};

PlateState step_crank_nicolson(const GeneratorMatrix& gen, const PlateState& z, double dt);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> energies;
  // Energy removed by the feedback during the step ending at times[n]
  // (zero at n = 0): dt c2 (a |∂ν v_mid(L)|² + b |v_mid(L)|²) at the step
  // midpoint, which is what the implicit midpoint rule dissipates.
  std::vector<double> boundary_dissipation;
  std::vector<double> u_trace_L;
  std::vector<double> v_trace_L;
  std::vector<PlateState> snapshots;
  std::vector<double> snapshot_times;

  double total_dissipation() const;
};

struct TrajectoryOptions {
  // Keep every k-th state (0 disables snapshots).
  Index snapshot_every = 0;
};

TrajectoryRecord run_trajectory(const GeneratorMatrix& gen, const PlateState& initial, double dt,
                                double horizon, const TrajectoryOptions& options = {});

// Default step h²/4 / max(c1, c2).
double default_time_step(const Mesh1D& mesh);

struct DecayFit {
  int k = 1;
  // Smallest C with E(t) <= C / ln(2 + t)^{2k} on every sample.
  double C_log = 0.0;
  // E(t) <= C_exp exp(-omega t) on every sample, omega from a least-squares fit
  // of ln E over the second half of the record.
  double C_exp = 0.0;
  double omega = 0.0;
  double log_residual = 0.0;
  double exp_residual = 0.0;
  // Bound value at the final time for both envelopes.
  double log_bound_final = 0.0;
  double exp_bound_final = 0.0;
  std::string tighter;
};

DecayFit fit_decay(const TrajectoryRecord& record, int k);

}  // namespace plate
