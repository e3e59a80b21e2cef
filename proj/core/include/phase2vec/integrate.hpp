#pragma once

#include <functional>
#include <span>
#include <vector>

#include "phase2vec/lattice.hpp"
#include "phase2vec/rng.hpp"
#include "phase2vec/systems.hpp"

namespace p2v {

/// Right-hand side of dX = F(X): writes F(x) into dx.
using Rhs = std::function<void(std::span<const double>, std::span<double>)>;

Rhs rhs_of(const PolynomialSystem& system);
/// Classical dynamics expressed in lattice coordinates (recentered families
/// integrate their rescaled velocities).
Rhs rhs_of(const ClassicalSystem& system);

enum class IntegrationMethod { euler, rk4 };

/// Fixed-step trajectory. Row 0 is the initial condition; one row is appended
/// per completed step, so a full run holds steps+1 rows. Integration stops
/// early when a state leaves the truncation region or becomes non-finite.
struct Trajectory {
  int q = 0;
  double dt = 0.0;
  std::vector<double> states;  // rows() x q

  std::int64_t rows() const { return static_cast<std::int64_t>(states.size()) / q; }
  std::span<const double> state(std::int64_t i) const {
    return {states.data() + i * q, static_cast<std::size_t>(q)};
  }
  bool truncated = false;
};

/// `box`, when given, truncates trajectories that leave 4x the lattice
/// bounding box (per axis, around its center).
Trajectory integrate(const Rhs& rhs, std::span<const double> x0, double dt, int steps,
                     IntegrationMethod method = IntegrationMethod::rk4,
                     const Lattice* box = nullptr);

/// Velocity estimates (x_{t+1}-x_t)/dt binned by the cell of x_t and
/// averaged; cells with no estimates are zero.
VectorField bin_trajectories(const std::vector<Trajectory>& trajectories, const Lattice& lattice);

/// Supp-style trajectory-noise field: n_traj initial conditions uniform over
/// the lattice box, 100 rk4 steps at dt = 0.01, binned.
VectorField trajectory_field(const Rhs& rhs, int n_traj, const Lattice& lattice, Rng& rng);
VectorField trajectory_field(const PolynomialSystem& system, int n_traj, const Lattice& lattice,
                             Rng& rng);

}  // namespace p2v
