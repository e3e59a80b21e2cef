#include "phase2vec/integrate.hpp"

#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

Rhs rhs_of(const PolynomialSystem& system) {
  return [system](std::span<const double> x, std::span<double> dx) {
    const std::vector<double> v = system.velocity(x);
    for (std::size_t i = 0; i < v.size(); ++i) dx[i] = v[i];
  };
}

Rhs rhs_of(const ClassicalSystem& system) {
  const AffineFrame frame = recentering(system.family);
  const int q = system.q();
  return [system, frame, q](std::span<const double> u, std::span<double> du) {
    std::vector<double> x(static_cast<std::size_t>(q));
    for (int a = 0; a < q; ++a)
      x[static_cast<std::size_t>(a)] =
          frame.center[static_cast<std::size_t>(a)] + frame.half[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(a)];
    const std::vector<double> v = classical_rhs(system, x);
    for (int a = 0; a < q; ++a)
      du[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a)] / frame.half[static_cast<std::size_t>(a)];
  };
}

namespace {

bool inside_region(std::span<const double> x, const Lattice* box) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  if (!box) return true;
  for (int a = 0; a < box->q; ++a) {
    const auto& b = box->bounds[static_cast<std::size_t>(a)];
    const double center = 0.5 * (b[0] + b[1]);
    const double half = 0.5 * (b[1] - b[0]);
    if (std::abs(x[static_cast<std::size_t>(a)] - center) > 4.0 * half) return false;
  }
  return true;
}

}  // namespace

Trajectory integrate(const Rhs& rhs, std::span<const double> x0, double dt, int steps,
                     IntegrationMethod method, const Lattice* box) {
  if (dt <= 0.0) throw config_error("integrate: dt must be > 0");
  if (steps < 1) throw config_error("integrate: steps must be >= 1");
  const int q = static_cast<int>(x0.size());
  Trajectory traj;
  traj.q = q;
  traj.dt = dt;
  traj.states.assign(x0.begin(), x0.end());

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(q), k2(q), k3(q), k4(q), tmp(q), next(q);
  for (int s = 0; s < steps; ++s) {
    if (method == IntegrationMethod::euler) {
      rhs(x, k1);
      for (int i = 0; i < q; ++i) next[i] = x[i] + dt * k1[i];
    } else {
      rhs(x, k1);
      for (int i = 0; i < q; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
      rhs(tmp, k2);
      for (int i = 0; i < q; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
      rhs(tmp, k3);
      for (int i = 0; i < q; ++i) tmp[i] = x[i] + dt * k3[i];
      rhs(tmp, k4);
      for (int i = 0; i < q; ++i)
        next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    if (!inside_region(next, box)) {
      traj.truncated = true;
      break;
    }
    traj.states.insert(traj.states.end(), next.begin(), next.end());
    x = next;
  }
  return traj;
}

VectorField bin_trajectories(const std::vector<Trajectory>& trajectories, const Lattice& lattice) {
  VectorField field(lattice);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(lattice.points()), 0);
  for (const Trajectory& traj : trajectories) {
    if (traj.dt <= 0.0) throw config_error("bin_trajectories: trajectory dt must be > 0");
    for (std::int64_t t = 0; t + 1 < traj.rows(); ++t) {
      const auto x = traj.state(t);
      const std::int64_t cell = lattice.cell_of(x);
      if (cell < 0) continue;
      const auto xn = traj.state(t + 1);
      for (int a = 0; a < lattice.q; ++a)
        field.at(cell, a) += (xn[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(a)]) / traj.dt;
      counts[static_cast<std::size_t>(cell)] += 1;
    }
  }
  for (std::int64_t i = 0; i < lattice.points(); ++i)
    if (counts[static_cast<std::size_t>(i)] > 0)
      for (int a = 0; a < lattice.q; ++a)
        field.at(i, a) /= static_cast<double>(counts[static_cast<std::size_t>(i)]);
  return field;
}

VectorField trajectory_field(const Rhs& rhs, int n_traj, const Lattice& lattice, Rng& rng) {
  if (n_traj < 1) throw config_error("trajectory_field: n_traj must be >= 1");
  std::vector<Trajectory> trajs;
  trajs.reserve(static_cast<std::size_t>(n_traj));
  std::vector<double> x0(static_cast<std::size_t>(lattice.q));
  for (int i = 0; i < n_traj; ++i) {
    for (int a = 0; a < lattice.q; ++a) {
      const auto& b = lattice.bounds[static_cast<std::size_t>(a)];
      x0[static_cast<std::size_t>(a)] = rng.uniform(b[0], b[1]);
    }
    trajs.push_back(integrate(rhs, x0, 0.01, 100, IntegrationMethod::rk4, &lattice));
  }
  return bin_trajectories(trajs, lattice);
}

VectorField trajectory_field(const PolynomialSystem& system, int n_traj, const Lattice& lattice,
                             Rng& rng) {
  return trajectory_field(rhs_of(system), n_traj, lattice, rng);
}

}  // namespace p2v
