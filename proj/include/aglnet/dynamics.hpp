#pragma once

// Cyclic Lorenz-96 vector field and a fixed-step classical RK4 integrator.
//
//   dx_j/dt = -x_{j-2} x_{j-1} + x_{j-1} x_{j+1} - x_j + F,  indices mod d.
//
// The constant state x_j = F for all j is an equilibrium and is preserved
// bitwise by the integrator (every stage derivative is exactly zero).

#include <cmath>
#include <string>

#include "aglnet/errors.hpp"
#include "aglnet/types.hpp"

namespace aglnet {

struct OdeConfig {
  int dim = 40;
  double forcing = 8.0;
  double dt = 0.01;
  double t0 = 0.0;
  double t_final = 100.0;
  VectorXr x0;  // length dim

  void validate() const {
    if (dim < 4)
      throw InvalidConfigError("ode dimension must be at least 4, got " +
                               std::to_string(dim));
    if (!(dt > 0.0))
      throw InvalidConfigError("ode step size must be positive");
    if (!(t_final >= t0))
      throw InvalidConfigError("ode final time must not precede start time");
    if (x0.size() != dim)
      throw InvalidConfigError("initial state has length " +
                               std::to_string(x0.size()) + ", expected " +
                               std::to_string(dim));
    const double span = (t_final - t0) / dt;
    if (std::abs(span - std::round(span)) > 1e-9 * std::max(1.0, span))
      throw InvalidConfigError("time span is not an integer number of steps");
  }

  long step_count() const {
    return static_cast<long>(std::llround((t_final - t0) / dt));
  }
};

// Canonical initial condition: all ones, with a 0.008 nudge on variable 20
// (1-based) to break the symmetry. Falls back to the last variable when the
// dimension is smaller than 20.
inline VectorXr default_x0(int dim) {
  VectorXr x = VectorXr::Ones(dim);
  x[std::min(dim, 20) - 1] = 1.008;
  return x;
}

template <class S>
void lorenz96_rhs_into(const Vector<S>& x, S forcing, Vector<S>& dx) {
  const Index d = x.size();
  if (d < 4)
    throw InvalidConfigError(
        "cyclic vector field needs dimension >= 4, got " + std::to_string(d));
  dx.resize(d);
  for (Index j = 0; j < d; ++j) {
    const Index jm2 = (j + d - 2) % d;
    const Index jm1 = (j + d - 1) % d;
    const Index jp1 = (j + 1) % d;
    dx[j] = -x[jm2] * x[jm1] + x[jm1] * x[jp1] - x[j] + forcing;
  }
}

template <class S>
Vector<S> lorenz96_rhs(const Vector<S>& x, S forcing) {
  Vector<S> dx;
  lorenz96_rhs_into(x, forcing, dx);
  return dx;
}

struct Trajectory {
  VectorXr times;   // length n+1, t0 + i·dt
  MatrixXr states;  // (n+1) × dim, row i is x(t_i)

  Index samples() const { return times.size(); }
  Index dim() const { return states.cols(); }
};

// Classical RK4 with fixed step cfg.dt from cfg.t0 to cfg.t_final.
template <class S>
void rk4_step(Vector<S>& x, S dt, S forcing, Vector<S>& k1, Vector<S>& k2,
              Vector<S>& k3, Vector<S>& k4, Vector<S>& tmp) {
  lorenz96_rhs_into(x, forcing, k1);
  tmp = x + (dt / S(2)) * k1;
  lorenz96_rhs_into(tmp, forcing, k2);
  tmp = x + (dt / S(2)) * k2;
  lorenz96_rhs_into(tmp, forcing, k3);
  tmp = x + dt * k3;
  lorenz96_rhs_into(tmp, forcing, k4);
  x += (dt / S(6)) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

inline Trajectory integrate(const OdeConfig& cfg) {
  cfg.validate();
  const long n = cfg.step_count();
  Trajectory traj;
  traj.times.resize(n + 1);
  traj.states.resize(n + 1, cfg.dim);

  VectorXr x = cfg.x0, k1, k2, k3, k4, tmp;
  traj.times[0] = cfg.t0;
  traj.states.row(0) = x.transpose();
  for (long i = 1; i <= n; ++i) {
    rk4_step<Real>(x, cfg.dt, cfg.forcing, k1, k2, k3, k4, tmp);
    if (!x.allFinite())
      throw DivergenceError(
          "integration produced a non-finite state at step " +
              std::to_string(i),
          i);
    traj.times[i] = cfg.t0 + static_cast<double>(i) * cfg.dt;
    traj.states.row(i) = x.transpose();
  }
  return traj;
}

}  // namespace aglnet
