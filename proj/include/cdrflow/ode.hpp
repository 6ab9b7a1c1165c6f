#pragma once

// Fixed-step integrators for matrix ODEs dX/dt = f(X). `f` is any callable
// taking and returning a DenseMatrix (an ItemOperator qualifies).

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "cdrflow/errors.hpp"
#include "cdrflow/graph_ops.hpp"

namespace cdrflow::ode {

enum class Method { euler, rk4, adams_moulton };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::euler: return "euler";
    case Method::rk4: return "rk4";
    case Method::adams_moulton: return "adams_moulton";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "euler") return Method::euler;
  if (s == "rk4") return Method::rk4;
  if (s == "adams_moulton" || s == "am") return Method::adams_moulton;
  throw UsageError("unknown ODE solver '" + std::string(s) + "' (expected euler, rk4 or adams_moulton)");
}

struct SolverSpec {
  Method method = Method::euler;
  double terminal_time = 1.0;
  int steps = 1;
  double am_tolerance = 1e-10;
  int am_max_iters = 50;

  double step_size() const { return terminal_time / steps; }

  void validate() const {
    if (!(terminal_time > 0.0) || !std::isfinite(terminal_time))
      throw UsageError("terminal time must be positive and finite");
    if (steps < 1) throw UsageError("step count must be at least 1");
    if (!(am_tolerance > 0.0)) throw UsageError("Adams-Moulton tolerance must be positive");
    if (am_max_iters < 1) throw UsageError("Adams-Moulton iteration cap must be at least 1");
  }
};

struct Trajectory {
  std::vector<DenseMatrix> states;  // X_0 .. X_steps when recorded
  DenseMatrix final_state;
};

template <class F>
DenseMatrix step_euler(const DenseMatrix& x, F&& f, double s) {
  return x + s * f(x);
}

template <class F>
DenseMatrix step_rk4(const DenseMatrix& x, F&& f, double s) {
  const DenseMatrix f1 = f(x);
  const DenseMatrix f2 = f(DenseMatrix(x + (s / 2.0) * f1));
  const DenseMatrix f3 = f(DenseMatrix(x + (s / 2.0) * f2));
  const DenseMatrix f4 = f(DenseMatrix(x + s * f3));
  return x + (s / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
}

// f at t, t - s and t - 2s. Views; the caller owns the matrices.
struct AdamsHistory {
  const DenseMatrix& f_now;
  const DenseMatrix& f_prev;
  const DenseMatrix& f_prev2;
};

// Solves X' = X + s/24 (9 f(X') + 19 f_t - 5 f_{t-s} + f_{t-2s}) by
// fixed-point iteration from an explicit Euler predictor. The iteration
// contracts only when 9 s ||f|| / 24 < 1; otherwise ImplicitSolveError.
template <class F>
DenseMatrix step_adams_moulton(const AdamsHistory& h, const DenseMatrix& x, F&& f, double s, double tol,
                               int max_iters) {
  const DenseMatrix explicit_part = x + (s / 24.0) * (19.0 * h.f_now - 5.0 * h.f_prev + h.f_prev2);
  DenseMatrix guess = x + s * h.f_now;
  double update = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    DenseMatrix next = explicit_part + (9.0 * s / 24.0) * f(guess);
    if (!next.allFinite()) throw ImplicitSolveError(it, std::numeric_limits<double>::infinity());
    update = (next - guess).cwiseAbs().maxCoeff();
    guess = std::move(next);
    if (update < tol) return guess;
  }
  throw ImplicitSolveError(max_iters, update);
}

// Integrates from X0 over [0, T] in `steps` equal steps. Adams-Moulton
// bootstraps its two missing history points with RK4.
template <class F>
Trajectory integrate(const DenseMatrix& x0, F&& f, const SolverSpec& spec, bool record = false) {
  spec.validate();
  if (!x0.allFinite()) throw DivergenceError(0, "initial state");
  const double s = spec.step_size();
  Trajectory traj;
  if (record) {
    traj.states.reserve(static_cast<std::size_t>(spec.steps) + 1);
    traj.states.push_back(x0);
  }
  DenseMatrix x = x0;
  std::vector<DenseMatrix> f_hist;  // f(X_{n-2}), f(X_{n-1}), f(X_n) for Adams-Moulton

  for (int n = 0; n < spec.steps; ++n) {
    switch (spec.method) {
      case Method::euler:
        x = step_euler(x, f, s);
        break;
      case Method::rk4:
        x = step_rk4(x, f, s);
        break;
      case Method::adams_moulton: {
        if (f_hist.empty()) f_hist.push_back(f(x));
        if (n < 2) {
          x = step_rk4(x, f, s);
        } else {
          const auto k = f_hist.size();
          const AdamsHistory h{f_hist[k - 1], f_hist[k - 2], f_hist[k - 3]};
          x = step_adams_moulton(h, x, f, s, spec.am_tolerance, spec.am_max_iters);
        }
        if (x.allFinite()) {
          f_hist.push_back(f(x));
          if (f_hist.size() > 3) f_hist.erase(f_hist.begin());
        }
        break;
      }
    }
    if (!x.allFinite()) throw DivergenceError(n + 1, std::string(to_string(spec.method)) + " step");
    if (record) traj.states.push_back(x);
  }
  traj.final_state = std::move(x);
  return traj;
}

}  // namespace cdrflow::ode
