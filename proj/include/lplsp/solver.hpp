#pragma once

// Dense nonlinear least-squares by damped Gauss-Newton (Levenberg-Marquardt)
// with a forward-difference Jacobian and bound handling by projection.
//
// Damping schedule: lambda x10 on a rejected step, /10 on an accepted step,
// clamped to [1e-12, 1e12]. The normal equations use scale-invariant
// diagonal damping, J^T J + lambda * diag(J^T J), since parameters routinely
// differ by orders of magnitude here.
//
// Termination: the first satisfied criterion wins, checked in this order:
// GradTol on the current iterate, MaxIter, then after an accepted step
// CostTol (relative cost decrease) and StepTol (relative parameter step).
// A step rejected with the damping ceiling reached stalls the solver, which
// returns the best iterate found, flagged via Termination::Stalled.

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lplsp/errors.hpp"
#include "lplsp/types.hpp"

namespace lplsp {

// Pure residual map theta -> r(theta). Evaluation must be deterministic:
// the solver assumes repeated calls at the same theta return identical output.
struct ResidualFunction {
  Index arity = 0;
  Index residual_dim = 0;
  std::function<Vector(const Vector&)> eval;
};

struct SolverOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-8;      // relative decrease of ||r||^2 per accepted step
  double step_tolerance = 1e-8;      // relative parameter step
  double gradient_tolerance = 1e-8;  // infinity norm of J^T r
  double fd_step = 1e-6;             // relative forward-difference step
  double initial_damping = 1e-3;
  std::vector<double> lower_bounds;  // per parameter; empty = unbounded
  std::vector<double> upper_bounds;
};

enum class Termination { CostTol, StepTol, GradTol, MaxIter, Stalled };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::CostTol: return "CostTol";
    case Termination::StepTol: return "StepTol";
    case Termination::GradTol: return "GradTol";
    case Termination::MaxIter: return "MaxIter";
    case Termination::Stalled: return "Stalled";
  }
  return "?";
}

struct SolverResult {
  Vector theta_star;
  double final_cost = 0.0;  // ||r(theta*)||_2^2
  int iterations = 0;       // accepted steps
  Termination termination = Termination::MaxIter;
  int jacobian_evals = 0;
  std::vector<double> accepted_costs;  // cost at theta0, then after each accepted step

  bool converged() const {
    return termination == Termination::CostTol ||
           termination == Termination::StepTol ||
           termination == Termination::GradTol;
  }
};

namespace detail {

constexpr double kDampingFloor = 1e-12;
constexpr double kDampingCeiling = 1e12;

// Forward-difference Jacobian with per-coordinate step
// h_j = fd_step * max(|theta_j|, 1). When upper bounds are supplied the probe
// direction flips at the boundary so every evaluated point stays feasible.
inline Matrix fd_jacobian(const ResidualFunction& f, const Vector& theta,
                          double fd_step, const double* upper, Index upper_len) {
  if (theta.size() != f.arity) {
    throw DimensionError("numeric_jacobian: theta length does not match arity");
  }
  const Vector base = f.eval(theta);
  if (base.size() != f.residual_dim) {
    throw DimensionError("numeric_jacobian: residual length does not match residual_dim");
  }
  if (!base.allFinite()) {
    throw EvaluationError(-1, "numeric_jacobian: non-finite residual at base point");
  }
  Matrix jac(f.residual_dim, f.arity);
  Vector probe = theta;
  for (Index j = 0; j < f.arity; ++j) {
    double h = fd_step * std::max(std::abs(theta(j)), 1.0);
    if (upper != nullptr && j < upper_len && theta(j) + h > upper[j]) {
      h = -h;
    }
    probe(j) = theta(j) + h;
    const Vector shifted = f.eval(probe);
    probe(j) = theta(j);
    if (!shifted.allFinite()) {
      throw EvaluationError(static_cast<long>(j),
                            "numeric_jacobian: non-finite residual probing column " +
                                std::to_string(j));
    }
    jac.col(j) = (shifted - base) / h;
  }
  return jac;
}

inline void check_options(const SolverOptions& opts, Index arity) {
  if (opts.max_iterations < 1) {
    throw ContractError("SolverOptions: max_iterations must be >= 1");
  }
  if (!(opts.cost_tolerance > 0.0) || !(opts.step_tolerance > 0.0) ||
      !(opts.gradient_tolerance > 0.0) || !(opts.fd_step > 0.0) ||
      !(opts.initial_damping > 0.0)) {
    throw ContractError("SolverOptions: tolerances and damping must be > 0");
  }
  const auto check_len = [arity](const std::vector<double>& b, const char* name) {
    if (!b.empty() && static_cast<Index>(b.size()) != arity) {
      throw ContractError(std::string("SolverOptions: ") + name +
                          " length does not match parameter count");
    }
  };
  check_len(opts.lower_bounds, "lower_bounds");
  check_len(opts.upper_bounds, "upper_bounds");
  if (!opts.lower_bounds.empty() && !opts.upper_bounds.empty()) {
    for (Index j = 0; j < arity; ++j) {
      if (opts.lower_bounds[j] > opts.upper_bounds[j]) {
        throw ContractError("SolverOptions: lower bound exceeds upper bound at index " +
                            std::to_string(j));
      }
    }
  }
}

inline void project_to_bounds(Vector& theta, const SolverOptions& opts) {
  if (!opts.lower_bounds.empty()) {
    for (Index j = 0; j < theta.size(); ++j) {
      theta(j) = std::max(theta(j), opts.lower_bounds[j]);
    }
  }
  if (!opts.upper_bounds.empty()) {
    for (Index j = 0; j < theta.size(); ++j) {
      theta(j) = std::min(theta(j), opts.upper_bounds[j]);
    }
  }
}

inline bool within_bounds(const Vector& theta, const SolverOptions& opts) {
  if (!opts.lower_bounds.empty()) {
    for (Index j = 0; j < theta.size(); ++j) {
      if (theta(j) < opts.lower_bounds[j]) return false;
    }
  }
  if (!opts.upper_bounds.empty()) {
    for (Index j = 0; j < theta.size(); ++j) {
      if (theta(j) > opts.upper_bounds[j]) return false;
    }
  }
  return true;
}

}  // namespace detail

inline Matrix numeric_jacobian(const ResidualFunction& f, const Vector& theta,
                               double fd_step = SolverOptions{}.fd_step) {
  return detail::fd_jacobian(f, theta, fd_step, nullptr, 0);
}

inline SolverResult minimize(const ResidualFunction& f, Vector theta,
                             const SolverOptions& opts = {}) {
  detail::check_options(opts, f.arity);
  if (theta.size() != f.arity) {
    throw DimensionError("minimize: theta0 length does not match arity");
  }
  if (f.residual_dim < f.arity) {
    throw ContractError("minimize: residual_dim must be >= parameter count");
  }
  if (!detail::within_bounds(theta, opts)) {
    throw ContractError("minimize: theta0 violates the bounds");
  }

  Vector residual = f.eval(theta);
  if (!residual.allFinite()) {
    throw EvaluationError(-1, "minimize: non-finite residual at theta0");
  }
  double cost = residual.squaredNorm();

  SolverResult result;
  result.accepted_costs.push_back(cost);
  const double* upper =
      opts.upper_bounds.empty() ? nullptr : opts.upper_bounds.data();

  double damping = opts.initial_damping;
  while (true) {
    const Matrix jac = detail::fd_jacobian(
        f, theta, opts.fd_step, upper,
        static_cast<Index>(opts.upper_bounds.size()));
    ++result.jacobian_evals;

    const Vector gradient = jac.transpose() * residual;
    if (gradient.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
      result.termination = Termination::GradTol;
      break;
    }
    if (result.iterations >= opts.max_iterations) {
      result.termination = Termination::MaxIter;
      break;
    }

    const Matrix normal = jac.transpose() * jac;
    const Vector diag = normal.diagonal();

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      Matrix damped = normal;
      damped.diagonal() += damping * diag;
      Vector step = damped.ldlt().solve(-gradient);

      bool usable = step.allFinite();
      Vector candidate;
      Vector candidate_residual;
      double candidate_cost = 0.0;
      if (usable) {
        candidate = theta + step;
        detail::project_to_bounds(candidate, opts);
        candidate_residual = f.eval(candidate);
        usable = candidate_residual.allFinite();
        if (usable) {
          candidate_cost = candidate_residual.squaredNorm();
        }
      }

      if (usable && candidate_cost < cost) {
        const double rel_decrease = (cost - candidate_cost) / cost;
        const double step_norm = (candidate - theta).norm();
        theta = std::move(candidate);
        residual = std::move(candidate_residual);
        cost = candidate_cost;
        damping = std::max(damping / 10.0, detail::kDampingFloor);
        ++result.iterations;
        result.accepted_costs.push_back(cost);
        accepted = true;
        if (rel_decrease <= opts.cost_tolerance) {
          result.termination = Termination::CostTol;
        } else if (step_norm <=
                   opts.step_tolerance * (theta.norm() + opts.step_tolerance)) {
          result.termination = Termination::StepTol;
        } else {
          continue;  // outer loop resumes
        }
        result.theta_star = theta;
        result.final_cost = cost;
        return result;
      }

      if (damping >= detail::kDampingCeiling) {
        stalled = true;
        break;
      }
      damping = std::min(damping * 10.0, detail::kDampingCeiling);
    }

    if (stalled) {
      result.termination = Termination::Stalled;
      break;
    }
  }

  result.theta_star = theta;
  result.final_cost = cost;
  return result;
}

}  // namespace lplsp
