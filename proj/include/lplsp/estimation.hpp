#pragma once

// Ensemble parameter estimation: builds residual functions over a transient
// dataset for each parameterization, runs the damped Gauss-Newton solver from
// the all-ones initial guess, and validates the resulting model.
//
// Residual stacking order is monitor-major then time. The full
// parameterization evaluates its residuals through the scalar reference
// forward path; the structured parameterizations use the vectorized path.

#include <Eigen/Core>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lplsp/forward.hpp"
#include "lplsp/parameterization.hpp"
#include "lplsp/solver.hpp"
#include "lplsp/types.hpp"

namespace lplsp {

enum class ForwardPath { Naive, Vectorized };

struct FitReport {
  CouplingModel model;
  Vector per_monitor_mpe;              // percent, on the training data
  std::vector<Index> mpe_skipped;      // zero-degC samples excluded per monitor
  double residual_norm = 0.0;          // ||vec(pred - meas)||_2 of the final model
  std::vector<SolverResult> solver;    // one entry; two for the two-stage fit
  Index param_count = 0;
  double elapsed_s = 0.0;

  bool converged() const {
    for (const SolverResult& s : solver) {
      if (!s.converged()) return false;
    }
    return true;
  }
};

// Residuals r(theta) = vec(T_pred - T_meas) over all monitors of the dataset.
// Step events are detected once here; every evaluation then runs the same
// superposition arithmetic as the public forward ops.
inline ResidualFunction build_residuals(const TransientDataset& dataset,
                                        const Parameterization& variant,
                                        ForwardPath path = ForwardPath::Vectorized) {
  const Index monitors = dataset.monitor_count();
  const Index sources = dataset.source_count();
  validate_variant(variant, monitors, sources);
  const Index t_len = dataset.sample_count();

  struct Workspace {
    TimeGrid grid;
    std::vector<std::vector<StepEvent>> events;
    Matrix measured;
    double t0;
  };
  auto ws = std::make_shared<const Workspace>(
      Workspace{dataset.grid(), detect_all_steps(dataset.powers(), dataset.grid()),
                dataset.temperatures().values(), dataset.t0()});

  ResidualFunction f;
  f.arity = param_count(variant, monitors, sources);
  f.residual_dim = monitors * t_len;
  f.eval = [ws, variant, path, monitors, sources, t_len](const Vector& theta) {
    const auto [r, k] = expand(variant, theta, monitors, sources);
    Vector residual(monitors * t_len);
    Vector rise(t_len);
    Eigen::ArrayXd kernel(t_len);
    for (Index i = 0; i < monitors; ++i) {
      rise.setZero();
      for (Index j = 0; j < sources; ++j) {
        if (path == ForwardPath::Naive) {
          detail::superpose_naive(rise, ws->grid, ws->events[j], r(i, j), k(i, j));
        } else {
          detail::superpose_vectorized(rise, kernel, ws->grid, ws->events[j],
                                       r(i, j), k(i, j));
        }
      }
      residual.segment(i * t_len, t_len) =
          (rise.array() + ws->t0).matrix() - ws->measured.row(i).transpose();
    }
    return residual;
  };
  return f;
}

namespace detail {

// Fits explore down to the positivity floor; entries at or below zero fail
// validation, entries in (0, floor) are raised to the floor.
inline void floor_positive(Matrix& m, const std::string& stage) {
  if ((m.array() <= 0.0).any()) {
    throw FitError("fitted matrix has non-positive entries after optimization",
                   stage);
  }
  m = m.cwiseMax(CouplingModel::kPositivityFloor);
}

inline SolverOptions with_default_bounds(SolverOptions opts, Index arity,
                                         bool positivity) {
  if (positivity && opts.lower_bounds.empty()) {
    opts.lower_bounds.assign(static_cast<size_t>(arity),
                             CouplingModel::kPositivityFloor);
  }
  return opts;
}

inline Vector initial_guess(const Parameterization& variant, Index arity) {
  Vector theta = Vector::Ones(arity);
  if (variant.kind == Parameterization::Kind::LowRank) {
    // Factors scaled so the initial products equal the all-ones matrix.
    theta *= 1.0 / std::sqrt(static_cast<double>(variant.rank));
  }
  return theta;
}

inline double full_residual_norm(const CouplingModel& model,
                                 const TransientDataset& dataset) {
  const TemperatureSeries pred =
      predict(model, dataset.powers(), dataset.grid());
  return (pred.values() - dataset.temperatures().values()).norm();
}

}  // namespace detail

// Single-stage fit for the full, symmetric and low-rank parameterizations.
// Initial guess is all ones (factors scaled 1/sqrt(r) for low rank). Physical
// parameterizations are bounded below by the positivity floor; low-rank
// factors are unbounded and only the final products are validated.
inline FitReport fit(const TransientDataset& dataset,
                     const Parameterization& variant,
                     const SolverOptions& options = {}) {
  if (variant.kind == Parameterization::Kind::TwoStage) {
    throw ContractError("fit: use fit_two_stage for the two-stage variant");
  }
  const auto start = std::chrono::steady_clock::now();
  const Index monitors = dataset.monitor_count();
  const Index sources = dataset.source_count();
  validate_variant(variant, monitors, sources);
  if (variant.kind == Parameterization::Kind::Symmetric &&
      dataset.colocated_count() != sources) {
    throw ContractError("fit: symmetric variant requires colocated_count == N");
  }

  const ForwardPath path = variant.kind == Parameterization::Kind::Full
                               ? ForwardPath::Naive
                               : ForwardPath::Vectorized;
  const ResidualFunction residuals = build_residuals(dataset, variant, path);
  const bool positivity = variant.kind != Parameterization::Kind::LowRank;
  const SolverOptions opts =
      detail::with_default_bounds(options, residuals.arity, positivity);

  SolverResult solved =
      minimize(residuals, detail::initial_guess(variant, residuals.arity), opts);

  auto [r, k] = expand(variant, solved.theta_star, monitors, sources);
  detail::floor_positive(r, {});
  detail::floor_positive(k, {});

  FitProvenance provenance;
  provenance.variant = variant.name();
  if (variant.kind == Parameterization::Kind::LowRank) {
    provenance.rank = variant.rank;
  }
  provenance.colocated_count = dataset.colocated_count();
  provenance.iterations = solved.iterations;
  CouplingModel model(std::move(r), std::move(k), dataset.t0(), provenance);

  const double residual_norm = detail::full_residual_norm(model, dataset);
  MpeResult mpe = mean_percentage_error(
      predict(model, dataset.powers(), dataset.grid()), dataset.temperatures());

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  FitProvenance stamped = *model.provenance();
  stamped.residual_norm = residual_norm;
  stamped.elapsed_s = elapsed;
  CouplingModel final_model(model.R(), model.K(), model.t0(), stamped);

  return FitReport{std::move(final_model),
                   std::move(mpe.per_monitor),
                   std::move(mpe.skipped_samples),
                   residual_norm,
                   {std::move(solved)},
                   param_count(variant, monitors, sources),
                   elapsed};
}

// Two-stage fit: stage 1 is exactly the symmetric fit restricted to the
// co-located monitor rows; stage 2 freezes that block bitwise and estimates
// only the sink rows of R and K from the remaining monitors.
inline FitReport fit_two_stage(const TransientDataset& dataset,
                               const SolverOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const Index monitors = dataset.monitor_count();
  const Index sources = dataset.source_count();
  validate_variant(Parameterization::two_stage(), monitors, sources);
  if (dataset.colocated_count() != sources) {
    throw ContractError("fit_two_stage: requires colocated_count == N");
  }

  // Stage 1: symmetric fit on temperature rows 0..N-1.
  TransientDataset source_block(
      dataset.grid(), dataset.powers(),
      TemperatureSeries(dataset.temperatures().values().topRows(sources)),
      dataset.t0(), sources);
  std::optional<FitReport> stage1;
  try {
    stage1.emplace(fit(source_block, Parameterization::symmetric(), options));
  } catch (const FitError& e) {
    throw FitError(e.what(), "stage 1");
  }

  // Stage 2: sink rows only, R rows then K rows, row-major.
  const Index sink_rows = monitors - sources;
  const Index t_len = dataset.sample_count();
  const Matrix sink_meas = dataset.temperatures().values().bottomRows(sink_rows);
  const std::vector<std::vector<StepEvent>> events =
      detect_all_steps(dataset.powers(), dataset.grid());

  ResidualFunction sink_residuals;
  sink_residuals.arity = 2 * sink_rows * sources;
  sink_residuals.residual_dim = sink_rows * t_len;
  const TimeGrid& grid = dataset.grid();
  const double t0 = dataset.t0();
  sink_residuals.eval = [&, sink_rows, sources, t_len](const Vector& theta) {
    Vector residual(sink_rows * t_len);
    Vector rise(t_len);
    Eigen::ArrayXd kernel(t_len);
    for (Index i = 0; i < sink_rows; ++i) {
      rise.setZero();
      for (Index j = 0; j < sources; ++j) {
        detail::superpose_vectorized(rise, kernel, grid, events[j],
                                     theta(i * sources + j),
                                     theta(sink_rows * sources + i * sources + j));
      }
      residual.segment(i * t_len, t_len) =
          (rise.array() + t0).matrix() - sink_meas.row(i).transpose();
    }
    return residual;
  };

  const SolverOptions sink_opts =
      detail::with_default_bounds(options, sink_residuals.arity, true);
  SolverResult stage2;
  try {
    stage2 = minimize(sink_residuals, Vector::Ones(sink_residuals.arity),
                      sink_opts);
  } catch (const Error& e) {
    throw FitError(e.what(), "stage 2");
  }

  Matrix r_sink(sink_rows, sources);
  Matrix k_sink(sink_rows, sources);
  for (Index i = 0; i < sink_rows; ++i) {
    for (Index j = 0; j < sources; ++j) {
      r_sink(i, j) = stage2.theta_star(i * sources + j);
      k_sink(i, j) = stage2.theta_star(sink_rows * sources + i * sources + j);
    }
  }
  detail::floor_positive(r_sink, "stage 2");
  detail::floor_positive(k_sink, "stage 2");

  // Stack: the stage-1 block is taken from its validated model unchanged.
  Matrix r(monitors, sources);
  Matrix k(monitors, sources);
  r.topRows(sources) = stage1->model.R();
  k.topRows(sources) = stage1->model.K();
  r.bottomRows(sink_rows) = r_sink;
  k.bottomRows(sink_rows) = k_sink;

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  FitProvenance provenance;
  provenance.variant = Parameterization::two_stage().name();
  provenance.colocated_count = dataset.colocated_count();
  provenance.iterations = stage1->solver[0].iterations + stage2.iterations;
  provenance.elapsed_s = elapsed;
  CouplingModel model(std::move(r), std::move(k), dataset.t0(), provenance);

  const double residual_norm = detail::full_residual_norm(model, dataset);
  FitProvenance stamped = *model.provenance();
  stamped.residual_norm = residual_norm;
  CouplingModel final_model(model.R(), model.K(), model.t0(), stamped);

  MpeResult mpe = mean_percentage_error(
      predict(final_model, dataset.powers(), dataset.grid()),
      dataset.temperatures());

  return FitReport{std::move(final_model),
                   std::move(mpe.per_monitor),
                   std::move(mpe.skipped_samples),
                   residual_norm,
                   {stage1->solver[0], std::move(stage2)},
                   param_count(Parameterization::two_stage(), monitors, sources),
                   elapsed};
}

// Dispatch helper used by the CLI.
inline FitReport fit_any(const TransientDataset& dataset,
                         const Parameterization& variant,
                         const SolverOptions& options = {}) {
  return variant.kind == Parameterization::Kind::TwoStage
             ? fit_two_stage(dataset, options)
             : fit(dataset, variant, options);
}

// Smallest number of leading modes whose singular values reach the fraction
// tau of the total: r* = min { k : sum_{i<=k} sigma_i / sum_j sigma_j >= tau }.
inline int select_rank(const Vector& singular_values, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ContractError("select_rank: tau must lie in (0, 1]");
  }
  if (singular_values.size() < 1) {
    throw ContractError("select_rank: empty spectrum");
  }
  double total = 0.0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    const double sigma = singular_values(i);
    if (!(sigma >= 0.0)) {
      throw ContractError("select_rank: singular values must be non-negative");
    }
    if (i > 0 && sigma > singular_values(i - 1)) {
      throw ContractError("select_rank: singular values must be non-increasing");
    }
    total += sigma;
  }
  if (total == 0.0) {
    throw ContractError("select_rank: all singular values are zero");
  }
  double cumulative = 0.0;
  for (Index k = 0; k < singular_values.size(); ++k) {
    cumulative += singular_values(k);
    if (cumulative / total >= tau) {
      return static_cast<int>(k + 1);
    }
  }
  return static_cast<int>(singular_values.size());
}

// Ranks suggested for R and K of an existing model (dense SVD + select_rank).
inline std::pair<int, int> suggest_rank(const CouplingModel& model, double tau) {
  const Eigen::JacobiSVD<Matrix> svd_r(model.R());
  const Eigen::JacobiSVD<Matrix> svd_k(model.K());
  if (!svd_r.singularValues().allFinite() || !svd_k.singularValues().allFinite()) {
    throw ParameterError("suggest_rank: SVD produced non-finite singular values");
  }
  return {select_rank(svd_r.singularValues(), tau),
          select_rank(svd_k.singularValues(), tau)};
}

// Crude initializer K_ij = 1 / (R_ij * C_T) from the total thermal
// capacitance. Only a starting guess; unreliable outside simple systems.
inline Matrix init_time_constants(const Matrix& resistances,
                                  double total_capacitance) {
  if (!(total_capacitance > 0.0)) {
    throw ParameterError("init_time_constants: C_T must be > 0");
  }
  if (!resistances.allFinite() || (resistances.array() <= 0.0).any()) {
    throw ParameterError("init_time_constants: R entries must be finite and > 0");
  }
  return (resistances.array() * total_capacitance).inverse().matrix();
}

}  // namespace lplsp
