#pragma once

// Forward temperature model: superposition of first-order exponential step
// responses, one term per (source, input step) pair.
//
// Conventions fixed here and relied on everywhere else:
//  - a level change detected at sample k has onset t0 = t(k-1);
//  - accumulation order is sources in index order, then steps in index
//    order, so naive and vectorized paths are comparable sample by sample.

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "lplsp/types.hpp"

namespace lplsp {

// Indices where the input level changes, with deltas and onset times.
// Summing the deltas in order reconstructs the row from its zero start.
inline std::vector<StepEvent> detect_steps(
    const Eigen::Ref<const Eigen::RowVectorXd>& power_row,
    const TimeGrid& grid) {
  if (power_row.size() != grid.size()) {
    throw DimensionError("detect_steps: power row has " +
                         std::to_string(power_row.size()) +
                         " samples, grid has " + std::to_string(grid.size()));
  }
  if (power_row(0) != 0.0) {
    throw ContractError("detect_steps: first power sample must be zero");
  }
  std::vector<StepEvent> events;
  for (Index k = 1; k < power_row.size(); ++k) {
    if (power_row(k) != power_row(k - 1)) {
      events.push_back({k, power_row(k) - power_row(k - 1), grid(k - 1)});
    }
  }
  return events;
}

// Step events of every source row, in row order. Fits precompute this once
// per dataset; the events depend only on the excitation and the grid.
inline std::vector<std::vector<StepEvent>> detect_all_steps(
    const ExcitationSeries& powers, const TimeGrid& grid) {
  std::vector<std::vector<StepEvent>> events;
  events.reserve(static_cast<size_t>(powers.source_count()));
  for (Index j = 0; j < powers.source_count(); ++j) {
    events.push_back(detect_steps(powers.row(j), grid));
  }
  return events;
}

namespace detail {

inline void check_forward_args(const ExcitationSeries& powers,
                               const TimeGrid& grid,
                               const Eigen::Ref<const Eigen::RowVectorXd>& r_row,
                               const Eigen::Ref<const Eigen::RowVectorXd>& k_row) {
  if (powers.sample_count() != grid.size()) {
    throw DimensionError("forward: powers and grid sample counts differ");
  }
  if (r_row.size() != powers.source_count() ||
      k_row.size() != powers.source_count()) {
    throw DimensionError("forward: R/K row length must equal the source count");
  }
  if (!r_row.allFinite() || !k_row.allFinite()) {
    throw ParameterError("forward: non-finite R or K entry");
  }
}

// Scalar superposition of one source's steps onto the rise accumulator.
inline void superpose_naive(Vector& rise, const TimeGrid& grid,
                            const std::vector<StepEvent>& events,
                            double resistance, double rate) {
  const Index t_len = grid.size();
  for (const StepEvent& ev : events) {
    const double delta_tc = resistance * ev.delta_power;
    for (Index m = ev.index; m < t_len; ++m) {
      rise(m) += delta_tc * (1.0 - std::exp(-rate * (grid(m) - ev.onset_time)));
    }
  }
}

// Bulk-array superposition over the tail slice of each step. The caller
// provides a kernel scratch buffer of length t_len so no per-step
// allocation happens.
inline void superpose_vectorized(Vector& rise, Eigen::ArrayXd& kernel,
                                 const TimeGrid& grid,
                                 const std::vector<StepEvent>& events,
                                 double resistance, double rate) {
  const Index t_len = grid.size();
  for (const StepEvent& ev : events) {
    const double delta_tc = resistance * ev.delta_power;
    const Index len = t_len - ev.index;
    auto seg = kernel.head(len);
    seg = (grid.values().tail(len).array() - ev.onset_time) * (-rate);
    seg = seg.exp();
    rise.tail(len).array() += delta_tc * (1.0 - seg);
  }
}

}  // namespace detail

// Reference implementation: plain scalar loops over sources, steps and the
// trailing samples of each step. T(0) == t0_celsius exactly.
inline Vector forward_naive(const ExcitationSeries& powers, const TimeGrid& grid,
                            const Eigen::Ref<const Eigen::RowVectorXd>& r_row,
                            const Eigen::Ref<const Eigen::RowVectorXd>& k_row,
                            double t0_celsius) {
  detail::check_forward_args(powers, grid, r_row, k_row);
  Vector rise = Vector::Zero(grid.size());
  for (Index j = 0; j < powers.source_count(); ++j) {
    detail::superpose_naive(rise, grid, detect_steps(powers.row(j), grid),
                            r_row(j), k_row(j));
  }
  return rise.array() + t0_celsius;
}

// Same superposition evaluated with bulk array operations on the tail slice
// of each step. Agrees with forward_naive to within vectorized-exp rounding
// (well below 1e-10 absolute).
inline Vector forward_vectorized(const ExcitationSeries& powers,
                                 const TimeGrid& grid,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& r_row,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& k_row,
                                 double t0_celsius) {
  detail::check_forward_args(powers, grid, r_row, k_row);
  Vector rise = Vector::Zero(grid.size());
  Eigen::ArrayXd kernel(grid.size());
  for (Index j = 0; j < powers.source_count(); ++j) {
    detail::superpose_vectorized(rise, kernel, grid,
                                 detect_steps(powers.row(j), grid), r_row(j),
                                 k_row(j));
  }
  return rise.array() + t0_celsius;
}

// All M traces of a model under one excitation, row i from row i of R and K.
inline TemperatureSeries predict(const CouplingModel& model,
                                 const ExcitationSeries& powers,
                                 const TimeGrid& grid) {
  if (model.source_count() != powers.source_count()) {
    throw DimensionError("predict: model has " +
                         std::to_string(model.source_count()) +
                         " source columns, excitation has " +
                         std::to_string(powers.source_count()) + " rows");
  }
  Matrix traces(model.monitor_count(), grid.size());
  for (Index i = 0; i < model.monitor_count(); ++i) {
    traces.row(i) =
        forward_vectorized(powers, grid, model.R().row(i), model.K().row(i),
                           model.t0())
            .transpose();
  }
  return TemperatureSeries(std::move(traces));
}

// Per-monitor mean percentage error, temperatures compared in degC as
// recorded. Samples whose reference value is exactly 0 degC are undefined
// under this metric; they are skipped and counted in skipped_samples.
struct MpeResult {
  Vector per_monitor;                 // percent
  std::vector<Index> skipped_samples; // per monitor

  bool any_skipped() const {
    for (Index n : skipped_samples) {
      if (n > 0) return true;
    }
    return false;
  }
};

inline MpeResult mean_percentage_error(const TemperatureSeries& pred,
                                       const TemperatureSeries& meas) {
  if (pred.monitor_count() != meas.monitor_count() ||
      pred.sample_count() != meas.sample_count()) {
    throw DimensionError("mean_percentage_error: shapes differ");
  }
  const Index monitors = meas.monitor_count();
  const Index samples = meas.sample_count();
  MpeResult result{Vector(monitors), std::vector<Index>(monitors, 0)};
  for (Index i = 0; i < monitors; ++i) {
    double acc = 0.0;
    Index used = 0;
    for (Index m = 0; m < samples; ++m) {
      const double ref = meas.values()(i, m);
      if (ref == 0.0) {
        ++result.skipped_samples[i];
        continue;
      }
      acc += std::abs(pred.values()(i, m) - ref) / std::abs(ref);
      ++used;
    }
    if (used == 0) {
      throw MetricError("mean_percentage_error: monitor " + std::to_string(i) +
                        " has no nonzero reference samples");
    }
    result.per_monitor(i) = 100.0 * acc / static_cast<double>(used);
  }
  return result;
}

}  // namespace lplsp
