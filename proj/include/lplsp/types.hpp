#pragma once

// Domain types for lumped-parameter linear-superposition (LPLSP) thermal
// models: T_i(t) = T0 + sum_j over steps of P_j of R_ij * dP * (1 - exp(-K_ij dt)).
// All types are immutable after construction and safe to share across threads.

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "lplsp/errors.hpp"

namespace lplsp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sample times in seconds, strictly increasing, t(0) >= 0. Non-uniform
// spacing is allowed; kernels always use true time differences.
class TimeGrid {
public:
  explicit TimeGrid(Vector t) : t_(std::move(t)) {
    if (t_.size() < 2) {
      throw ContractError("TimeGrid: need at least two samples");
    }
    if (!t_.allFinite()) {
      throw ContractError("TimeGrid: non-finite time stamp");
    }
    if (t_(0) < 0.0) {
      throw ContractError("TimeGrid: t(0) must be >= 0");
    }
    for (Index k = 1; k < t_.size(); ++k) {
      if (!(t_(k) > t_(k - 1))) {
        throw ContractError("TimeGrid: not strictly increasing at index " +
                            std::to_string(k));
      }
    }
  }

  static TimeGrid uniform(Index samples, double dt, double t_start = 0.0) {
    if (samples < 2 || !(dt > 0.0)) {
      throw ContractError("TimeGrid::uniform: need samples >= 2 and dt > 0");
    }
    Vector t(samples);
    for (Index k = 0; k < samples; ++k) {
      t(k) = t_start + static_cast<double>(k) * dt;
    }
    return TimeGrid(std::move(t));
  }

  Index size() const { return t_.size(); }
  double operator()(Index k) const { return t_(k); }
  const Vector& values() const { return t_; }

private:
  Vector t_;
};

// Power dissipations in watts, one row per source, piecewise constant
// between samples. The first sample of every row is forced to zero on
// construction; the model superposes steps relative to a cold start.
class ExcitationSeries {
public:
  explicit ExcitationSeries(Matrix p) : p_(std::move(p)) {
    if (p_.rows() < 1 || p_.cols() < 1) {
      throw ContractError("ExcitationSeries: need at least one source and one sample");
    }
    if (!p_.allFinite()) {
      throw ContractError("ExcitationSeries: non-finite power value");
    }
    p_.col(0).setZero();
  }

  Index source_count() const { return p_.rows(); }
  Index sample_count() const { return p_.cols(); }
  const Matrix& values() const { return p_; }
  Eigen::MatrixXd::ConstRowXpr row(Index j) const { return p_.row(j); }

private:
  Matrix p_;
};

// Temperatures in degrees Celsius, one row per monitor point.
class TemperatureSeries {
public:
  explicit TemperatureSeries(Matrix t) : t_(std::move(t)) {
    if (t_.rows() < 1 || t_.cols() < 1) {
      throw ContractError("TemperatureSeries: need at least one monitor and one sample");
    }
    if (!t_.allFinite()) {
      throw ContractError("TemperatureSeries: non-finite temperature value");
    }
  }

  Index monitor_count() const { return t_.rows(); }
  Index sample_count() const { return t_.cols(); }
  const Matrix& values() const { return t_; }
  Eigen::MatrixXd::ConstRowXpr row(Index i) const { return t_.row(i); }

private:
  Matrix t_;
};

// How a model was obtained; carried for reporting and serialization only.
struct FitProvenance {
  std::string variant;  // "full" | "symmetric" | "lowrank" | "two-stage" | "truth"
  std::optional<int> rank;
  std::optional<Index> colocated_count;
  std::optional<double> residual_norm;
  std::optional<int> iterations;
  std::optional<double> elapsed_s;
};

// The fitted reduced-order model: R (K/W) and K (1/s), both M x N, plus the
// initial temperature. Entries must be strictly positive; fits floor values
// below 1e-12 before constructing a model.
class CouplingModel {
public:
  static constexpr double kPositivityFloor = 1e-12;

  CouplingModel(Matrix r, Matrix k, double t0_celsius,
                std::optional<FitProvenance> provenance = std::nullopt)
      : r_(std::move(r)),
        k_(std::move(k)),
        t0_(t0_celsius),
        provenance_(std::move(provenance)) {
    if (r_.rows() != k_.rows() || r_.cols() != k_.cols()) {
      throw DimensionError("CouplingModel: R and K shapes differ");
    }
    if (r_.rows() < 1 || r_.cols() < 1) {
      throw ContractError("CouplingModel: need at least one monitor and one source");
    }
    if (!r_.allFinite() || !k_.allFinite() || !std::isfinite(t0_)) {
      throw ParameterError("CouplingModel: non-finite entry");
    }
    if ((r_.array() <= 0.0).any() || (k_.array() <= 0.0).any()) {
      throw ParameterError("CouplingModel: R and K entries must be strictly positive");
    }
  }

  Index monitor_count() const { return r_.rows(); }
  Index source_count() const { return r_.cols(); }
  const Matrix& R() const { return r_; }
  const Matrix& K() const { return k_; }
  double t0() const { return t0_; }
  const std::optional<FitProvenance>& provenance() const { return provenance_; }

private:
  Matrix r_;
  Matrix k_;
  double t0_;
  std::optional<FitProvenance> provenance_;
};

// One training record: excitations, measured temperatures, shared grid.
// Temperature rows 0..colocated_count-1 are monitors sitting on sources
// 0..colocated_count-1; symmetric and two-stage fits require
// colocated_count == source_count.
class TransientDataset {
public:
  TransientDataset(TimeGrid grid, ExcitationSeries powers,
                   TemperatureSeries temperatures, double t0_celsius,
                   Index colocated_count)
      : grid_(std::move(grid)),
        powers_(std::move(powers)),
        temperatures_(std::move(temperatures)),
        t0_(t0_celsius),
        colocated_(colocated_count) {
    if (powers_.sample_count() != grid_.size() ||
        temperatures_.sample_count() != grid_.size()) {
      throw DimensionError("TransientDataset: sample counts do not match the grid");
    }
    if (!std::isfinite(t0_)) {
      throw ParameterError("TransientDataset: non-finite T0");
    }
    const Index cap = std::min(monitor_count(), source_count());
    if (colocated_ < 0 || colocated_ > cap) {
      throw ContractError("TransientDataset: colocated_count out of range [0, " +
                          std::to_string(cap) + "]");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  const ExcitationSeries& powers() const { return powers_; }
  const TemperatureSeries& temperatures() const { return temperatures_; }
  double t0() const { return t0_; }
  Index colocated_count() const { return colocated_; }
  Index source_count() const { return powers_.source_count(); }
  Index monitor_count() const { return temperatures_.monitor_count(); }
  Index sample_count() const { return grid_.size(); }

private:
  TimeGrid grid_;
  ExcitationSeries powers_;
  TemperatureSeries temperatures_;
  double t0_;
  Index colocated_;
};

// A change of input level. The new level is treated as applied at the
// previous time stamp: onset_time = t(index - 1).
struct StepEvent {
  Index index = 0;           // sample index k >= 1 where the value changes
  double delta_power = 0.0;  // P(k) - P(k-1), watts
  double onset_time = 0.0;   // t(k-1), seconds
};

}  // namespace lplsp
