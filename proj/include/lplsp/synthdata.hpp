#pragma once

// Synthetic ground-truth models, pseudo-random piecewise-constant excitation
// profiles, and oracle temperature datasets used in place of simulation data.
//
// Everything here is a pure function of its spec, seed included. Streams are
// derived per (seed, purpose, channel); see rng.hpp. Draw order is part of
// the format: profile levels are one uniform per segment, truth matrices are
// drawn row-major (R first, then K), noise is one normal per sample walked
// monitor-major.
//
// Dataset temperatures are produced by forward_naive on purpose: fits
// exercise the vectorized path, so training data comes from the
// independently coded reference path.

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "lplsp/forward.hpp"
#include "lplsp/rng.hpp"
#include "lplsp/types.hpp"

namespace lplsp {

// Stream purposes (documented in the README alongside the generator).
enum class StreamPurpose : std::uint64_t {
  ProfileLevels = 1,
  TruthResistance = 2,
  TruthRate = 3,
  RiseNoise = 4,
  TruthFactors = 5,
};

inline SplitMix64 make_stream(std::uint64_t seed, StreamPurpose purpose,
                              std::uint64_t channel) {
  return make_stream(seed, static_cast<std::uint64_t>(purpose), channel);
}

struct ProfileSpec {
  double duration = 300.0;        // seconds
  double sample_interval = 1.0;   // seconds
  Index segment_count = 8;
  double amplitude_min = 0.0;     // watts
  double amplitude_max = 1.0;     // watts
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_profile_spec(const ProfileSpec& spec) {
  if (!(spec.duration > 0.0) || !(spec.sample_interval > 0.0)) {
    throw ContractError("ProfileSpec: duration and sample_interval must be > 0");
  }
  if (spec.segment_count < 1) {
    throw ContractError("ProfileSpec: segment_count must be >= 1");
  }
  if (!(spec.amplitude_min >= 0.0) || spec.amplitude_max < spec.amplitude_min) {
    throw ContractError("ProfileSpec: need 0 <= amplitude_min <= amplitude_max");
  }
}

inline Index profile_sample_count(const ProfileSpec& spec) {
  return static_cast<Index>(std::llround(spec.duration / spec.sample_interval)) + 1;
}

// Sample 0 is always zero; the remaining T-1 samples split into
// segment_count near-equal spans, each holding one uniformly drawn level.
inline Vector profile_row(const ProfileSpec& spec, Index t_len,
                          std::uint64_t channel) {
  SplitMix64 stream = make_stream(spec.seed, StreamPurpose::ProfileLevels, channel);
  Vector row = Vector::Zero(t_len);
  const Index span = t_len - 1;
  for (Index s = 0; s < spec.segment_count; ++s) {
    const double level = stream.uniform(spec.amplitude_min, spec.amplitude_max);
    const Index begin = 1 + (s * span) / spec.segment_count;
    const Index end = 1 + ((s + 1) * span) / spec.segment_count;
    for (Index m = begin; m < end; ++m) row(m) = level;
  }
  return row;
}

}  // namespace detail

// One excitation row on a uniform grid.
inline std::pair<TimeGrid, Vector> generate_profile(const ProfileSpec& spec) {
  detail::check_profile_spec(spec);
  const Index t_len = detail::profile_sample_count(spec);
  if (spec.segment_count > t_len - 1) {
    throw ContractError("generate_profile: segment_count exceeds the sample count");
  }
  return {TimeGrid::uniform(t_len, spec.sample_interval),
          detail::profile_row(spec, t_len, 0)};
}

// Multi-source excitation; row j is drawn from channel j of the same seed.
inline std::pair<TimeGrid, ExcitationSeries> generate_excitation(
    const ProfileSpec& spec, Index source_count) {
  detail::check_profile_spec(spec);
  if (source_count < 1) {
    throw ContractError("generate_excitation: need at least one source");
  }
  const Index t_len = detail::profile_sample_count(spec);
  if (spec.segment_count > t_len - 1) {
    throw ContractError("generate_excitation: segment_count exceeds the sample count");
  }
  Matrix p(source_count, t_len);
  for (Index j = 0; j < source_count; ++j) {
    p.row(j) = detail::profile_row(spec, t_len, static_cast<std::uint64_t>(j))
                   .transpose();
  }
  return {TimeGrid::uniform(t_len, spec.sample_interval),
          ExcitationSeries(std::move(p))};
}

struct TruthSpec {
  Index monitor_count = 2;
  Index source_count = 2;
  double self_resistance_min = 1.0;  // K/W, co-located diagonal
  double self_resistance_max = 5.0;
  double coupling_decay = 0.3;       // attenuation of off-diagonal / sink couplings
  double rate_min = 0.01;            // 1/s
  double rate_max = 0.5;
  bool symmetric = false;            // symmetrize the leading N x N block
  std::optional<int> target_rank;    // truncated-SVD projection of R and K
  double t0_celsius = 20.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Matrix truncate_rank(const Matrix& m, int rank) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sigma = svd.singularValues();
  for (Index i = rank; i < sigma.size(); ++i) sigma(i) = 0.0;
  return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace detail

// Diagonally dominant ground-truth model: self resistances on the co-located
// diagonal, every other coupling attenuated by coupling_decay, rates drawn
// uniformly. Optional exact block symmetry and low-rank projection (projected
// matrices are re-floored to positivity, which can leave residual rank above
// the target at the 1e-12 scale).
inline CouplingModel generate_truth(const TruthSpec& spec) {
  const Index m_count = spec.monitor_count;
  const Index n_count = spec.source_count;
  if (m_count < 1 || n_count < 1) {
    throw ContractError("TruthSpec: need at least one monitor and one source");
  }
  if (!(spec.self_resistance_min > 0.0) ||
      spec.self_resistance_max < spec.self_resistance_min) {
    throw ContractError("TruthSpec: invalid self-resistance range");
  }
  if (!(spec.rate_min > 0.0) || spec.rate_max < spec.rate_min) {
    throw ContractError("TruthSpec: invalid rate range");
  }
  if (!(spec.coupling_decay > 0.0 && spec.coupling_decay <= 1.0)) {
    throw ContractError("TruthSpec: coupling_decay must lie in (0, 1]");
  }
  if (spec.symmetric && m_count < n_count) {
    throw ContractError("TruthSpec: symmetric requires M >= N");
  }
  if (spec.target_rank &&
      (*spec.target_rank < 1 || *spec.target_rank > std::min(m_count, n_count))) {
    throw ContractError("TruthSpec: target_rank must lie in [1, min(M, N)]");
  }

  SplitMix64 r_stream = make_stream(spec.seed, StreamPurpose::TruthResistance, 0);
  SplitMix64 k_stream = make_stream(spec.seed, StreamPurpose::TruthRate, 0);
  Matrix r(m_count, n_count);
  Matrix k(m_count, n_count);
  for (Index i = 0; i < m_count; ++i) {
    for (Index j = 0; j < n_count; ++j) {
      const double base =
          r_stream.uniform(spec.self_resistance_min, spec.self_resistance_max);
      r(i, j) = (i == j) ? base : base * spec.coupling_decay;
    }
  }
  for (Index i = 0; i < m_count; ++i) {
    for (Index j = 0; j < n_count; ++j) {
      k(i, j) = k_stream.uniform(spec.rate_min, spec.rate_max);
    }
  }

  if (spec.symmetric) {
    for (Index i = 0; i < n_count; ++i) {
      for (Index j = i + 1; j < n_count; ++j) {
        r(j, i) = r(i, j);
        k(j, i) = k(i, j);
      }
    }
  }
  if (spec.target_rank) {
    r = detail::truncate_rank(r, *spec.target_rank)
            .cwiseMax(CouplingModel::kPositivityFloor);
    k = detail::truncate_rank(k, *spec.target_rank)
            .cwiseMax(CouplingModel::kPositivityFloor);
  }

  FitProvenance provenance;
  provenance.variant = "truth";
  if (spec.target_rank) provenance.rank = *spec.target_rank;
  provenance.colocated_count = std::min(m_count, n_count);
  return CouplingModel(std::move(r), std::move(k), spec.t0_celsius, provenance);
}

// Correlated ground truth: R = A A_src^T and K = C C_src^T from strictly
// positive factor rows, so both matrices have rank <= `rank` up to rounding,
// the leading N x N block is exactly symmetric, and no coupling sits near
// zero. Every estimation strategy can represent such a system exactly, which
// makes it the benchmark fixture of choice when methods are compared on one
// dataset. Source i leans on spatial mode i % rank; sink rows couple
// broadly. Deterministic in the seed.
inline CouplingModel generate_correlated_truth(Index monitors, Index sources,
                                               int rank, std::uint64_t seed,
                                               double t0_celsius = 20.0) {
  if (sources < 1 || monitors < sources) {
    throw ContractError("generate_correlated_truth: need M >= N >= 1");
  }
  if (rank < 1 || rank > sources) {
    throw ContractError("generate_correlated_truth: rank must lie in [1, N]");
  }
  SplitMix64 rng = make_stream(seed, StreamPurpose::TruthFactors, 0);

  Matrix a(monitors, rank);  // resistance factors, sqrt(K/W)
  Matrix c(monitors, rank);  // rate factors, sqrt(1/s)
  for (Index i = 0; i < monitors; ++i) {
    Eigen::RowVectorXd a_dir(rank);
    Eigen::RowVectorXd c_dir(rank);
    for (Index r = 0; r < rank; ++r) {
      a_dir(r) = 0.2 + 0.3 * rng.next_double();
      c_dir(r) = 0.45 + 0.35 * rng.next_double();
    }
    if (i < sources) {
      a_dir(i % rank) += 1.0;
    } else {
      a_dir.array() += 0.5;
    }
    a_dir /= a_dir.norm();
    c_dir /= c_dir.norm();
    const double self =
        i < sources ? rng.uniform(1.5, 4.0) : rng.uniform(0.6, 1.2);
    const double pace = rng.uniform(0.06, 0.35);
    a.row(i) = std::sqrt(self) * a_dir;
    c.row(i) = std::sqrt(pace) * c_dir;
  }

  // Explicit dot products; mirrored entries keep the block bitwise symmetric.
  const auto gram = [&](const Matrix& factors) {
    Matrix out(monitors, sources);
    for (Index i = 0; i < monitors; ++i) {
      for (Index j = 0; j < sources; ++j) {
        if (j < i && i < sources) {
          out(i, j) = out(j, i);
          continue;
        }
        double dot = 0.0;
        for (Index r = 0; r < rank; ++r) dot += factors(i, r) * factors(j, r);
        out(i, j) = dot;
      }
    }
    return out;
  };
  FitProvenance provenance;
  provenance.variant = "truth";
  provenance.rank = rank;
  provenance.colocated_count = sources;
  return CouplingModel(gram(a), gram(c), t0_celsius, provenance);
}

// Oracle dataset: traces from forward_naive, then optional multiplicative
// Gaussian noise on the temperature rise, so T(0) == T0 survives noise
// exactly. noise_rel is the relative standard deviation of the rise.
inline TransientDataset synthesize_dataset(const CouplingModel& model,
                                           const ExcitationSeries& powers,
                                           const TimeGrid& grid,
                                           double noise_rel = 0.0,
                                           std::uint64_t seed = 0,
                                           std::optional<Index> colocated = {}) {
  if (!(noise_rel >= 0.0)) {
    throw ContractError("synthesize_dataset: noise_rel must be >= 0");
  }
  if (model.source_count() != powers.source_count()) {
    throw DimensionError("synthesize_dataset: model/excitation source counts differ");
  }
  const Index monitors = model.monitor_count();
  const Index t_len = grid.size();
  Matrix temps(monitors, t_len);
  for (Index i = 0; i < monitors; ++i) {
    temps.row(i) = forward_naive(powers, grid, model.R().row(i),
                                 model.K().row(i), model.t0())
                       .transpose();
  }
  if (noise_rel > 0.0) {
    for (Index i = 0; i < monitors; ++i) {
      SplitMix64 stream = make_stream(seed, StreamPurpose::RiseNoise,
                                      static_cast<std::uint64_t>(i));
      for (Index m = 0; m < t_len; ++m) {
        const double rise = temps(i, m) - model.t0();
        temps(i, m) = model.t0() + rise * (1.0 + noise_rel * stream.normal());
      }
    }
  }
  const Index coloc =
      colocated.value_or(std::min(monitors, model.source_count()));
  return TransientDataset(grid, powers, TemperatureSeries(std::move(temps)),
                          model.t0(), coloc);
}

}  // namespace lplsp
