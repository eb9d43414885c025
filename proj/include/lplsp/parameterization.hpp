#pragma once

// Theta-vector packings of the coupling matrices. Pack/expand pairs are
// bitwise inverses on their valid domains; symmetric expansion mirrors the
// upper triangle by copy, never by averaging.

#include <Eigen/Core>

#include <string>
#include <utility>

#include "lplsp/errors.hpp"
#include "lplsp/types.hpp"

namespace lplsp {

struct Parameterization {
  enum class Kind { Full, Symmetric, LowRank, TwoStage };

  Kind kind = Kind::Full;
  int rank = 0;  // LowRank only

  static Parameterization full() { return {Kind::Full, 0}; }
  static Parameterization symmetric() { return {Kind::Symmetric, 0}; }
  static Parameterization low_rank(int r) { return {Kind::LowRank, r}; }
  static Parameterization two_stage() { return {Kind::TwoStage, 0}; }

  std::string name() const {
    switch (kind) {
      case Kind::Full: return "full";
      case Kind::Symmetric: return "symmetric";
      case Kind::LowRank: return "lowrank";
      case Kind::TwoStage: return "two-stage";
    }
    return "?";
  }
};

// Validates that a variant makes sense for an M x N system.
inline void validate_variant(const Parameterization& variant, Index monitors,
                             Index sources) {
  if (monitors < 1 || sources < 1) {
    throw ContractError("parameterization: need at least one monitor and one source");
  }
  switch (variant.kind) {
    case Parameterization::Kind::Full:
      return;
    case Parameterization::Kind::Symmetric:
      if (monitors != sources) {
        throw ContractError("symmetric parameterization requires M == N, got M=" +
                            std::to_string(monitors) + " N=" + std::to_string(sources));
      }
      return;
    case Parameterization::Kind::LowRank:
      if (variant.rank < 1 || variant.rank > std::min(monitors, sources)) {
        throw ContractError("lowrank rank must lie in [1, min(M, N)], got " +
                            std::to_string(variant.rank));
      }
      return;
    case Parameterization::Kind::TwoStage:
      if (monitors <= sources) {
        throw ContractError("two-stage parameterization requires M > N, got M=" +
                            std::to_string(monitors) + " N=" + std::to_string(sources));
      }
      return;
  }
}

inline Index param_count(const Parameterization& variant, Index monitors,
                         Index sources) {
  validate_variant(variant, monitors, sources);
  switch (variant.kind) {
    case Parameterization::Kind::Full:
      return 2 * monitors * sources;
    case Parameterization::Kind::Symmetric:
      return sources * (sources + 1);  // two upper triangles incl. diagonal
    case Parameterization::Kind::LowRank:
      return 2 * static_cast<Index>(variant.rank) * (monitors + sources);
    case Parameterization::Kind::TwoStage:
      return sources * (sources + 1) + 2 * (monitors - sources) * sources;
  }
  return 0;
}

// --- Full: row-major R, then row-major K -----------------------------------

inline Vector pack_full(const Matrix& r, const Matrix& k) {
  if (r.rows() != k.rows() || r.cols() != k.cols()) {
    throw DimensionError("pack_full: R and K shapes differ");
  }
  const Index mn = r.size();
  Vector theta(2 * mn);
  Index pos = 0;
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = 0; j < r.cols(); ++j) theta(pos++) = r(i, j);
  }
  for (Index i = 0; i < k.rows(); ++i) {
    for (Index j = 0; j < k.cols(); ++j) theta(pos++) = k(i, j);
  }
  return theta;
}

inline std::pair<Matrix, Matrix> unpack_full(const Vector& theta, Index monitors,
                                             Index sources) {
  if (theta.size() != 2 * monitors * sources) {
    throw DimensionError("unpack_full: theta length " + std::to_string(theta.size()) +
                         " != 2*M*N = " + std::to_string(2 * monitors * sources));
  }
  Matrix r(monitors, sources);
  Matrix k(monitors, sources);
  Index pos = 0;
  for (Index i = 0; i < monitors; ++i) {
    for (Index j = 0; j < sources; ++j) r(i, j) = theta(pos++);
  }
  for (Index i = 0; i < monitors; ++i) {
    for (Index j = 0; j < sources; ++j) k(i, j) = theta(pos++);
  }
  return {std::move(r), std::move(k)};
}

// --- Symmetric: upper triangles (incl. diagonal) of R, then of K, row-major --

inline std::pair<Matrix, Matrix> symmetric_expand(const Vector& theta, Index n) {
  const Index n_half = n * (n + 1) / 2;
  if (theta.size() != 2 * n_half) {
    throw DimensionError("symmetric_expand: theta length " +
                         std::to_string(theta.size()) + " != N(N+1) = " +
                         std::to_string(2 * n_half));
  }
  Matrix r(n, n);
  Matrix k(n, n);
  Index pos = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      r(i, j) = theta(pos);
      r(j, i) = theta(pos);
      ++pos;
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      k(i, j) = theta(pos);
      k(j, i) = theta(pos);
      ++pos;
    }
  }
  return {std::move(r), std::move(k)};
}

inline Vector symmetric_collapse(const Matrix& r, const Matrix& k) {
  if (r.rows() != r.cols() || k.rows() != k.cols() || r.rows() != k.rows()) {
    throw DimensionError("symmetric_collapse: R and K must be square with equal size");
  }
  const Index n = r.rows();
  double max_asym = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      max_asym = std::max(max_asym, std::abs(r(i, j) - r(j, i)));
      max_asym = std::max(max_asym, std::abs(k(i, j) - k(j, i)));
    }
  }
  if (max_asym != 0.0) {
    throw ContractError("symmetric_collapse: input not symmetric, max |A - A^T| = " +
                        std::to_string(max_asym));
  }
  Vector theta(n * (n + 1));
  Index pos = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) theta(pos++) = r(i, j);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) theta(pos++) = k(i, j);
  }
  return theta;
}

// --- Low rank: factors A (MxR), B (NxR), C (MxR), D (NxR), each row-major ---
// R = A B^T, K = C D^T; rank(R) <= r and rank(K) <= r by construction.

inline std::pair<Matrix, Matrix> lowrank_expand(const Vector& theta, Index monitors,
                                                Index sources, int rank) {
  const Index r = rank;
  if (r < 1) {
    throw ContractError("lowrank_expand: rank must be >= 1");
  }
  if (theta.size() != 2 * r * (monitors + sources)) {
    throw DimensionError("lowrank_expand: theta length " + std::to_string(theta.size()) +
                         " != 2r(M+N) = " + std::to_string(2 * r * (monitors + sources)));
  }
  const auto take = [&theta](Index& pos, Index rows, Index cols) {
    Matrix block(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) block(i, j) = theta(pos++);
    }
    return block;
  };
  Index pos = 0;
  const Matrix a = take(pos, monitors, r);
  const Matrix b = take(pos, sources, r);
  const Matrix c = take(pos, monitors, r);
  const Matrix d = take(pos, sources, r);
  return {a * b.transpose(), c * d.transpose()};
}

// --- Two stage: symmetric source block, then sink rows of R and K, row-major --

inline std::pair<Matrix, Matrix> two_stage_expand(const Vector& theta, Index monitors,
                                                  Index sources) {
  validate_variant(Parameterization::two_stage(), monitors, sources);
  const Index sink_rows = monitors - sources;
  const Index expect = sources * (sources + 1) + 2 * sink_rows * sources;
  if (theta.size() != expect) {
    throw DimensionError("two_stage_expand: theta length " + std::to_string(theta.size()) +
                         " != " + std::to_string(expect));
  }
  auto [r_src, k_src] = symmetric_expand(theta.head(sources * (sources + 1)), sources);
  Matrix r(monitors, sources);
  Matrix k(monitors, sources);
  r.topRows(sources) = r_src;
  k.topRows(sources) = k_src;
  Index pos = sources * (sources + 1);
  for (Index i = 0; i < sink_rows; ++i) {
    for (Index j = 0; j < sources; ++j) r(sources + i, j) = theta(pos++);
  }
  for (Index i = 0; i < sink_rows; ++i) {
    for (Index j = 0; j < sources; ++j) k(sources + i, j) = theta(pos++);
  }
  return {std::move(r), std::move(k)};
}

// Expansion dispatch used by residual builders.
inline std::pair<Matrix, Matrix> expand(const Parameterization& variant,
                                        const Vector& theta, Index monitors,
                                        Index sources) {
  switch (variant.kind) {
    case Parameterization::Kind::Full:
      return unpack_full(theta, monitors, sources);
    case Parameterization::Kind::Symmetric:
      validate_variant(variant, monitors, sources);
      return symmetric_expand(theta, sources);
    case Parameterization::Kind::LowRank:
      validate_variant(variant, monitors, sources);
      return lowrank_expand(theta, monitors, sources, variant.rank);
    case Parameterization::Kind::TwoStage:
      return two_stage_expand(theta, monitors, sources);
  }
  throw ContractError("expand: unknown parameterization");
}

}  // namespace lplsp
