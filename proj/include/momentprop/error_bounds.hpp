/**
 * @file error_bounds.hpp
 * @brief Truncation-error coefficients and the global / row / refined error bounds.
 *
 * The error of the order-j0 moment after t steps is e = sum_j Et_j E[x0^[j]], where
 * Et_j is row block j0 of the full moment product minus row block j0 of the
 * truncated product E(N_T,N_T)^t (zero-padded above N_T).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "momentprop/carleman.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/initial_moments.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

inline bool exactness_condition(std::size_t j0, std::size_t t, std::size_t d_S, std::size_t N_T) {
  return saturating_mul(j0, saturating_pow(d_S, t)) <= N_T;
}

struct ErrorCoefficients {
  std::size_t j0 = 1;
  std::size_t t = 0;
  std::size_t N_T = 0;
  std::size_t n = 1;
  bool exact = false;
  std::vector<Matrix> coeffs;  // Et_j, j = 0..j0*d_S^t

  std::size_t max_order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  std::size_t rows() const { return saturating_pow(n, j0); }

  /// v_{j,i}: row i of Et_j.
  Eigen::RowVectorXd row(std::size_t j, std::size_t i) const {
    return coeffs.at(j).row(static_cast<Eigen::Index>(i));
  }
};

namespace bounds_detail {

class BlockCache {
 public:
  explicit BlockCache(const CoefficientModel& model) : model_(model) {}

  const Matrix& get(std::size_t j, std::size_t k) {
    auto key = std::make_pair(j, k);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, build_E_jk(model_, j, k)).first;
    return it->second;
  }

 private:
  const CoefficientModel& model_;
  std::map<std::pair<std::size_t, std::size_t>, Matrix> cache_;
};

/// Row block j0 of a t-fold product of moment-transfer blocks, restricted to orders <= cap(step).
inline std::vector<Matrix> row_product(BlockCache& blocks, std::size_t n, std::size_t d, std::size_t j0, std::size_t t,
                                       std::size_t cap) {
  const std::size_t rows = saturating_pow(n, j0);
  std::vector<Matrix> cur(j0 + 1);
  for (std::size_t k = 0; k < j0; ++k) cur[k] = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(saturating_pow(n, k)));
  cur[j0] = Matrix::Identity(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (std::size_t s = 0; s < t; ++s) {
    const std::size_t top = std::min(cap, saturating_mul(cur.size() - 1, d));
    std::vector<Matrix> next(top + 1);
    for (std::size_t l = 0; l <= top; ++l) {
      next[l] = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(saturating_pow(n, l)));
    }
    for (std::size_t k = 0; k < cur.size(); ++k) {
      if (cur[k].cwiseAbs().maxCoeff() == 0.0) continue;
      const std::size_t lmax = std::min(top, saturating_mul(k, d));
      for (std::size_t l = 0; l <= lmax; ++l) {
        const Matrix& E = blocks.get(k, l);
        if (E.size() == 0) continue;
        next[l].noalias() += cur[k] * E;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace bounds_detail

inline ErrorCoefficients build_error_coefficients(const CoefficientModel& model, std::size_t j0, std::size_t t,
                                                  std::size_t N_T) {
  if (j0 > N_T) {
    throw PreconditionError("target order " + std::to_string(j0) + " exceeds truncation limit " + std::to_string(N_T));
  }
  const std::size_t n = model.n;
  const std::size_t d = model.degree;
  const std::size_t D = saturating_mul(j0, saturating_pow(d, t));
  const std::size_t rows = saturating_pow(n, j0);
  if (D == kSaturated) throw SizeLimitError("error coefficients", kSaturated, element_limit());
  check_element_count(rows, stacked_dim(n, D), "error coefficients up to order " + std::to_string(D));

  ErrorCoefficients ec;
  ec.j0 = j0;
  ec.t = t;
  ec.N_T = N_T;
  ec.n = n;
  ec.exact = exactness_condition(j0, t, d, N_T);
  ec.coeffs.resize(D + 1);
  if (ec.exact) {
    for (std::size_t j = 0; j <= D; ++j) {
      ec.coeffs[j] = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(saturating_pow(n, j)));
    }
    return ec;
  }

  bounds_detail::BlockCache blocks(model);
  const auto full = bounds_detail::row_product(blocks, n, d, j0, t, D);
  const auto trunc = bounds_detail::row_product(blocks, n, d, j0, t, N_T);
  for (std::size_t j = 0; j <= D; ++j) {
    Matrix m = j < full.size()
                   ? full[j]
                   : Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(saturating_pow(n, j)));
    if (j < trunc.size()) m -= trunc[j];
    ec.coeffs[j] = std::move(m);
  }
  return ec;
}

enum class NormKind { spectral, frobenius };

inline const char* norm_kind_name(NormKind k) { return k == NormKind::spectral ? "spectral" : "frobenius"; }

inline constexpr Eigen::Index kSpectralNormMaxEntries = 10'000;

/// Spectral norm for blocks with at most 1e4 entries, Frobenius (an upper bound) otherwise.
inline std::pair<double, NormKind> matrix_norm(const Matrix& m) {
  if (m.size() == 0) return {0.0, NormKind::spectral};
  if (m.size() > kSpectralNormMaxEntries) return {m.norm(), NormKind::frobenius};
  if (m.rows() == 1 || m.cols() == 1) return {m.norm(), NormKind::spectral};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return {svd.singularValues()(0), NormKind::spectral};
}

/// E[x0^[j]] and their norms for j = 0..max_order.
struct InitialMomentTable {
  std::vector<Vector> moments;
  std::vector<double> norms;

  double xi() const { return *std::max_element(norms.begin(), norms.end()); }
};

inline InitialMomentTable initial_moment_table(const InitialMomentEngine& engine, std::size_t n, std::size_t max_order) {
  check_element_count(stacked_dim(n, max_order), 1, "initial moment table");
  InitialMomentTable tab;
  for (std::size_t j = 0; j <= max_order; ++j) {
    tab.moments.push_back(engine.kron_moment(j));
    tab.norms.push_back(tab.moments.back().norm());
  }
  return tab;
}

inline InitialMomentTable initial_moment_table(const InitialStateModel& init, std::size_t max_order) {
  return initial_moment_table(InitialMomentEngine(init), init.dimension(), max_order);
}

struct GlobalBound {
  double bound = 0.0;
  double xi = 0.0;
  std::string norm_kind;
};

inline GlobalBound global_bound(const ErrorCoefficients& ec, const std::vector<double>& norms) {
  if (norms.size() < ec.coeffs.size()) throw PreconditionError("moment norm table too short for error coefficients");
  GlobalBound g;
  g.xi = *std::max_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(ec.coeffs.size()));
  bool spectral = false;
  bool frobenius = false;
  double sum = 0.0;
  for (const Matrix& m : ec.coeffs) {
    auto [v, kind] = matrix_norm(m);
    sum += v;
    (kind == NormKind::spectral ? spectral : frobenius) = true;
  }
  g.bound = g.xi * sum;
  g.norm_kind = spectral && frobenius ? "mixed" : (frobenius ? "frobenius" : "spectral");
  return g;
}

struct RowBound {
  double bound = 0.0;
  double xi_J = 0.0;
};

/// |sum_{j in J} v_{j,i} m_j| + xi_J * sum_{j not in J} ||v_{j,i}||.
inline RowBound refined_row_bound(const ErrorCoefficients& ec, const InitialMomentTable& tab, std::size_t i,
                                  const std::vector<std::size_t>& J) {
  const std::size_t D = ec.max_order();
  if (tab.moments.size() <= D) throw PreconditionError("initial moment table too short for error coefficients");
  if (i >= ec.rows()) throw PreconditionError("row index out of range");
  std::vector<char> in(D + 1, 0);
  for (std::size_t j : J) {
    if (j > D) throw PreconditionError("index set element " + std::to_string(j) + " exceeds " + std::to_string(D));
    in[j] = 1;
  }
  double inside = 0.0;
  double outside = 0.0;
  RowBound rb;
  for (std::size_t j = 0; j <= D; ++j) {
    const auto v = ec.row(j, i);
    if (in[j]) {
      inside += v.dot(tab.moments[j]);
    } else {
      rb.xi_J = std::max(rb.xi_J, tab.norms[j]);
      outside += v.norm();
    }
  }
  rb.bound = std::abs(inside) + rb.xi_J * outside;
  return rb;
}

enum class JStrategy { by_row_norm, by_moment_norm };

inline const char* strategy_name(JStrategy s) { return s == JStrategy::by_row_norm ? "row-norm" : "moment-norm"; }

/// The k indices with the largest row norm (or moment norm); ties go to the smaller index.
inline std::vector<std::size_t> choose_J(const ErrorCoefficients& ec, const std::vector<double>& norms, std::size_t i,
                                         std::size_t k, JStrategy strategy) {
  const std::size_t count = ec.max_order() + 1;
  if (k > count) throw PreconditionError("index set size exceeds number of moment orders");
  std::vector<double> score(count);
  for (std::size_t j = 0; j < count; ++j) {
    score[j] = strategy == JStrategy::by_row_norm ? ec.row(j, i).norm() : norms.at(j);
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct BoundReport {
  std::size_t j0 = 1;
  std::size_t t = 0;
  std::size_t N_T = 0;
  std::vector<std::size_t> J;
  double global_bound = 0.0;
  std::vector<double> row_bounds;
  double xi = 0.0;
  double xi_J = 0.0;
  std::string norm_kind;
  bool exact = false;
};

inline BoundReport make_bound_report(const ErrorCoefficients& ec, const InitialMomentTable& tab,
                                     const std::vector<std::size_t>& J) {
  BoundReport r;
  r.j0 = ec.j0;
  r.t = ec.t;
  r.N_T = ec.N_T;
  r.J = J;
  r.exact = ec.exact;
  const GlobalBound g = global_bound(ec, tab.norms);
  r.global_bound = g.bound;
  r.xi = g.xi;
  r.norm_kind = g.norm_kind;
  for (std::size_t i = 0; i < ec.rows(); ++i) {
    const RowBound rb = refined_row_bound(ec, tab, i, J);
    r.row_bounds.push_back(rb.bound);
    r.xi_J = rb.xi_J;
  }
  return r;
}

inline void write_bound_header(CsvWriter& csv) {
  csv.header({"j0", "t", "N_T", "J_size", "strategy", "row", "bound", "xi", "xi_J", "norm_kind", "exact"});
}

}  // namespace momentprop
