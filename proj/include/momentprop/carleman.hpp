/**
 * @file carleman.hpp
 * @brief Index sets H_{j,k}, expected transfer blocks E_{j,k} and the block matrix E(N,M).
 *
 * A_{j,k}(t) = sum over (i_1..i_j) in H_{j,k} of F_{i_1}(t) (x) ... (x) F_{i_j}(t), and
 * E_{j,k} = E[A_{j,k}(t)]. Because every F_i is affine in the per-step parameters,
 * the Kronecker products are expanded into terms keyed by parameter exponent
 * vectors; each key contributes prod_p E[w_p^{c_p}].
 */
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "momentprop/distributions.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/parallel.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

struct IndexSequenceSet {
  std::size_t j = 0;
  std::size_t k = 0;
  std::size_t degree = 0;
  std::vector<std::vector<std::size_t>> sequences;
};

/// All length-j tuples with entries <= degree summing to k, in lexicographic order.
inline IndexSequenceSet enumerate_H(std::size_t j, std::size_t k, std::size_t degree) {
  IndexSequenceSet set{j, k, degree, {}};
  if (k > j * degree) return set;
  std::vector<std::size_t> seq(j, 0);
  auto recurse = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos == j) {
      if (remaining == 0) set.sequences.push_back(seq);
      return;
    }
    const std::size_t slots_after = j - pos - 1;
    for (std::size_t i = 0; i <= std::min(degree, remaining); ++i) {
      if (remaining - i > slots_after * degree) continue;
      seq[pos] = i;
      self(self, pos + 1, remaining - i);
    }
  };
  recurse(recurse, 0, k);
  return set;
}

using ExponentKey = std::vector<unsigned>;
using GroupedTerms = std::map<ExponentKey, Matrix>;

/// prod_p E[w_p^{c_p}] (parameters are independent within a step).
inline double parameter_moment(const CoefficientModel& model, const ExponentKey& key) {
  double m = 1.0;
  for (std::size_t p = 0; p < key.size(); ++p) {
    if (key[p] != 0) m *= raw_moment(model.params[p], key[p]);
  }
  return m;
}

namespace carleman_detail {

inline void accumulate(GroupedTerms& acc, ExponentKey key, Matrix&& m) {
  auto it = acc.find(key);
  if (it == acc.end()) {
    acc.emplace(std::move(key), std::move(m));
  } else {
    it->second += m;
  }
}

// Multiplies every grouped term on the right by F_i, splitting F_i into its affine parts.
inline void extend(const CoefficientModel& model, const GroupedTerms& prefix, std::size_t i, GroupedTerms& out) {
  for (const auto& [key, block] : prefix) {
    for (std::size_t p = 0; p <= model.num_params(); ++p) {
      const Matrix& term = model.term(i, p);
      if (term.isZero(0.0)) continue;
      ExponentKey next = key;
      if (p > 0) ++next[p - 1];
      accumulate(out, std::move(next), kron_product(block, term));
    }
  }
}

inline Matrix collapse(const CoefficientModel& model, const GroupedTerms& terms, std::size_t rows, std::size_t cols) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (const auto& [key, block] : terms) out += parameter_moment(model, key) * block;
  return out;
}

inline GroupedTerms unit_terms(const CoefficientModel& model) {
  GroupedTerms g;
  g.emplace(ExponentKey(model.num_params(), 0), Matrix::Ones(1, 1));
  return g;
}

}  // namespace carleman_detail

/// E[F_{i_1} (x) ... (x) F_{i_j}], shape n^j x n^{sum seq}.
inline Matrix expected_kron_block(const CoefficientModel& model, const std::vector<std::size_t>& seq) {
  std::size_t cols_pow = 0;
  for (std::size_t i : seq) {
    if (i > model.degree) throw PreconditionError("sequence entry exceeds the polynomial degree");
    cols_pow += i;
  }
  const std::size_t rows = saturating_pow(model.n, seq.size());
  const std::size_t cols = saturating_pow(model.n, cols_pow);
  check_element_count(rows, cols, "expected_kron_block");
  GroupedTerms terms = carleman_detail::unit_terms(model);
  for (std::size_t i : seq) {
    GroupedTerms next;
    carleman_detail::extend(model, terms, i, next);
    terms = std::move(next);
  }
  return carleman_detail::collapse(model, terms, rows, cols);
}

/// Structurally-zero blocks (empty H_{j,k}) are stored as 0x0 matrices.
class ExpectedBlockMatrix {
 public:
  ExpectedBlockMatrix(std::size_t n, std::size_t rows_blocks, std::size_t col_blocks)
      : n_(n), N_(rows_blocks), M_(col_blocks), rows_(n, rows_blocks), cols_(n, col_blocks),
        blocks_((rows_blocks + 1) * (col_blocks + 1)) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }
  const BlockLayout& row_layout() const noexcept { return rows_; }
  const BlockLayout& col_layout() const noexcept { return cols_; }

  bool stored(std::size_t j, std::size_t k) const { return blocks_.at(index(j, k)).size() != 0; }

  Matrix block(std::size_t j, std::size_t k) const {
    const Matrix& b = blocks_.at(index(j, k));
    if (b.size() != 0) return b;
    return Matrix::Zero(static_cast<Eigen::Index>(rows_.block_size(j)), static_cast<Eigen::Index>(cols_.block_size(k)));
  }

  void set_block(std::size_t j, std::size_t k, Matrix m) { blocks_.at(index(j, k)) = std::move(m); }

  /// Dense S(n,N) x S(n,M) matrix.
  Matrix assemble() const {
    check_element_count(rows_.total(), cols_.total(), "E(N,M) assembly");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows_.total()), static_cast<Eigen::Index>(cols_.total()));
    for (std::size_t j = 0; j <= N_; ++j) {
      for (std::size_t k = 0; k <= M_; ++k) {
        const Matrix& b = blocks_[index(j, k)];
        if (b.size() == 0) continue;
        out.block(static_cast<Eigen::Index>(rows_.offset(j)), static_cast<Eigen::Index>(cols_.offset(k)), b.rows(),
                  b.cols()) = b;
      }
    }
    return out;
  }

  static ExpectedBlockMatrix from_dense(std::size_t n, std::size_t N, std::size_t M, const Matrix& dense) {
    ExpectedBlockMatrix e(n, N, M);
    if (static_cast<std::size_t>(dense.rows()) != e.rows_.total() ||
        static_cast<std::size_t>(dense.cols()) != e.cols_.total()) {
      throw PreconditionError("dense matrix shape does not match E(N,M) layout");
    }
    for (std::size_t j = 0; j <= N; ++j) {
      for (std::size_t k = 0; k <= M; ++k) {
        Matrix b = dense.block(static_cast<Eigen::Index>(e.rows_.offset(j)), static_cast<Eigen::Index>(e.cols_.offset(k)),
                               static_cast<Eigen::Index>(e.rows_.block_size(j)),
                               static_cast<Eigen::Index>(e.cols_.block_size(k)));
        if (!b.isZero(0.0)) e.set_block(j, k, std::move(b));
      }
    }
    return e;
  }

 private:
  std::size_t index(std::size_t j, std::size_t k) const {
    if (j > N_ || k > M_) throw PreconditionError("block (" + std::to_string(j) + "," + std::to_string(k) + ") out of range");
    return j * (M_ + 1) + k;
  }

  std::size_t n_;
  std::size_t N_;
  std::size_t M_;
  BlockLayout rows_;
  BlockLayout cols_;
  std::vector<Matrix> blocks_;
};

/**
 * Builds E(N,M) row by row using
 *   A_{j,k} = sum_{i=0}^{d_S} A_{j-1,k-i} (x) F_i,
 * i.e. the sum over H_{j,k} grouped by the last sequence entry. Blocks of one
 * row are independent and are assembled in parallel.
 */
inline ExpectedBlockMatrix build_E(const CoefficientModel& model, std::size_t N, std::size_t M, std::size_t threads = 1) {
  check_element_count(stacked_dim(model.n, N), stacked_dim(model.n, M), "E(" + std::to_string(N) + "," + std::to_string(M) + ")");
  ExpectedBlockMatrix e(model.n, N, M);
  e.set_block(0, 0, Matrix::Ones(1, 1));
  std::vector<GroupedTerms> prev(M + 1);
  prev[0] = carleman_detail::unit_terms(model);
  for (std::size_t j = 1; j <= N; ++j) {
    std::vector<GroupedTerms> cur(M + 1);
    std::vector<Matrix> row(M + 1);
    parallel_for(M + 1, threads, [&](std::size_t k) {
      if (k > j * model.degree) return;
      GroupedTerms acc;
      for (std::size_t i = 0; i <= std::min(model.degree, k); ++i) {
        carleman_detail::extend(model, prev[k - i], i, acc);
      }
      if (acc.empty()) return;
      row[k] = carleman_detail::collapse(model, acc, e.row_layout().block_size(j), e.col_layout().block_size(k));
      cur[k] = std::move(acc);
    });
    for (std::size_t k = 0; k <= M; ++k) {
      if (row[k].size() != 0) e.set_block(j, k, std::move(row[k]));
    }
    prev = std::move(cur);
  }
  return e;
}

/// E_{j,k} alone, shape n^j x n^k (zero when H_{j,k} is empty).
inline Matrix build_E_jk(const CoefficientModel& model, std::size_t j, std::size_t k) {
  const std::size_t rows = saturating_pow(model.n, j);
  const std::size_t cols = saturating_pow(model.n, k);
  check_element_count(rows, cols, "E_{" + std::to_string(j) + "," + std::to_string(k) + "}");
  if (j == 0) return k == 0 ? Matrix::Ones(1, 1) : Matrix::Zero(1, static_cast<Eigen::Index>(cols));
  if (k > j * model.degree) return Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Prefix rows only need column blocks that can still reach k.
  std::vector<GroupedTerms> prev(k + 1);
  prev[0] = carleman_detail::unit_terms(model);
  for (std::size_t row = 1; row <= j; ++row) {
    std::vector<GroupedTerms> cur(k + 1);
    const std::size_t remaining = j - row;
    for (std::size_t kk = 0; kk <= k; ++kk) {
      if (kk > row * model.degree || k - kk > remaining * model.degree) continue;
      for (std::size_t i = 0; i <= std::min(model.degree, kk); ++i) carleman_detail::extend(model, prev[kk - i], i, cur[kk]);
    }
    prev = std::move(cur);
  }
  return carleman_detail::collapse(model, prev[k], rows, cols);
}

/// A_{j,k}(w) for one fixed parameter draw (no expectation).
inline Matrix realized_A_jk(const CoefficientModel& model, const std::vector<double>& w, std::size_t j, std::size_t k) {
  std::vector<Matrix> f;
  for (std::size_t i = 0; i <= model.degree; ++i) f.push_back(model.coefficient(i, w));
  std::vector<Matrix> prev(k + 1);
  prev[0] = Matrix::Ones(1, 1);
  for (std::size_t row = 1; row <= j; ++row) {
    std::vector<Matrix> cur(k + 1);
    for (std::size_t kk = 0; kk <= k; ++kk) {
      for (std::size_t i = 0; i <= std::min(model.degree, kk); ++i) {
        if (prev[kk - i].size() == 0) continue;
        Matrix term = kron_product(prev[kk - i], f[i]);
        if (cur[kk].size() == 0) {
          cur[kk] = std::move(term);
        } else {
          cur[kk] += term;
        }
      }
    }
    prev = std::move(cur);
  }
  if (prev[k].size() == 0) {
    return Matrix::Zero(static_cast<Eigen::Index>(saturating_pow(model.n, j)), static_cast<Eigen::Index>(saturating_pow(model.n, k)));
  }
  return prev[k];
}

}  // namespace momentprop
