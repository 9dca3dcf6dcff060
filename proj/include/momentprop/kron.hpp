/**
 * @file kron.hpp
 * @brief Kronecker product/power primitives and stacked block layouts.
 *
 * A stacked vector holds the blocks [x^[0]; x^[1]; ...; x^[k]] with block j
 * of length n^j, so its total length is S(n,k) = sum_{i=0}^k n^i.
 */
#pragma once

#include <atomic>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/errors.hpp"

namespace momentprop {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultElementLimit = 10'000'000;

inline std::atomic<std::size_t>& element_limit_storage() {
  static std::atomic<std::size_t> limit{kDefaultElementLimit};
  return limit;
}

/// Maximum number of entries any single matrix may hold.
inline std::size_t element_limit() { return element_limit_storage().load(std::memory_order_relaxed); }

inline void set_element_limit(std::size_t limit) {
  element_limit_storage().store(limit, std::memory_order_relaxed);
}

inline constexpr std::size_t kSaturated = std::numeric_limits<std::size_t>::max();

[[nodiscard]] inline std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > kSaturated / a) {
    return kSaturated;
  }
  return a * b;
}

[[nodiscard]] inline std::size_t saturating_add(std::size_t a, std::size_t b) {
  return (b > kSaturated - a) ? kSaturated : a + b;
}

/// base^exp, saturating at SIZE_MAX.
[[nodiscard]] inline std::size_t saturating_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    r = saturating_mul(r, base);
    if (r == kSaturated) {
      break;
    }
  }
  return r;
}

/// S(n,k) = sum_{i=0}^k n^i, saturating.
[[nodiscard]] inline std::size_t stacked_dim(std::size_t n, std::size_t k) {
  std::size_t total = 0;
  std::size_t term = 1;
  for (std::size_t i = 0; i <= k; ++i) {
    total = saturating_add(total, term);
    term = saturating_mul(term, n);
  }
  return total;
}

inline void check_element_count(std::size_t rows, std::size_t cols, std::string_view what) {
  const std::size_t required = saturating_mul(rows, cols);
  const std::size_t allowed = element_limit();
  if (required > allowed) {
    throw SizeLimitError(std::string(what), required, allowed);
  }
}

/// Entry (i*r + k, j*s + l) of the result equals a(i,j) * b(k,l).
[[nodiscard]] inline Matrix kron_product(const Matrix& a, const Matrix& b) {
  const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
  check_element_count(rows, cols, "kron_product");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) {
        continue;
      }
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = aij * b;
    }
  }
  return out;
}

/// M^[0] = [1], M^[k] = M^[k-1] (x) M.
[[nodiscard]] inline Matrix kron_power(const Matrix& m, std::size_t k) {
  check_element_count(saturating_pow(static_cast<std::size_t>(m.rows()), k),
                      saturating_pow(static_cast<std::size_t>(m.cols()), k), "kron_power");
  Matrix out = Matrix::Ones(1, 1);
  for (std::size_t i = 0; i < k; ++i) {
    out = kron_product(out, m);
  }
  return out;
}

/// Kronecker power of a column vector, x^[k].
[[nodiscard]] inline Vector kron_power(const Vector& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.size());
  check_element_count(saturating_pow(n, k), 1, "kron_power");
  Vector out = Vector::Ones(1);
  for (std::size_t i = 0; i < k; ++i) {
    Vector next(out.size() * x.size());
    for (Eigen::Index a = 0; a < out.size(); ++a) {
      next.segment(a * x.size(), x.size()) = out[a] * x;
    }
    out = std::move(next);
  }
  return out;
}

/// Offsets of the blocks x^[0..max_block] inside a stacked vector.
class BlockLayout {
 public:
  BlockLayout() : BlockLayout(1, 0) {}

  BlockLayout(std::size_t n, std::size_t max_block) : n_(n), max_block_(max_block) {
    if (n == 0) {
      throw PreconditionError("BlockLayout: state dimension must be positive");
    }
    offsets_.reserve(max_block + 2);
    std::size_t off = 0;
    std::size_t size = 1;
    for (std::size_t j = 0; j <= max_block; ++j) {
      offsets_.push_back(off);
      off = saturating_add(off, size);
      size = saturating_mul(size, n);
    }
    offsets_.push_back(off);
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t max_block() const noexcept { return max_block_; }
  std::size_t total() const noexcept { return offsets_.back(); }

  std::size_t offset(std::size_t j) const {
    check(j);
    return offsets_[j];
  }

  std::size_t block_size(std::size_t j) const {
    check(j);
    return offsets_[j + 1] - offsets_[j];
  }

 private:
  void check(std::size_t j) const {
    if (j > max_block_) {
      throw PreconditionError("block index " + std::to_string(j) + " exceeds max block " +
                              std::to_string(max_block_));
    }
  }

  std::size_t n_;
  std::size_t max_block_;
  std::vector<std::size_t> offsets_;
};

/// Block j of a stacked vector (block 0 is the constant slot).
[[nodiscard]] inline Vector stacked_view(const Vector& v, const BlockLayout& layout, std::size_t j) {
  const std::size_t off = layout.offset(j);
  const std::size_t len = layout.block_size(j);
  if (static_cast<std::size_t>(v.size()) != layout.total()) {
    throw PreconditionError("stacked_view: vector length " + std::to_string(v.size()) +
                            " does not match layout length " + std::to_string(layout.total()));
  }
  return v.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(len));
}

}  // namespace momentprop
