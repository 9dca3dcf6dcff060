/**
 * @file reduced_propagation.hpp
 * @brief Truncated moment iteration over the monomial basis {x^a : |a| <= N_T}.
 *
 * Every block of the stacked Kronecker moment vector is a symmetric tensor, so it is
 * fully described by the raw moments E[x^a]. Iterating those moments with the same
 * truncation (drop all terms of degree > N_T) yields exactly the dense iteration,
 * at size C(n+N_T, n) instead of (n^{N_T+1}-1)/(n-1).
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "momentprop/carleman.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/initial_moments.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/parallel.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

/// Graded set of exponent vectors of total degree <= max_degree in n variables.
class MonomialBasis {
 public:
  MonomialBasis(std::size_t n, std::size_t max_degree) : n_(n), max_degree_(max_degree) {
    std::vector<unsigned> e(n, 0);
    for (std::size_t d = 0; d <= max_degree; ++d) {
      fill(e, 0, static_cast<unsigned>(d));
      if (n == 0) break;
    }
    for (std::size_t i = 0; i < exps_.size(); ++i) index_.emplace(exps_[i], i);
    times_var_.assign(exps_.size() * n, -1);
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      for (std::size_t v = 0; v < n; ++v) {
        auto up = exps_[i];
        ++up[v];
        auto it = index_.find(up);
        if (it != index_.end()) times_var_[i * n + v] = static_cast<long>(it->second);
      }
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t max_degree() const noexcept { return max_degree_; }
  std::size_t size() const noexcept { return exps_.size(); }
  const std::vector<unsigned>& exponents(std::size_t idx) const { return exps_.at(idx); }

  /// Index of the given exponent vector, or -1 if its degree exceeds the basis.
  long index(const std::vector<unsigned>& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
  }

  /// Index of x^a * x_v, or -1 past the degree cap.
  long times_var(std::size_t idx, std::size_t v) const { return times_var_[idx * n_ + v]; }

  /// Index of the monomial matching a Kronecker position of block j (digits base n).
  long kron_index(std::size_t j, std::size_t pos) const {
    std::vector<unsigned> e(n_, 0);
    for (std::size_t m = 0; m < j; ++m) {
      ++e[pos % n_];
      pos /= n_;
    }
    return index(e);
  }

 private:
  void fill(std::vector<unsigned>& e, std::size_t var, unsigned remaining) {
    if (var + 1 >= n_) {
      if (n_ > 0) e[var] = remaining;
      if (n_ > 0 || remaining == 0) exps_.push_back(e);
      if (n_ > 0) e[var] = 0;
      return;
    }
    for (unsigned k = remaining + 1; k-- > 0;) {
      e[var] = k;
      fill(e, var + 1, remaining - k);
    }
    e[var] = 0;
  }

  std::size_t n_;
  std::size_t max_degree_;
  std::vector<std::vector<unsigned>> exps_;
  std::map<std::vector<unsigned>, std::size_t> index_;
  std::vector<long> times_var_;
};

struct ReducedPropagator {
  std::shared_ptr<const MonomialBasis> basis;
  Matrix R;
  std::size_t n = 1;
  std::size_t N_T = 0;
};

namespace reduced_detail {

struct PolyTerm {
  std::vector<std::size_t> vars;  // x-monomial as a variable list
  std::size_t param = 0;          // 0 = constant, p = linear in w_{p-1}
  double coeff = 0.0;
};

/// Terms of component r of the one-step map, grouped by parameter.
inline std::vector<PolyTerm> component_terms(const CoefficientModel& model, std::size_t r, std::size_t max_degree) {
  std::map<std::pair<std::vector<unsigned>, std::size_t>, double> acc;
  for (std::size_t deg = 0; deg <= model.degree && deg <= max_degree; ++deg) {
    for (std::size_t p = 0; p <= model.num_params(); ++p) {
      const Matrix& C = model.term(deg, p);
      for (Eigen::Index col = 0; col < C.cols(); ++col) {
        const double c = C(static_cast<Eigen::Index>(r), col);
        if (c == 0.0) continue;
        std::vector<unsigned> e(model.n, 0);
        std::size_t pos = static_cast<std::size_t>(col);
        for (std::size_t m = 0; m < deg; ++m) {
          ++e[pos % model.n];
          pos /= model.n;
        }
        acc[{e, p}] += c;
      }
    }
  }
  std::vector<PolyTerm> out;
  for (const auto& [key, c] : acc) {
    if (c == 0.0) continue;
    PolyTerm t;
    for (std::size_t v = 0; v < key.first.size(); ++v) t.vars.insert(t.vars.end(), key.first[v], v);
    t.param = key.second;
    t.coeff = c;
    out.push_back(std::move(t));
  }
  return out;
}

struct RowBuilder {
  const MonomialBasis& xb;
  const MonomialBasis& wb;
  const std::vector<std::vector<PolyTerm>>& f;
  const std::vector<double>& wmoments;
  Matrix& R;

  // poly is a dense (wb.size() x xb.size()) array, row-major by w-key
  void visit(const std::vector<double>& poly, std::size_t row, std::size_t first_var, std::size_t degree) const {
    const std::size_t S = xb.size();
    const std::size_t W = wb.size();
    for (std::size_t g = 0; g < S; ++g) {
      double s = 0.0;
      for (std::size_t e = 0; e < W; ++e) s += poly[e * S + g] * wmoments[e];
      R(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g)) = s;
    }
    if (degree == xb.max_degree()) return;
    for (std::size_t v = first_var; v < xb.n(); ++v) descend(poly, row, v, degree);
  }

  void descend(const std::vector<double>& poly, std::size_t row, std::size_t v, std::size_t degree) const {
    const std::size_t S = xb.size();
    const std::size_t W = wb.size();
    std::vector<double> next(W * S, 0.0);
    for (std::size_t e = 0; e < W; ++e) {
      for (std::size_t g = 0; g < S; ++g) {
        const double a = poly[e * S + g];
        if (a == 0.0) continue;
        for (const PolyTerm& t : f[v]) {
          long gi = static_cast<long>(g);
          for (std::size_t var : t.vars) {
            gi = xb.times_var(static_cast<std::size_t>(gi), var);
            if (gi < 0) break;
          }
          if (gi < 0) continue;
          const long ei = t.param == 0 ? static_cast<long>(e) : wb.times_var(e, t.param - 1);
          if (ei < 0) continue;
          next[static_cast<std::size_t>(ei) * S + static_cast<std::size_t>(gi)] += a * t.coeff;
        }
      }
    }
    const long child = xb.times_var(row, v);
    visit(next, static_cast<std::size_t>(child), v, degree + 1);
  }
};

}  // namespace reduced_detail

inline std::size_t reduced_dimension(std::size_t n, std::size_t N_T) {
  // C(n+N_T, n), saturating
  std::size_t c = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t num = saturating_mul(c, N_T + k);
    if (num == kSaturated) return kSaturated;
    c = num / k;
  }
  return c;
}

inline ReducedPropagator make_reduced_propagator(const CoefficientModel& model, std::size_t N_T, std::size_t threads = 1) {
  const std::size_t S = reduced_dimension(model.n, N_T);
  check_element_count(S, S, "reduced propagator R(" + std::to_string(N_T) + ")");
  auto xb = std::make_shared<MonomialBasis>(model.n, N_T);
  const MonomialBasis wb(model.num_params(), N_T);
  check_element_count(wb.size(), S, "reduced propagator work array");

  std::vector<double> wmoments(wb.size());
  for (std::size_t e = 0; e < wb.size(); ++e) wmoments[e] = parameter_moment(model, wb.exponents(e));

  std::vector<std::vector<reduced_detail::PolyTerm>> f(model.n);
  for (std::size_t r = 0; r < model.n; ++r) f[r] = reduced_detail::component_terms(model, r, N_T);

  ReducedPropagator p;
  p.basis = xb;
  p.n = model.n;
  p.N_T = N_T;
  p.R = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
  p.R(0, 0) = 1.0;

  const reduced_detail::RowBuilder builder{*xb, wb, f, wmoments, p.R};
  if (N_T > 0) {
    std::vector<double> one(wb.size() * S, 0.0);
    one[0] = 1.0;
    parallel_for(model.n, threads, [&](std::size_t v) { builder.descend(one, 0, v, 0); });
  }
  return p;
}

struct ReducedState {
  std::size_t t = 0;
  Vector m;
};

inline ReducedState reduced_init_state(const ReducedPropagator& p, const InitialMomentEngine& engine) {
  const MonomialBasis& b = *p.basis;
  ReducedState s{0, Vector(static_cast<Eigen::Index>(b.size()))};
  for (std::size_t i = 0; i < b.size(); ++i) s.m[static_cast<Eigen::Index>(i)] = engine.monomial_moment(b.exponents(i));
  s.m[0] = 1.0;
  return s;
}

inline ReducedState reduced_step(const ReducedPropagator& p, const ReducedState& s) {
  if (s.m.size() != p.R.cols()) throw PreconditionError("reduced state does not match propagator dimensions");
  ReducedState next{s.t + 1, p.R * s.m};
  next.m[0] = 1.0;
  if (!next.m.allFinite()) {
    throw DivergenceError("truncated system diverged at step " + std::to_string(next.t), s.t);
  }
  return next;
}

/// Expands the moments of order j into the n^j Kronecker layout.
inline Vector reduced_kron_block(const ReducedPropagator& p, const ReducedState& s, std::size_t j) {
  if (j > p.N_T) {
    throw PreconditionError("moment order " + std::to_string(j) + " exceeds truncation limit " +
                            std::to_string(p.N_T));
  }
  const std::size_t len = saturating_pow(p.n, j);
  check_element_count(len, 1, "moment block");
  Vector out(static_cast<Eigen::Index>(len));
  for (std::size_t pos = 0; pos < len; ++pos) {
    out[static_cast<Eigen::Index>(pos)] = s.m[p.basis->kron_index(j, pos)];
  }
  return out;
}

}  // namespace momentprop
