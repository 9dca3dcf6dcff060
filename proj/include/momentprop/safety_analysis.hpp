/**
 * @file safety_analysis.hpp
 * @brief Assembles tail-bound inputs (approximate moments plus their error bounds) at a given step.
 */
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "momentprop/engine.hpp"
#include "momentprop/error_bounds.hpp"
#include "momentprop/tail_probability.hpp"

namespace momentprop {

struct TailOptions {
  std::size_t j_per_step = 6;  // |J| = j_per_step * t, capped at the number of orders
  JStrategy strategy = JStrategy::by_row_norm;
};

/// Refined bounds for the listed rows of the order-j0 error, each with its own J.
inline std::vector<double> refined_row_bounds(const ErrorCoefficients& ec, const InitialMomentTable& tab,
                                              const std::vector<std::size_t>& rows, std::size_t j_size,
                                              JStrategy strategy) {
  const std::size_t k = std::min(j_size, ec.max_order() + 1);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(refined_row_bound(ec, tab, i, choose_J(ec, tab.norms, i, k, strategy)).bound);
  return out;
}

/**
 * Moments of the state at step s.t from the engine, and error bounds from the
 * order-1 and order-2 coefficients. eps is the smaller of the global bound and the
 * Euclidean norm of the per-row refined bounds; both bound ||e||.
 */
inline TailInputs tail_inputs(const PolynomialSystemSpec& spec, const MomentEngine& engine,
                              const MomentEngine::State& s, const TailOptions& opt = {}) {
  const std::size_t n = engine.n();
  const std::size_t N_T = engine.truncation();
  TailInputs in;
  in.x1 = engine.block(s, 1);
  in.x2_diag = engine.second_diagonal(s);
  in.eps_i = Vector::Zero(static_cast<Eigen::Index>(n));
  in.eps_ii = Vector::Zero(static_cast<Eigen::Index>(n));

  const ErrorCoefficients ec1 = build_error_coefficients(spec.coeffs, 1, s.t, N_T);
  const ErrorCoefficients ec2 = build_error_coefficients(spec.coeffs, 2, s.t, N_T);
  if (ec1.exact && ec2.exact) return in;

  const InitialMomentTable tab = initial_moment_table(spec.init, std::max(ec1.max_order(), ec2.max_order()));
  const std::size_t j_size = saturating_mul(opt.j_per_step, s.t);

  std::vector<std::size_t> rows1(n);
  std::vector<std::size_t> rows2(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows1[i] = i;
    rows2[i] = i * n + i;
  }
  const auto e1 = refined_row_bounds(ec1, tab, rows1, j_size, opt.strategy);
  const auto e2 = refined_row_bounds(ec2, tab, rows2, j_size, opt.strategy);
  for (std::size_t i = 0; i < n; ++i) {
    in.eps_i[static_cast<Eigen::Index>(i)] = e1[i];
    in.eps_ii[static_cast<Eigen::Index>(i)] = e2[i];
  }
  in.eps = std::min(global_bound(ec1, tab.norms).bound, in.eps_i.norm());
  return in;
}

/// One row of a tail report at level p_max.
struct TailRow {
  std::size_t t = 0;
  double alpha = 0.0;
  double bound_raw = 0.0;
  double bound_clamped = 0.0;
  double eps = 0.0;
  double numerator = 0.0;
  std::string status = "ok";
  Vector center;
};

inline TailRow tail_row(const TailInputs& in, std::size_t t, double p_max) {
  TailRow r;
  r.t = t;
  r.center = in.x1;
  r.eps = in.eps;
  r.numerator = tail_numerator(in);
  r.alpha = safety_radius(in, p_max);
  if (!std::isfinite(r.alpha)) {
    r.status = "infeasible";
    r.bound_raw = r.bound_clamped = 1.0;
    return r;
  }
  if (r.alpha > in.eps) {
    r.bound_raw = safety_bound(in, r.alpha);
  } else {
    r.status = "degenerate";  // numerator <= 0: alpha = eps and the bound is vacuous there
    r.bound_raw = 0.0;
  }
  r.bound_clamped = clamp_probability(r.bound_raw);
  return r;
}

}  // namespace momentprop
