/**
 * @file tail_probability.hpp
 * @brief Chebyshev bound on P(||x(t) - x1~(t)|| >= alpha) corrected for moment errors.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/kron.hpp"

namespace momentprop {

/// Approximate first moment, diagonal second moments and their error bounds.
struct TailInputs {
  Vector x1;
  Vector x2_diag;
  double eps = 0.0;
  Vector eps_i;
  Vector eps_ii;
};

inline void check_tail_inputs(const TailInputs& in) {
  const auto n = in.x1.size();
  if (in.x2_diag.size() != n || in.eps_i.size() != n || in.eps_ii.size() != n) {
    throw PreconditionError("tail inputs have mismatched lengths");
  }
  if (!(in.eps >= 0.0) || (n > 0 && (!(in.eps_i.minCoeff() >= 0.0) || !(in.eps_ii.minCoeff() >= 0.0)))) {
    throw PreconditionError("error bounds must be non-negative");
  }
}

/// sum_i [x2_ii + eps_ii - max(0, |x1_i| - eps_i)^2]
inline double tail_numerator(const TailInputs& in) {
  check_tail_inputs(in);
  double num = 0.0;
  for (Eigen::Index i = 0; i < in.x1.size(); ++i) {
    const double lower = std::max(0.0, std::abs(in.x1[i]) - in.eps_i[i]);
    num += in.x2_diag[i] + in.eps_ii[i] - lower * lower;
  }
  return num;
}

/// Raw (unclamped) bound; requires alpha > eps.
inline double safety_bound(const TailInputs& in, double alpha) {
  if (!(alpha > in.eps)) {
    throw PreconditionError("radius " + format_double(alpha) + " must exceed the error bound " + format_double(in.eps));
  }
  const double gap = alpha - in.eps;
  return tail_numerator(in) / (gap * gap);
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

/// Smallest alpha with safety_bound <= p_max.
inline double safety_radius(const TailInputs& in, double p_max) {
  if (!(p_max > 0.0 && p_max <= 1.0)) throw PreconditionError("p_max must lie in (0, 1]");
  const double num = std::max(0.0, tail_numerator(in));
  return in.eps + std::sqrt(num / p_max);
}

inline void write_tail_header(CsvWriter& csv, bool with_mc) {
  if (with_mc) {
    csv.header({"t", "alpha", "bound_raw", "bound_clamped", "eps", "numerator", "status", "mc_frequency", "mc_se",
                "mc_ok"});
  } else {
    csv.header({"t", "alpha", "bound_raw", "bound_clamped", "eps", "numerator", "status"});
  }
}

}  // namespace momentprop
