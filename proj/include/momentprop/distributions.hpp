/**
 * @file distributions.hpp
 * @brief Scalar distributions for model parameters and initial-state sources.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "momentprop/errors.hpp"
#include "momentprop/quadrature.hpp"

namespace momentprop {

struct PointMass {
  double value = 0.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct TruncatedGaussian {
  double mean = 0.0;
  double stddev = 1.0;
  double lo = -1.0;
  double hi = 1.0;
};

struct FiniteDiscrete {
  std::vector<double> values;
  std::vector<double> probabilities;
};

inline constexpr double kProbabilitySumTolerance = 1e-12;
inline constexpr double kRawMomentTolerance = 1e-12;

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }
inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

inline double std_normal_quantile(double p) {
  constexpr double tiny = std::numeric_limits<double>::min();
  p = std::clamp(p, tiny, 1.0 - std::numeric_limits<double>::epsilon() / 2);
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// E[Z^k] for Z ~ N(0,1): (k-1)!! for even k, 0 for odd.
inline double std_normal_moment(unsigned k) {
  if (k % 2 == 1) {
    return 0.0;
  }
  double r = 1.0;
  for (unsigned i = k; i > 1; i -= 2) {
    r *= static_cast<double>(i - 1);
  }
  return r;
}

inline double binomial(unsigned n, unsigned k) {
  double r = 1.0;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

// Mass of the standard normal on [a, b], computed on the side that avoids cancellation.
inline double truncated_mass(double a, double b) {
  return a > 0.0 ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a);
}

inline double truncated_gaussian_moment_uncached(const TruncatedGaussian& d, unsigned k) {
  const double a = (d.lo - d.mean) / d.stddev;
  const double b = (d.hi - d.mean) / d.stddev;
  const double mass = truncated_mass(a, b);
  auto integrand = [&](double z) { return std::pow(d.mean + d.stddev * z, k) * std_normal_pdf(z); };
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, 1e-14, &error);
  const double abs_error = error / mass;
  if (!std::isfinite(value) || abs_error > kRawMomentTolerance) {
    throw NumericError("truncated gaussian raw moment of order " + std::to_string(k) +
                           " did not converge",
                       abs_error);
  }
  return value / mass;
}

}  // namespace detail

/// One of {point, uniform, gaussian, truncated_gaussian, finite}.
class ScalarDistribution {
 public:
  using Variant = std::variant<PointMass, Uniform, Gaussian, TruncatedGaussian, FiniteDiscrete>;

  ScalarDistribution() : value_(PointMass{0.0}) {}
  explicit ScalarDistribution(Variant v) : value_(std::move(v)) { validate(); }

  static ScalarDistribution point(double value) { return ScalarDistribution(PointMass{value}); }
  static ScalarDistribution uniform(double lo, double hi) { return ScalarDistribution(Uniform{lo, hi}); }
  static ScalarDistribution gaussian(double mean, double stddev) {
    return ScalarDistribution(Gaussian{mean, stddev});
  }
  static ScalarDistribution truncated_gaussian(double mean, double stddev, double lo, double hi) {
    return ScalarDistribution(TruncatedGaussian{mean, stddev, lo, hi});
  }
  static ScalarDistribution finite(std::vector<double> values, std::vector<double> probabilities) {
    return ScalarDistribution(FiniteDiscrete{std::move(values), std::move(probabilities)});
  }

  const Variant& value() const noexcept { return value_; }

  std::string kind() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) return "point";
          if constexpr (std::is_same_v<T, Uniform>) return "uniform";
          if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
          if constexpr (std::is_same_v<T, TruncatedGaussian>) return "truncated_gaussian";
          if constexpr (std::is_same_v<T, FiniteDiscrete>) return "finite";
        },
        value_);
  }

  /// True for point and finite distributions (enumerable support).
  bool is_finite_valued() const {
    return std::holds_alternative<PointMass>(value_) || std::holds_alternative<FiniteDiscrete>(value_);
  }

  /// Support atoms with their probabilities; only for finite-valued distributions.
  std::vector<std::pair<double, double>> atoms() const {
    if (const auto* p = std::get_if<PointMass>(&value_)) {
      return {{p->value, 1.0}};
    }
    if (const auto* f = std::get_if<FiniteDiscrete>(&value_)) {
      std::vector<std::pair<double, double>> out;
      for (std::size_t i = 0; i < f->values.size(); ++i) {
        out.emplace_back(f->values[i], f->probabilities[i]);
      }
      return out;
    }
    throw PreconditionError("distribution '" + kind() + "' is not finite-valued");
  }

  /// Closed support interval (infinite for the gaussian).
  std::pair<double, double> support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& d) -> std::pair<double, double> {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) return {d.value, d.value};
          if constexpr (std::is_same_v<T, Uniform>) return {d.lo, d.hi};
          if constexpr (std::is_same_v<T, Gaussian>) return {-inf, inf};
          if constexpr (std::is_same_v<T, TruncatedGaussian>) return {d.lo, d.hi};
          if constexpr (std::is_same_v<T, FiniteDiscrete>) {
            const auto [lo, hi] = std::minmax_element(d.values.begin(), d.values.end());
            return {*lo, *hi};
          }
        },
        value_);
  }

  /// Inverse-CDF draw from a uniform variate u in (0,1).
  double sample(double u) const {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            return d.value;
          } else if constexpr (std::is_same_v<T, Uniform>) {
            return d.lo + u * (d.hi - d.lo);
          } else if constexpr (std::is_same_v<T, Gaussian>) {
            return d.mean + d.stddev * detail::std_normal_quantile(u);
          } else if constexpr (std::is_same_v<T, TruncatedGaussian>) {
            const double a = (d.lo - d.mean) / d.stddev;
            const double b = (d.hi - d.mean) / d.stddev;
            double z = 0.0;
            if (a > 0.0) {
              const double p = detail::std_normal_sf(a) - u * detail::truncated_mass(a, b);
              z = -detail::std_normal_quantile(p);
            } else {
              const double p = detail::std_normal_cdf(a) + u * detail::truncated_mass(a, b);
              z = detail::std_normal_quantile(p);
            }
            return d.mean + d.stddev * std::clamp(z, a, b);
          } else {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < d.values.size(); ++i) {
              acc += d.probabilities[i];
              if (u < acc) {
                return d.values[i];
              }
            }
            return d.values.back();
          }
        },
        value_);
  }

  friend bool operator==(const ScalarDistribution& a, const ScalarDistribution& b) {
    if (a.value_.index() != b.value_.index()) {
      return false;
    }
    return std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.value_);
          if constexpr (std::is_same_v<T, PointMass>) return x.value == y.value;
          if constexpr (std::is_same_v<T, Uniform>) return x.lo == y.lo && x.hi == y.hi;
          if constexpr (std::is_same_v<T, Gaussian>) return x.mean == y.mean && x.stddev == y.stddev;
          if constexpr (std::is_same_v<T, TruncatedGaussian>) {
            return x.mean == y.mean && x.stddev == y.stddev && x.lo == y.lo && x.hi == y.hi;
          }
          if constexpr (std::is_same_v<T, FiniteDiscrete>) {
            return x.values == y.values && x.probabilities == y.probabilities;
          }
        },
        a.value_);
  }

 private:
  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            if (!finite(d.value)) throw ValidationError("point: value must be finite");
          } else if constexpr (std::is_same_v<T, Uniform>) {
            if (!finite(d.lo) || !finite(d.hi) || !(d.lo < d.hi)) {
              throw ValidationError("uniform: requires finite lo < hi");
            }
          } else if constexpr (std::is_same_v<T, Gaussian>) {
            if (!finite(d.mean) || !finite(d.stddev) || !(d.stddev > 0.0)) {
              throw ValidationError("gaussian: requires finite mean and stddev > 0");
            }
          } else if constexpr (std::is_same_v<T, TruncatedGaussian>) {
            if (!finite(d.mean) || !finite(d.stddev) || !(d.stddev > 0.0)) {
              throw ValidationError("truncated_gaussian: requires finite mean and stddev > 0");
            }
            if (!finite(d.lo) || !finite(d.hi) || !(d.lo < d.hi)) {
              throw ValidationError("truncated_gaussian: requires finite lo < hi");
            }
            if (!(detail::truncated_mass((d.lo - d.mean) / d.stddev, (d.hi - d.mean) / d.stddev) > 0.0)) {
              throw ValidationError("truncated_gaussian: truncation interval carries no mass");
            }
          } else {
            if (d.values.empty() || d.values.size() != d.probabilities.size()) {
              throw ValidationError("finite: values and probabilities must be non-empty and equally long");
            }
            double sum = 0.0;
            for (std::size_t i = 0; i < d.values.size(); ++i) {
              if (!finite(d.values[i]) || !finite(d.probabilities[i]) || d.probabilities[i] < 0.0) {
                throw ValidationError("finite: values must be finite and probabilities non-negative");
              }
              sum += d.probabilities[i];
            }
            if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
              throw ValidationError("finite: probabilities sum to " + std::to_string(sum) + ", not 1");
            }
          }
        },
        value_);
  }

  Variant value_;
};

/// E[w^k]. Closed forms except for the truncated gaussian (adaptive Gauss-Kronrod, memoized).
inline double raw_moment(const ScalarDistribution& dist, unsigned k) {
  if (k == 0) {
    return 1.0;
  }
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return std::pow(d.value, k);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return (std::pow(d.hi, k + 1) - std::pow(d.lo, k + 1)) / (static_cast<double>(k + 1) * (d.hi - d.lo));
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          double sum = 0.0;
          for (unsigned i = 0; i <= k; i += 2) {
            sum += detail::binomial(k, i) * std::pow(d.mean, k - i) * std::pow(d.stddev, i) *
                   detail::std_normal_moment(i);
          }
          return sum;
        } else if constexpr (std::is_same_v<T, TruncatedGaussian>) {
          using Key = std::tuple<double, double, double, double, unsigned>;
          static std::map<Key, double> cache;
          static std::mutex mu;
          const Key key{d.mean, d.stddev, d.lo, d.hi, k};
          {
            std::lock_guard<std::mutex> lock(mu);
            if (auto it = cache.find(key); it != cache.end()) {
              return it->second;
            }
          }
          const double value = detail::truncated_gaussian_moment_uncached(d, k);
          std::lock_guard<std::mutex> lock(mu);
          cache.emplace(key, value);
          return value;
        } else {
          double sum = 0.0;
          for (std::size_t i = 0; i < d.values.size(); ++i) {
            sum += d.probabilities[i] * std::pow(d.values[i], k);
          }
          return sum;
        }
      },
      dist.value());
}

inline constexpr double kQuadratureAgreement = 1e-10;
inline constexpr std::size_t kMaxQuadratureNodes = 1024;

/**
 * E[f(w)] for a smooth f. Finite-valued distributions are summed exactly;
 * continuous ones use a Gauss rule matched to the density, starting at
 * degree/2 + 8 nodes and doubling until two successive rules agree to 1e-10.
 */
inline double expect(const ScalarDistribution& dist, const std::function<double(double)>& f,
                     unsigned poly_degree) {
  if (dist.is_finite_valued()) {
    double sum = 0.0;
    for (const auto& [v, p] : dist.atoms()) {
      sum += p * f(v);
    }
    return sum;
  }
  auto apply = [&](std::size_t m) -> double {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            const auto& rule = quadrature::gauss_hermite(m);
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
              s += rule.weights[i] * f(d.mean + d.stddev * rule.nodes[i]);
            }
            return s;
          } else if constexpr (std::is_same_v<T, Uniform> || std::is_same_v<T, TruncatedGaussian>) {
            const auto& rule = quadrature::gauss_legendre(m);
            const double half = 0.5 * (d.hi - d.lo);
            const double mid = 0.5 * (d.hi + d.lo);
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
              const double x = mid + half * rule.nodes[i];
              double density = 1.0 / (d.hi - d.lo);
              if constexpr (std::is_same_v<T, TruncatedGaussian>) {
                const double a = (d.lo - d.mean) / d.stddev;
                const double b = (d.hi - d.mean) / d.stddev;
                density = detail::std_normal_pdf((x - d.mean) / d.stddev) /
                          (d.stddev * detail::truncated_mass(a, b));
              }
              s += rule.weights[i] * half * density * f(x);
            }
            return s;
          } else {
            return 0.0;  // finite-valued kinds handled above
          }
        },
        dist.value());
  };
  std::size_t m = poly_degree / 2 + 8;
  double previous = apply(m);
  double diff = std::numeric_limits<double>::infinity();
  while (2 * m <= kMaxQuadratureNodes) {
    m *= 2;
    const double current = apply(m);
    diff = std::abs(current - previous);
    if (diff <= kQuadratureAgreement * std::max(1.0, std::abs(current))) {
      return current;
    }
    previous = current;
  }
  throw NumericError("quadrature did not converge under node doubling", diff);
}

}  // namespace momentprop
