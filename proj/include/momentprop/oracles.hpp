/**
 * @file oracles.hpp
 * @brief Ground truth by direct simulation (Monte Carlo) and by exhaustive path enumeration.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "momentprop/errors.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/parallel.hpp"
#include "momentprop/rng.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

inline constexpr std::size_t kMaxEnumerationPaths = 1'000'000;

/// Initial sources draw on step 0; the parameters of transition k draw on step k+1.
inline Vector sample_initial(const PolynomialSystemSpec& spec, std::uint64_t seed, std::uint64_t sample) {
  std::vector<double> src(spec.init.sources.size());
  for (std::size_t s = 0; s < src.size(); ++s) src[s] = spec.init.sources[s].sample(stream_uniform(seed, sample, 0, s));
  return spec.init.evaluate(src);
}

inline std::vector<double> sample_parameters(const PolynomialSystemSpec& spec, std::uint64_t seed, std::uint64_t sample,
                                             std::size_t transition) {
  std::vector<double> w(spec.coeffs.num_params());
  for (std::size_t p = 0; p < w.size(); ++p) {
    w[p] = spec.coeffs.params[p].sample(stream_uniform(seed, sample, transition + 1, p));
  }
  return w;
}

/// States x(0..t) of one sample path.
inline std::vector<Vector> sample_trajectory(const PolynomialSystemSpec& spec, std::size_t t, std::uint64_t seed,
                                             std::uint64_t sample = 0) {
  std::vector<Vector> xs;
  xs.reserve(t + 1);
  xs.push_back(sample_initial(spec, seed, sample));
  for (std::size_t k = 0; k < t; ++k) {
    Vector next = spec.coeffs.apply(sample_parameters(spec, seed, sample, k), xs.back());
    if (!next.allFinite()) {
      throw DivergenceError("sample " + std::to_string(sample) + " diverged at step " + std::to_string(k + 1), k);
    }
    xs.push_back(std::move(next));
  }
  return xs;
}

struct EmpiricalMoments {
  Vector mean;
  Vector standard_error;
  std::size_t samples = 0;
  std::size_t diverged = 0;
};

namespace oracle_detail {

inline constexpr std::size_t kChunk = 256;

/// Count, mean and sum of squared deviations of a group of samples.
struct RunningStats {
  double count = 0.0;
  Vector mean;
  Vector m2;

  void add(const Vector& v) {
    if (count == 0.0) {
      mean = Vector::Zero(v.size());
      m2 = Vector::Zero(v.size());
    }
    count += 1.0;
    const Vector delta = v - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(v - mean);
  }
};

inline RunningStats merge(const RunningStats& a, const RunningStats& b) {
  if (a.count == 0.0) return b;
  if (b.count == 0.0) return a;
  RunningStats out;
  out.count = a.count + b.count;
  const Vector delta = b.mean - a.mean;
  out.mean = a.mean + delta * (b.count / out.count);
  out.m2 = a.m2 + b.m2 + delta.cwiseAbs2() * (a.count * b.count / out.count);
  return out;
}

/// Pairwise merge of parts[lo, hi) with a tree shape fixed by the range alone.
inline RunningStats merge_range(const std::vector<RunningStats>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(merge_range(parts, lo, mid), merge_range(parts, mid, hi));
}

inline EmpiricalMoments finish(const RunningStats& st, std::size_t total) {
  EmpiricalMoments out;
  out.samples = static_cast<std::size_t>(st.count);
  out.diverged = total - out.samples;
  if (out.samples < 2) throw NumericError("fewer than two finite samples", st.count);
  out.mean = st.mean;
  out.standard_error = (st.m2 / (st.count - 1.0) / st.count).cwiseSqrt();
  return out;
}

}  // namespace oracle_detail

/// Sample statistics of x^[j](t) for every t = 0..t_max on the same sample paths.
inline std::vector<EmpiricalMoments> empirical_moment_trajectory(const PolynomialSystemSpec& spec, std::size_t j,
                                                                 std::size_t t_max, std::size_t num_samples,
                                                                 std::uint64_t seed, std::size_t threads = 1) {
  using oracle_detail::RunningStats;
  if (num_samples < 2) throw PreconditionError("empirical moments need at least two samples");
  const std::size_t len = saturating_pow(spec.coeffs.n, j);
  const std::size_t chunks = (num_samples + oracle_detail::kChunk - 1) / oracle_detail::kChunk;
  check_element_count(saturating_mul(len, chunks), 2 * (t_max + 1), "Monte Carlo accumulators");
  std::vector<std::vector<RunningStats>> parts(t_max + 1, std::vector<RunningStats>(chunks));
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(num_samples, (c + 1) * oracle_detail::kChunk);
    for (std::size_t s = c * oracle_detail::kChunk; s < end; ++s) {
      Vector x = sample_initial(spec, seed, s);
      for (std::size_t k = 0;; ++k) {
        if (!x.allFinite()) break;
        parts[k][c].add(kron_power(x, j));
        if (k == t_max) break;
        x = spec.coeffs.apply(sample_parameters(spec, seed, s, k), x);
      }
    }
  });
  std::vector<EmpiricalMoments> out;
  out.reserve(t_max + 1);
  for (std::size_t k = 0; k <= t_max; ++k) {
    out.push_back(oracle_detail::finish(oracle_detail::merge_range(parts[k], 0, chunks), num_samples));
  }
  return out;
}

inline EmpiricalMoments empirical_moments(const PolynomialSystemSpec& spec, std::size_t j, std::size_t t,
                                          std::size_t num_samples, std::uint64_t seed, std::size_t threads = 1) {
  return empirical_moment_trajectory(spec, j, t, num_samples, seed, threads).back();
}

struct EmpiricalTail {
  double frequency = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  std::size_t diverged = 0;
};

/// Fraction of samples with ||x(t) - center|| >= alpha.
inline EmpiricalTail empirical_tail(const PolynomialSystemSpec& spec, const Vector& center, double alpha, std::size_t t,
                                    std::size_t num_samples, std::uint64_t seed, std::size_t threads = 1) {
  if (num_samples < 1) throw PreconditionError("empirical tail needs at least one sample");
  if (center.size() != static_cast<Eigen::Index>(spec.coeffs.n)) throw PreconditionError("center has wrong dimension");
  std::vector<char> hit(num_samples, 0);
  std::vector<char> ok(num_samples, 0);
  parallel_for(num_samples, threads, [&](std::size_t s) {
    Vector x = sample_initial(spec, seed, s);
    for (std::size_t k = 0; k < t && x.allFinite(); ++k) x = spec.coeffs.apply(sample_parameters(spec, seed, s, k), x);
    if (!x.allFinite()) return;
    ok[s] = 1;
    hit[s] = (x - center).norm() >= alpha ? 1 : 0;
  });
  EmpiricalTail out;
  std::size_t hits = 0;
  for (std::size_t s = 0; s < num_samples; ++s) {
    if (ok[s]) {
      ++out.samples;
      hits += static_cast<std::size_t>(hit[s]);
    } else {
      ++out.diverged;
    }
  }
  if (out.samples == 0) throw NumericError("every sample diverged", 0.0);
  const double m = static_cast<double>(out.samples);
  out.frequency = static_cast<double>(hits) / m;
  out.standard_error = std::sqrt(out.frequency * (1.0 - out.frequency) / m);
  return out;
}

/// Number of (initial value, parameter path) combinations for a horizon t.
inline std::size_t enumeration_path_count(const PolynomialSystemSpec& spec, std::size_t t) {
  std::size_t init = 1;
  for (const auto& s : spec.init.sources) {
    if (!s.is_finite_valued()) throw PreconditionError("exact enumeration needs finite-valued initial sources");
    init = saturating_mul(init, s.atoms().size());
  }
  std::size_t per_step = 1;
  for (const auto& p : spec.coeffs.params) {
    if (!p.is_finite_valued()) throw PreconditionError("exact enumeration needs finite-valued parameters");
    per_step = saturating_mul(per_step, p.atoms().size());
  }
  return saturating_mul(init, saturating_pow(per_step, t));
}

/// E[x^[j](t)] by summing over every path with its probability.
inline Vector exact_enumeration_moments(const PolynomialSystemSpec& spec, std::size_t j, std::size_t t) {
  const std::size_t paths = enumeration_path_count(spec, t);
  if (paths > kMaxEnumerationPaths) {
    throw SizeLimitError("exact enumeration paths", paths, kMaxEnumerationPaths);
  }
  const std::size_t len = saturating_pow(spec.coeffs.n, j);
  check_element_count(len, 1, "moment block");

  std::vector<std::vector<std::pair<double, double>>> src_atoms;
  for (const auto& s : spec.init.sources) src_atoms.push_back(s.atoms());
  std::vector<std::vector<std::pair<double, double>>> par_atoms;
  for (const auto& p : spec.coeffs.params) par_atoms.push_back(p.atoms());

  Vector acc = Vector::Zero(static_cast<Eigen::Index>(len));
  std::vector<double> w(par_atoms.size());

  std::function<void(const Vector&, double, std::size_t, std::size_t, double)> params;
  std::function<void(const Vector&, double, std::size_t)> run = [&](const Vector& x, double prob, std::size_t step) {
    if (prob == 0.0) return;
    if (step == t) {
      acc += prob * kron_power(x, j);
      return;
    }
    params(x, prob, step, 0, 1.0);
  };
  params = [&](const Vector& x, double prob, std::size_t step, std::size_t p, double wprob) {
    if (p == par_atoms.size()) {
      Vector next = spec.coeffs.apply(w, x);
      if (!next.allFinite()) throw DivergenceError("enumerated path diverged at step " + std::to_string(step + 1), step);
      run(next, prob * wprob, step + 1);
      return;
    }
    for (const auto& [v, q] : par_atoms[p]) {
      w[p] = v;
      params(x, prob, step, p + 1, wprob * q);
    }
  };

  std::vector<double> src(src_atoms.size());
  std::function<void(std::size_t, double)> sources = [&](std::size_t s, double prob) {
    if (s == src_atoms.size()) {
      run(spec.init.evaluate(src), prob, 0);
      return;
    }
    for (const auto& [v, q] : src_atoms[s]) {
      src[s] = v;
      sources(s + 1, prob * q);
    }
  };
  sources(0, 1.0);
  return acc;
}

}  // namespace momentprop
