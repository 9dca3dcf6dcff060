// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "momentprop/momentprop.hpp"

using namespace momentprop;

namespace {

constexpr std::uint64_t kSeed = 20240501;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      pass = false;
      detail << what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min()); }

// -----------------------------------------------------------------------------

/// Exactness: N_T=16 reproduces an N_T=256 run for t <= 4 on the logistic demo.
void criterion1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = logistic_demo_model();
  const auto lo = propagate(make_propagator(spec.coeffs, 16), init_state(spec.init, 16), 4);
  const auto hi = propagate(make_propagator(spec.coeffs, 256), init_state(spec.init, 256), 4);
  double worst = 0.0;
  for (std::size_t t = 0; t <= 4; ++t) {
    worst = std::max(worst, rel_diff(extract_moment(lo[t], 1)[0], extract_moment(hi[t], 1)[0]));
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-9, "max relative difference " + fmt(worst) + " > 1e-9");
  o.require(secs < 1.0, "runtime " + fmt(secs) + " s >= 1 s");
  o.detail << (o.pass ? "" : "; ") << "max rel diff " << fmt(worst) << ", " << fmt(secs) << " s";
}

/// Enumeration oracle agreement on a two-point logistic map.
void criterion2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec =
      build_logistic_model(ScalarDistribution::finite({0.4, 0.6}, {0.5, 0.5}), ScalarDistribution::point(0.5));
  double worst = 0.0;
  for (std::size_t j0 = 1; j0 <= 2; ++j0) {
    for (std::size_t t = 0; t <= 4; ++t) {
      const std::size_t nt = std::max<std::size_t>(1, j0 << t);  // N_T >= 2^t and j0 * 2^t <= N_T
      const auto traj = propagate(make_propagator(spec.coeffs, nt), init_state(spec.init, nt), t);
      const double got = extract_moment(traj[t], j0)[0];
      const double want = exact_enumeration_moments(spec, j0, t)[0];
      worst = std::max(worst, std::abs(got - want));
    }
  }
  const double ex2 = exact_enumeration_moments(spec, 1, 2)[0];
  const auto traj = propagate(make_propagator(spec.coeffs, 4), init_state(spec.init, 4), 2);
  const double pr2 = extract_moment(traj[2], 1)[0];
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-9, "max difference " + fmt(worst) + " > 1e-9");
  o.require(std::abs(ex2 - 0.054375) <= 1e-9 && std::abs(pr2 - 0.054375) <= 1e-9,
            "E[x(2)] = " + fmt(ex2) + " / " + fmt(pr2) + ", expected 0.054375");
  o.require(secs < 1.0, "runtime " + fmt(secs) + " s >= 1 s");
  o.detail << (o.pass ? "" : "; ") << "max diff " << fmt(worst) << ", E[x(2)] " << ex2 << ", " << fmt(secs) << " s";
}

/// Forward rounding-error estimate for row i of the order-j0 moment after t steps
/// and for sum_j v_j m_j: the same computations in absolute values times eps * dim * (t + 1).
double rounding_allowance(const PolynomialSystemSpec& spec, const ErrorCoefficients& ec, const InitialMomentTable& tab,
                          std::size_t nt_reference) {
  double mag = 0.0;
  for (std::size_t nt : {ec.N_T, nt_reference}) {
    const auto prop = make_propagator(spec.coeffs, nt);
    const Matrix absE = prop.E.cwiseAbs();
    Vector y = init_state(spec.init, nt).y.cwiseAbs();
    for (std::size_t s = 0; s < ec.t; ++s) y = absE * y;
    mag += y[static_cast<Eigen::Index>(prop.layout().offset(ec.j0))];
  }
  for (std::size_t j = 0; j <= ec.max_order(); ++j) mag += ec.row(j, 0).cwiseAbs().dot(tab.moments[j].cwiseAbs());
  const double dim = static_cast<double>(BlockLayout(ec.n, nt_reference).total() + ec.max_order() + 1);
  return std::numeric_limits<double>::epsilon() * dim * static_cast<double>(ec.t + 1) * mag;
}

/// Refined bounds cover the true error and are tight at full J.
void criterion3(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = logistic_demo_model();
  constexpr std::size_t t = 4, j0 = 2, nt = 16;
  const auto approx = propagate(make_propagator(spec.coeffs, nt), init_state(spec.init, nt), t);
  const auto ref = propagate(make_propagator(spec.coeffs, 256), init_state(spec.init, 256), t);
  const double e = extract_moment(ref[t], j0)[0] - extract_moment(approx[t], j0)[0];

  const auto ec = build_error_coefficients(spec.coeffs, j0, t, nt);
  const auto tab = initial_moment_table(spec.init, ec.max_order());
  const std::size_t count = ec.max_order() + 1;
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k < count; k += 2) sizes.push_back(k);
  sizes.push_back(count);
  // once J covers every nonzero row the bound equals |e| exactly, so the comparison is at rounding level
  const double rounding = rounding_allowance(spec, ec, tab, 256);

  double at_empty = 0.0;
  double at_full = 0.0;
  for (JStrategy s : {JStrategy::by_row_norm, JStrategy::by_moment_norm}) {
    for (std::size_t k : sizes) {
      const double b = refined_row_bound(ec, tab, 0, choose_J(ec, tab.norms, 0, k, s)).bound;
      o.require(b + rounding >= std::abs(e), std::string(strategy_name(s)) + " |J|=" + std::to_string(k) +
                                                 ": bound " + fmt(b) + " < |e| " + fmt(std::abs(e)));
      if (k == 0) at_empty = b;
      if (k == count) at_full = b;
    }
  }
  const double secs = seconds_since(t0);
  o.require(std::abs(at_full - std::abs(e)) <= 1e-9, "full-J bound " + fmt(at_full) + " != |e| " + fmt(std::abs(e)));
  o.require(at_full <= at_empty, "full-J bound exceeds empty-J bound");
  o.require(secs < 10.0, "runtime " + fmt(secs) + " s >= 10 s");
  o.detail << (o.pass ? "" : "; ") << "|e| " << fmt(std::abs(e)) << ", bound " << fmt(at_empty) << " -> "
           << fmt(at_full) << ", rounding allowance " << fmt(rounding) << ", " << fmt(secs) << " s";
}

/// Tail bound at p_max = 0.05 holds against Monte Carlo for t = 0..5.
void criterion4(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = logistic_demo_model();
  constexpr double p_max = 0.05;
  constexpr std::size_t samples = 10'000;
  const auto eng = MomentEngine::build(spec, 16);
  auto s = eng.initial(InitialMomentEngine(spec.init));
  const double se = std::sqrt(p_max * (1.0 - p_max) / static_cast<double>(samples));
  double worst = 0.0;
  for (std::size_t t = 0; t <= 5; ++t) {
    const TailRow row = tail_row(tail_inputs(spec, eng, s, TailOptions{6, JStrategy::by_row_norm}), t, p_max);
    const auto et = empirical_tail(spec, row.center, row.alpha, t, samples, kSeed);
    worst = std::max(worst, et.frequency);
    o.require(row.status != "infeasible", "t=" + std::to_string(t) + " infeasible");
    o.require(et.frequency <= p_max + 3.0 * se,
              "t=" + std::to_string(t) + ": frequency " + fmt(et.frequency) + " > " + fmt(p_max + 3.0 * se));
    if (t < 5) s = eng.step(s);
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + fmt(secs) + " s >= 30 s");
  o.detail << (o.pass ? "" : "; ") << "max frequency " << fmt(worst) << " vs " << fmt(p_max + 3.0 * se) << ", "
           << fmt(secs) << " s";
}

/// Vehicle first moments approach the Monte Carlo mean as N_T grows.
void criterion5(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = vehicle_demo_model();
  constexpr std::size_t horizon = 10;
  const auto mc = empirical_moment_trajectory(spec, 1, horizon, 10'000, kSeed);
  std::vector<double> final_distance;
  for (std::size_t nt : {2u, 4u, 8u}) {
    const auto eng = MomentEngine::build(spec, nt);
    auto s = eng.initial(InitialMomentEngine(spec.init));
    for (std::size_t t = 0;; ++t) {
      const double d = (eng.block(s, 1) - mc[t].mean).norm();
      if (nt == 8 && t <= 2) {
        const double lim = 5.0 * mc[t].standard_error.norm();
        o.require(d <= lim, "N_T=8 t=" + std::to_string(t) + ": distance " + fmt(d) + " > 5 SE " + fmt(lim));
      }
      if (t == horizon) {
        final_distance.push_back(d);
        break;
      }
      s = eng.step(s);
    }
  }
  const double secs = seconds_since(t0);
  o.require(final_distance[0] >= final_distance[1] && final_distance[1] >= final_distance[2],
            "distance at t=10 not non-increasing in N_T");
  o.require(secs < 120.0, "runtime " + fmt(secs) + " s >= 120 s");
  o.detail << (o.pass ? "" : "; ") << "t=10 distances N_T=2/4/8: " << fmt(final_distance[0]) << " / "
           << fmt(final_distance[1]) << " / " << fmt(final_distance[2]) << ", " << fmt(secs) << " s";
}

/// Online propagation at N_T=16 is at least ten times faster than 10^4-sample Monte Carlo.
void criterion6(Outcome& o) {
  const auto spec = logistic_demo_model();
  constexpr std::size_t steps = 8;
  const auto prop = make_propagator(spec.coeffs, 16);
  const auto s0 = init_state(spec.init, 16);

  constexpr int prop_reps = 100;
  double sink = 0.0;
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < prop_reps; ++r) {
    auto s = s0;
    for (std::size_t k = 0; k < steps; ++k) s = step(prop, s);
    sink += s.y[1];
  }
  const double prop_us = seconds_since(t0) * 1e6 / prop_reps;

  constexpr int mc_reps = 3;
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < mc_reps; ++r) sink += empirical_moments(spec, 1, steps, 10'000, kSeed + r).mean[0];
  const double mc_us = seconds_since(t0) * 1e6 / mc_reps;

  const double ratio = mc_us / prop_us;
  o.require(std::isfinite(sink), "non-finite result");
  o.require(ratio >= 10.0, "speedup " + fmt(ratio) + " < 10");
  o.detail << (o.pass ? "" : "; ") << "propagation " << fmt(prop_us) << " us, Monte Carlo " << fmt(mc_us)
           << " us, speedup " << fmt(ratio);
}

// -----------------------------------------------------------------------------

bool mixed_product_identity() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = 1 + trial % 3, q = 1 + trial % 4, r = 2, s = 1 + trial % 2, v = 1 + trial % 3;
    const Matrix A = random(p, q), B = random(r, s), C = random(q, 2), D = random(s, v);
    const Matrix lhs = kron_product(A, B) * kron_product(C, D);
    const Matrix rhs = kron_product(A * C, B * D);
    if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) return false;
  }
  return true;
}

bool index_sets_match_brute_force() {
  for (std::size_t d = 0; d <= 3; ++d) {
    for (std::size_t j = 0; j <= 4; ++j) {
      std::size_t tuples = 1;
      for (std::size_t m = 0; m < j; ++m) tuples *= d + 1;
      for (std::size_t k = 0; k <= j * d + 1; ++k) {
        std::set<std::vector<std::size_t>> brute;
        for (std::size_t code = 0; code < tuples; ++code) {
          std::vector<std::size_t> seq(j);
          std::size_t c = code, sum = 0;
          for (std::size_t m = 0; m < j; ++m) {
            seq[m] = c % (d + 1);
            c /= d + 1;
            sum += seq[m];
          }
          if (sum == k) brute.insert(seq);
        }
        const auto h = enumerate_H(j, k, d).sequences;
        if (std::set<std::vector<std::size_t>>(h.begin(), h.end()) != brute || h.size() != brute.size()) return false;
      }
    }
  }
  return true;
}

bool expected_blocks_match_monte_carlo() {
  auto m = CoefficientModel::zeros(2, 2, {ScalarDistribution::uniform(-0.5, 1.0), ScalarDistribution::gaussian(0.2, 0.3)});
  m.constants[0] << 0.1, -0.05;
  m.linear[0][1] << 0.02, 0.0;
  m.constants[1] << 0.9, 0.1, -0.2, 0.8;
  m.linear[1][0] << 0.1, 0.0, 0.05, -0.1;
  add_monomial(m.constants[2], 2, 0, {0, 1}, -0.3);
  add_monomial(m.linear[2][1], 2, 1, {0, 0}, 0.2);
  constexpr std::size_t draws = 100'000;
  for (auto [j, k] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 2}, {2, 3}}) {
    const Matrix exact = build_E_jk(m, j, k);
    Matrix sum = Matrix::Zero(exact.rows(), exact.cols());
    Matrix sumsq = Matrix::Zero(exact.rows(), exact.cols());
    for (std::size_t s = 0; s < draws; ++s) {
      std::vector<double> w(2);
      for (std::size_t p = 0; p < 2; ++p) w[p] = m.params[p].sample(stream_uniform(kSeed, s, 1, p));
      const Matrix a = realized_A_jk(m, w, j, k);
      sum += a;
      sumsq += a.cwiseAbs2();
    }
    const double n = static_cast<double>(draws);
    const Matrix mean = sum / n;
    const Matrix var = (sumsq / n - mean.cwiseAbs2()) * (n / (n - 1));
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      const double se = std::sqrt(std::max(0.0, var.data()[i]) / n);
      // zero-variance entries only see summation rounding
      const double rounding = n * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(exact.data()[i]));
      if (std::abs(mean.data()[i] - exact.data()[i]) > 3.0 * se + rounding) return false;
    }
  }
  return true;
}

bool constant_moment_stays_one() {
  const auto logistic = logistic_demo_model();
  for (std::size_t nt : {1u, 4u, 16u}) {
    for (const auto& s : propagate(make_propagator(logistic.coeffs, nt), init_state(logistic.init, nt), 12)) {
      if (s.y[0] != 1.0) return false;
    }
  }
  const auto vehicle = vehicle_demo_model();
  for (std::size_t nt : {2u, 4u, 8u}) {
    const auto eng = MomentEngine::build(vehicle, nt);
    auto s = eng.initial(InitialMomentEngine(vehicle.init));
    for (int t = 0; t < 10; ++t) {
      if (s.y[0] != 1.0) return false;
      s = eng.step(s);
    }
  }
  return true;
}

bool error_reconstruction_identity() {
  const auto spec =
      build_logistic_model(ScalarDistribution::finite({0.4, 0.6}, {0.5, 0.5}), ScalarDistribution::point(0.5));
  for (std::size_t nt : {2u, 3u, 5u}) {
    for (std::size_t t = 1; t <= 4; ++t) {
      for (std::size_t j0 = 1; j0 <= std::min<std::size_t>(2, nt); ++j0) {
        const auto ec = build_error_coefficients(spec.coeffs, j0, t, nt);
        const auto tab = initial_moment_table(spec.init, ec.max_order());
        const auto traj = propagate(make_propagator(spec.coeffs, nt), init_state(spec.init, nt), t);
        const double e = exact_enumeration_moments(spec, j0, t)[0] - extract_moment(traj[t], j0)[0];
        double recon = 0.0;
        for (std::size_t j = 0; j <= ec.max_order(); ++j) recon += ec.row(j, 0).dot(tab.moments[j]);
        if (std::abs(recon - e) > 1e-12) return false;
      }
    }
  }
  return true;
}

bool safety_round_trip() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    TailInputs in;
    in.x1 = Vector::NullaryExpr(n, [&] { return 2.0 * u(rng) - 1.0; });
    in.x2_diag = in.x1.cwiseAbs2() + Vector::NullaryExpr(n, [&] { return u(rng); });
    in.eps_i = Vector::NullaryExpr(n, [&] { return 0.1 * u(rng); });
    in.eps_ii = Vector::NullaryExpr(n, [&] { return 0.1 * u(rng); });
    in.eps = in.eps_i.norm();
    if (tail_numerator(in) <= 0.0) continue;
    const double p = 0.001 + 0.999 * u(rng);
    if (safety_bound(in, safety_radius(in, p)) > p * (1.0 + 1e-12)) return false;
  }
  return true;
}

bool seed_determinism() {
  const auto spec = logistic_demo_model();
  const auto a = empirical_moment_trajectory(spec, 2, 5, 3000, kSeed, 1);
  const auto b = empirical_moment_trajectory(spec, 2, 5, 3000, kSeed, 4);
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].mean != b[t].mean || a[t].standard_error != b[t].standard_error) return false;
  }
  const auto ta = empirical_tail(spec, Vector::Constant(1, 0.3), 0.1, 3, 3000, kSeed, 1);
  const auto tb = empirical_tail(spec, Vector::Constant(1, 0.3), 0.1, 3, 3000, kSeed, 3);
  return ta.frequency == tb.frequency;
}

void criterion7(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<const char*, std::function<bool()>>> checks = {
      {"mixed-product identity", mixed_product_identity},
      {"index sets vs brute force", index_sets_match_brute_force},
      {"expected blocks vs Monte Carlo (3 SE)", expected_blocks_match_monte_carlo},
      {"y[0] = 1", constant_moment_stays_one},
      {"error reconstruction", error_reconstruction_identity},
      {"safety bound/radius round trip", safety_round_trip},
      {"seed determinism", seed_determinism}};
  for (const auto& [name, fn] : checks) o.require(fn(), std::string(name) + " failed");
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt(secs) + " s >= 300 s");
  o.detail << (o.pass ? "" : "; ") << checks.size() << " property checks, " << fmt(secs) << " s";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria = {
      {"exactness N_T=16 vs N_T=256", criterion1},
      {"enumeration oracle equivalence", criterion2},
      {"error bound soundness and tightness", criterion3},
      {"tail probability validity", criterion4},
      {"vehicle fidelity", criterion5},
      {"online timing", criterion6},
      {"property suites", criterion7}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
