// Truncated moment propagation of the stochastic logistic map, printed next to a
// Monte Carlo estimate and the first-moment error bound.
//
//   logistic_moments [N_T] [steps] [samples]

#include <cstdio>
#include <cstdlib>
#include <exception>

#include "momentprop/momentprop.hpp"

namespace mp = momentprop;

int main(int argc, char** argv) {
  const std::size_t nt = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 16;
  const std::size_t steps = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;
  const std::size_t samples = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 10'000;
  try {
    const auto spec = mp::logistic_demo_model();
    const auto prop = mp::make_propagator(spec.coeffs, nt);
    const auto traj = mp::propagate(prop, mp::init_state(spec.init, nt), steps);
    const auto mc = mp::empirical_moment_trajectory(spec, 1, steps, samples, 1);

    std::printf("N_T=%zu, %zu Monte Carlo samples\n", nt, samples);
    std::printf("%3s %14s %14s %14s %12s %12s\n", "t", "E[x]", "E[x^2]", "MC mean", "MC 3*SE", "bound");
    for (std::size_t t = 0; t <= steps; ++t) {
      const double x1 = mp::extract_moment(traj[t], 1)[0];
      const double x2 = nt >= 2 ? mp::extract_moment(traj[t], 2)[0] : 0.0;
      double bound = 0.0;
      try {
        const auto ec = mp::build_error_coefficients(spec.coeffs, 1, t, nt);
        bound = mp::global_bound(ec, mp::initial_moment_table(spec.init, ec.max_order()).norms).bound;
      } catch (const mp::SizeLimitError&) {
        bound = -1.0;
      }
      std::printf("%3zu %14.9f %14.9f %14.9f %12.2e %12.2e\n", t, x1, x2, mc[t].mean[0], 3.0 * mc[t].standard_error[0],
                  bound);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
