// Prints H and its inverse G for x' = -x + f_eps(x) next to their numerical
// counterparts, as gnuplot-ready columns:
//
//   x  H_closed  H_numeric  G_closed(x)  G_numeric(x)
//
// usage: fig1_curves [eps] [points]

#include "conjlab/conjugacy.hpp"
#include "conjlab/oracles.hpp"
#include "conjlab/scenarios.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
  const double eps = argc > 1 ? std::atof(argv[1]) : 0.1;
  const int points = argc > 2 ? std::atoi(argv[2]) : 61;
  if (points < 2) return 2;

  const conjlab::oracles::Example11Params params(eps);
  const auto H = conjlab::oracles::example11_H(params);
  const auto G = conjlab::oracles::example11_G(params);
  const conjlab::ConjugacyEvaluator ev(conjlab::example11_system(eps));

  std::printf("# eps=%g window=%.4f tail_bound=%.3g\n", eps, ev.window(), ev.tail_bound());
  for (int i = 0; i < points; ++i) {
    const double x = -3.0 + 6.0 * i / (points - 1);
    const auto v = conjlab::scalar_vector(x);
    std::printf("%+.6f %+.9f %+.9f %+.9f %+.9f\n", x, H(x), conjlab::evaluate_H(ev, 0.0, v)(0), G(x),
                conjlab::evaluate_G(ev, 0.0, v)(0));
  }
}
