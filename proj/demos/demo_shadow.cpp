// Shadows a noisy orbit of the doubling family {2x, 2x + 1/3} on the
// circle and prints the tracking table next to the theoretical bound.

#include <cstdio>

#include "ifs/ifs.hpp"

int main() {
  using namespace ifs;

  const System sys = make_system(Space::circle(), {MapDescriptor::circle_affine(2, 0.0),
                                                   MapDescriptor::circle_affine(2, 1.0 / 3.0)});
  Rng rng(42);
  const SymbolWord sigma = random_word(sys, 0, 30, rng);
  const PseudoOrbit po =
      generate_pseudo_orbit(sys, circle_point(0.1), sigma, 0, 29, 1e-3, rng);

  const ExpansionReport constants = expansion_constants(sys);
  Rng cert_rng(7);
  const OpennessCertificate cert = openness_check(sys, constants, 1000, cert_rng);
  const ShadowResult res = lipschitz_shadow(sys, po, cert, constants);

  std::printf("expanding ratio %.1f, small-distance pair (%.4f, %.1f)\n",
              constants.expanding_ratio, constants.small_distance_threshold,
              constants.small_distance_factor);
  std::printf("shadow start y0 = %.12f, bound L*delta = %.6f\n\n", res.y0.value, res.bound);
  std::printf("%6s %14s %14s %12s\n", "index", "pseudo", "orbit", "deviation");
  for (long long i = po.lo(); i <= po.hi(); ++i)
    std::printf("%6lld %14.10f %14.10f %12.3e\n", i, po.at(i).value, res.orbit.at(i).value,
                res.deviations[static_cast<std::size_t>(i - po.lo())]);
  std::printf("\nsup deviation %.3e <= %.3e\n", res.sup_deviation, res.bound);
  return res.sup_deviation <= res.bound ? 0 : 1;
}
