// Certifies openness and expansivity for three model systems and shows the
// negative verdict (with witness) on the clamp map.

#include <cstdio>

#include "ifs/ifs.hpp"

static void report(const char* name, const ifs::System& sys, const ifs::ExpansionReport& constants,
                   ifs::IterationMode mode) {
  using namespace ifs;
  Rng rng(11);
  const OpennessCertificate cert = openness_check(sys, constants, 5000, rng);
  std::printf("%-18s open=%s (%s)", name, cert.verdict ? "yes" : "no",
              cert.method == EstimateMethod::Analytic ? "analytic" : "sampled");
  if (cert.witness)
    std::printf("  witness: symbol %d, x=%s y=%s", cert.witness->symbol,
                point_to_text(sys.space, cert.witness->x).c_str(),
                point_to_text(sys.space, cert.witness->y).c_str());
  ExpansivitySearchParams params;
  params.pair_count = 2000;
  Rng rng2(13);
  const ExpansivityEstimate est = expansivity_search(sys, {0.5, 0.2, 0.1}, params, rng2, mode);
  const char* verdict = est.verdict == ExpansivityVerdict::CertifiedAnalytic ? "certified"
                        : est.verdict == ExpansivityVerdict::Refuted        ? "refuted"
                                                                            : "passed sampling";
  std::printf("  expansive at e=%.2f: %s\n", est.constant, verdict);
}

int main() {
  using namespace ifs;
  const System doubling = make_system(Space::circle(), {MapDescriptor::circle_affine(2, 0.0),
                                                        MapDescriptor::circle_affine(2, 1.0 / 3.0)});
  const System shifts = make_system(Space::binary_shift(4, ShiftExtension::Periodic),
                                    {MapDescriptor::shift_map(false), MapDescriptor::shift_map(true)});
  const System clamp = make_system(Space::interval(), {MapDescriptor::interval_clamp()});

  report("doubling family", doubling, expansion_constants(doubling), IterationMode::Positive);
  report("shift family", shifts, expansion_constants(shifts), IterationMode::TwoSided);

  // The clamp map is tested under the doubling constants; its plateau
  // breaks the preimage-ball criterion.
  ExpansionReport clamp_constants;
  clamp_constants.expanding_ratio = 2.0;
  clamp_constants.small_distance_threshold = 0.25;
  clamp_constants.small_distance_factor = 2.0;
  report("interval clamp", clamp, clamp_constants, IterationMode::Positive);
  return 0;
}
