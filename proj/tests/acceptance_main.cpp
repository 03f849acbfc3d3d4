// Acceptance suite: every check runs at its stated tolerance and prints
// one PASS/FAIL line. The process exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ifs/ifs.hpp"

using namespace ifs;

namespace {

int g_failures = 0;

class Criterion {
public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& detail) {
    ok_ = ok_ && ok;
    if (!ok && detail_.empty()) detail_ = detail;
  }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  ~Criterion() {
    const double secs = seconds();
    if (!ok_) ++g_failures;
    std::printf("%s  criterion %d: %s [%.2f s]%s%s\n", ok_ ? "PASS" : "FAIL", number_,
                title_.c_str(), secs, detail_.empty() ? "" : " — ", detail_.c_str());
    std::fflush(stdout);
  }

private:
  int number_;
  std::string title_;
  bool ok_ = true;
  std::string detail_;
  std::chrono::steady_clock::time_point start_;
};

System doubling_family() {
  return make_system(Space::circle(), {MapDescriptor::circle_affine(2, 0.0),
                                       MapDescriptor::circle_affine(2, 1.0 / 3.0)});
}

System doubling_singleton() {
  return make_system(Space::circle(), {MapDescriptor::circle_affine(2, 0.0)});
}

System shift_family(ShiftExtension ext, int w = 6) {
  return make_system(Space::binary_shift(w, ext),
                     {MapDescriptor::shift_map(false), MapDescriptor::shift_map(true)});
}

PseudoOrbit seeded_instance(const System& sys, std::uint64_t seed, long long hi, double delta) {
  Rng rng(Rng::derive_seed(20260810, seed));
  const Point x0 = random_point(sys.space, rng);
  const SymbolWord sigma = random_word(sys, 0, static_cast<std::size_t>(hi + 1), rng);
  return generate_pseudo_orbit(sys, x0, sigma, 0, hi, delta, rng);
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_lipschitz_bound(const System& dbl, const OpennessCertificate& cert,
                                 const ExpansionReport& constants) {
  Criterion c(1, "Lipschitz bound: 1000 seeded pseudo-orbits, sup deviation <= 4 delta + 1e-9");
  const double delta = 1e-3;
  double worst = 0.0;
  for (std::uint64_t run = 0; run < 1000; ++run) {
    const PseudoOrbit po = seeded_instance(dbl, run, 199, delta);
    const ShadowResult res = lipschitz_shadow(dbl, po, cert, constants);
    worst = std::max(worst, res.sup_deviation);
    if (res.sup_deviation > 4.0 * delta + 1e-9) {
      c.check(false, fmt("run %.0f exceeded the bound", static_cast<double>(run)));
      return;
    }
  }
  c.check(true, fmt("worst sup deviation %.3e", worst));
  c.check(c.seconds() < 30.0, "runtime exceeded 30 s");
}

void criterion_2_oracle_agreement(const System& dbl, const OpennessCertificate& cert,
                                  const ExpansionReport& constants) {
  Criterion c(2, "oracle agreement: 50 truncated instances, single cluster within 1e-5 of y0");
  const GridSample g = grid(dbl.space, 100000);
  double worst_gap = 0.0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const PseudoOrbit full = seeded_instance(dbl, run, 199, 1e-3);
    const PseudoOrbit po = sub_pseudo_orbit(full, 0, 19, full.delta);
    const ShadowResult res = lipschitz_shadow(dbl, po, cert, constants);
    const auto hits = brute_force_shadow(dbl, po, 4e-3, g);
    const auto clusters = cluster_hits(dbl.space, hits, std::max(4.0 * g.resolution, kTolerance));
    double best = 1.0;
    for (const auto& h : hits) best = std::min(best, distance(dbl.space, h.y0, res.y0));
    worst_gap = std::max(worst_gap, best);
    c.check(!hits.empty(), fmt("run %.0f: oracle found no hits", static_cast<double>(run)));
    c.check(clusters.size() == 1, fmt("run %.0f: several clusters", static_cast<double>(run)));
    c.check(best <= 2.0 * g.resolution, fmt("run %.0f: y0 outside the cluster", static_cast<double>(run)));
  }
  c.check(true, fmt("worst hit gap %.2e (allowance 1e-5)", worst_gap));
}

void criterion_3_hand_instance() {
  Criterion c(3, "hand-verified instance: y0 = 0.1075, deviations (0.0075, 0.005, 0) within 1e-12");
  const System sys = doubling_singleton();
  const ExpansionReport constants = expansion_constants(sys);
  Rng rng(1);
  const OpennessCertificate cert = openness_check(sys, constants, 100, rng);
  PseudoOrbit po;
  po.base = 0;
  po.sigma = SymbolWord{0, {0, 0}, WordExtension::RepeatLast};
  po.delta = 0.01;
  po.points = {circle_point(0.1), circle_point(0.21), circle_point(0.43)};
  const ShadowResult res = lipschitz_shadow(sys, po, cert, constants);
  c.check(std::fabs(res.y0.value - 0.1075) <= 1e-12, "y0 off");
  c.check(res.deviations.size() == 3, "deviation count");
  c.check(std::fabs(res.deviations[0] - 0.0075) <= 1e-12, "deviation 0 off");
  c.check(std::fabs(res.deviations[1] - 0.005) <= 1e-12, "deviation 1 off");
  c.check(std::fabs(res.deviations[2]) <= 1e-12, "deviation 2 off");
  c.check(std::fabs(res.bound - 0.04) <= 1e-12, "bound off");
}

void criterion_4_openness() {
  Criterion c(4, "openness: doubling and shift certified open, clamp refused with witness");
  const System dbl = doubling_family();
  Rng r1(11);
  const OpennessCertificate a = openness_check(dbl, expansion_constants(dbl), 10000, r1);
  c.check(a.verdict && a.method == EstimateMethod::Analytic, "doubling family not certified");

  const System shf = shift_family(ShiftExtension::Periodic, 4);  // exhaustively confirmed
  Rng r2(12);
  const OpennessCertificate b = openness_check(shf, expansion_constants(shf), 10000, r2);
  c.check(b.verdict, "shift system not certified");

  const System clamp = make_system(Space::interval(), {MapDescriptor::interval_clamp()});
  ExpansionReport constants;
  constants.expanding_ratio = 2.0;
  constants.small_distance_threshold = 0.25;
  constants.small_distance_factor = 2.0;
  Rng r3(13);
  const OpennessCertificate d = openness_check(clamp, constants, 10000, r3);
  c.check(!d.verdict, "clamp unexpectedly certified");
  c.check(d.witness.has_value(), "clamp verdict lacks a witness");
  if (d.witness) {
    const double gap =
        preimage_set_distance(clamp.space, preimages(clamp, d.witness->symbol, d.witness->y), d.witness->x);
    c.check(gap > d.preimage_radius, "clamp witness does not violate the criterion");
  }
  c.check(c.seconds() < 5.0, "runtime exceeded 5 s");
}

void criterion_5_expansivity_separation(const System& dbl) {
  Criterion c(5, "expansivity e=0.2 certified (1e4 pairs, horizon 40); separation N(0.125, 0.01) = 4");
  ExpansivitySearchParams params;
  params.pair_count = 10000;
  params.horizon = 40;
  Rng r1(21);
  // sampling runs alongside the analytic certificate; a refutation would throw
  const ExpansivityEstimate est = expansivity_search(dbl, {0.2}, params, r1, IterationMode::Positive);
  c.check(est.verdict == ExpansivityVerdict::CertifiedAnalytic, "doubling family not certified at 0.2");
  c.check(!est.witness.has_value(), "unexpected refutation witness");

  Rng r2(22);
  const SeparationHorizon analytic = separation_horizon(dbl, 0.125, 0.01, r2);
  c.check(analytic.steps == 4 && analytic.method == EstimateMethod::Analytic,
          fmt("analytic N = %.0f", static_cast<double>(analytic.steps)));
  Rng r3(23);
  SeparationParams forced;
  forced.force_sampled = true;
  const SeparationHorizon sampled = separation_horizon(dbl, 0.125, 0.01, r3, forced);
  c.check(sampled.steps == 4, fmt("sampled N = %.0f", static_cast<double>(sampled.steps)));
}

void criterion_6_limit_shadowing(const System& dbl, const OpennessCertificate& cert,
                                 const ExpansionReport& constants) {
  Criterion c(6, "limit shadowing: geometric profile on [0, 60], envelope < 1e-6 past index 40");
  Rng rng(31);
  const auto profile = [](long long i) { return 0.01 * std::pow(0.5, static_cast<double>(i)); };
  const SymbolWord sigma = random_word(dbl, 0, 61, rng);
  const PseudoOrbit po =
      generate_decaying_pseudo_orbit(dbl, random_point(dbl.space, rng), sigma, 0, 60, profile, rng);
  c.check(verify_error_profile(dbl, po, profile), "profile violated by construction");
  const LimitShadowReport rep = limit_shadow_experiment(dbl, po, profile, cert, constants, 10);
  c.check(rep.applicable, "profile not recognized as decaying");
  c.check(rep.ok, "a level failed its (L+1) bound");
  for (const auto& lv : rep.levels)
    c.check(lv.tail_sup <= lv.tail_bound + 1e-9,
            fmt("tail at level %.0f exceeded", static_cast<double>(lv.start_index)));
  double tail40 = 0.0;
  for (std::size_t k = 40; k < rep.deviations.size(); ++k)
    tail40 = std::max(tail40, rep.deviations[k]);
  c.check(tail40 < 1e-6, fmt("envelope %.2e past index 40", tail40));
  c.check(true, fmt("envelope past 40: %.2e", tail40));
}

void criterion_7_continuity(const System& dbl, const OpennessCertificate& cert,
                            const ExpansionReport& constants) {
  Criterion c(7, "continuous shadowing: 200 close ensemble pairs, displacement < 0.01, no aborts");
  ExpansivityEstimate est;
  est.constant = 0.2;
  est.verdict = ExpansivityVerdict::CertifiedAnalytic;
  const double delta = 1e-3;
  Rng r_sep(41);
  const SeparationHorizon sep = separation_horizon(dbl, est.constant, 0.01, r_sep);
  const double beta = est.constant / (3.0 * std::ldexp(1.0, static_cast<int>(sep.steps) + 1));
  const long long couple = continuity_couple_length(diameter(dbl.space), beta);

  PseudoOrbitEnsemble ens;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const PseudoOrbit base = seeded_instance(dbl, 5000 + k, 200, delta);
    Rng twin_rng(Rng::derive_seed(6000, k));
    ens.members.push_back(base);
    ens.members.push_back(diverging_twin(dbl, base, couple, twin_rng));
  }
  UniquenessProbe probe;
  probe.stride = 50;
  probe.grid_n = 10000;
  Rng rng(42);
  try {
    const ContinuityReport rep =
        continuity_experiment(dbl, ens, 0.01, 0.01, est, cert, constants, rng, probe);
    c.check(rep.pairs_tested >= 200, fmt("only %.0f qualifying pairs", static_cast<double>(rep.pairs_tested)));
    c.check(rep.max_displacement < 0.01, fmt("displacement %.3e", rep.max_displacement));
    c.check(rep.uniqueness_probes > 0, "no uniqueness probes ran");
    c.check(std::ldexp(rep.proximity_bound, static_cast<int>(rep.horizon)) < est.constant / 3.0,
            "beta does not satisfy 2^N beta < e/3");
    c.check(true, fmt("displacement %.2e over %.0f pairs", rep.max_displacement,
                      static_cast<double>(rep.pairs_tested)));
  } catch (const Error& e) {
    c.check(false, std::string("aborted: ") + e.what());
  }
}

// Exact suite on W = 6 windows. Every identity below is checked with ==.
// Pairwise facts are grounded exhaustively: d(x,y) equals the pattern value
// D[x xor y] for every pair, and both maps act on patterns independently of
// the base point (the complement cancels in the xor), so pattern loops cover
// all pairs exactly.
void criterion_8_exact_suite() {
  Criterion c(8, "exact BinaryShift suite (W=6): axioms, K=2, e=0.5, eta=1/2, inverse round-trip");
  const int w = 6;
  const std::uint64_t count = 1 << (2 * w + 1);
  const Space zero_space = Space::binary_shift(w, ShiftExtension::ConstantZero);
  const Space peri_space = Space::binary_shift(w, ShiftExtension::Periodic);
  const System zero_sys = make_system(zero_space, {MapDescriptor::shift_map(false),
                                                   MapDescriptor::shift_map(true)});
  const System peri_sys = make_system(peri_space, {MapDescriptor::shift_map(false),
                                                   MapDescriptor::shift_map(true)});

  // pattern distances D[u] = d(u, 0) and per-point map tables
  std::vector<double> pattern(count);
  const Point zero_pt = shift_point(zero_space, 0);
  for (std::uint64_t u = 0; u < count; ++u)
    pattern[u] = distance(zero_space, shift_point(zero_space, u), zero_pt);

  const auto table_of = [&](const Space& s, int sym, bool inverse) {
    const System& sys = s.extension == ShiftExtension::Periodic ? peri_sys : zero_sys;
    std::vector<std::uint64_t> t(count);
    for (std::uint64_t u = 0; u < count; ++u) {
      const Point p = shift_point(s, u);
      t[u] = inverse ? inverse_apply(s, sys.maps[static_cast<std::size_t>(sym)], p).bits
                     : apply(sys, sym, p).bits;
    }
    return t;
  };
  const auto zf0 = table_of(zero_space, 0, false), zf1 = table_of(zero_space, 1, false);
  const auto zb0 = table_of(zero_space, 0, true), zb1 = table_of(zero_space, 1, true);
  const auto pf0 = table_of(peri_space, 0, false), pf1 = table_of(peri_space, 1, false);
  const auto pb0 = table_of(peri_space, 0, true), pb1 = table_of(peri_space, 1, true);

  // identity of indiscernibles and positivity over patterns
  bool ok = pattern[0] == 0.0;
  for (std::uint64_t u = 1; u < count; ++u) ok = ok && pattern[u] > 0.0;
  c.check(ok, "pattern positivity failed");

  // exhaustive pairs: d(x, y) == D[x xor y] (symmetry follows exactly), and
  // the flip map is the complement of the plain shift pointwise
  ok = true;
  const std::uint64_t mask = count - 1;
  for (std::uint64_t x = 0; x < count && ok; ++x) {
    ok = ok && zf1[x] == (mask ^ zf0[x]) && pf1[x] == (mask ^ pf0[x]);
    const Point px = shift_point(zero_space, x);
    for (std::uint64_t y = x + 1; y < count; ++y) {
      if (distance(zero_space, px, shift_point(zero_space, y)) != pattern[x ^ y]) {
        ok = false;
        break;
      }
    }
  }
  c.check(ok, "metric is not a function of the difference pattern");

  // triangle inequality and the ultrametric sharpening over all pattern
  // pairs (u = x^y, v = y^z ranges over all triples)
  ok = true;
  for (std::uint64_t u = 0; u < count && ok; ++u)
    for (std::uint64_t v = 0; v < count; ++v) {
      const double duv = pattern[u ^ v];
      if (duv > std::max(pattern[u], pattern[v]) || duv > pattern[u] + pattern[v]) {
        ok = false;
        break;
      }
    }
  c.check(ok, "ultrametric/triangle failed");

  // K = 2 in both directions on both extensions, over all patterns
  ok = true;
  for (std::uint64_t u = 0; u < count; ++u) {
    ok = ok && pattern[zf0[u] ^ zf0[0]] <= 2.0 * pattern[u];
    ok = ok && pattern[zb0[u] ^ zb0[0]] <= 2.0 * pattern[u];
    ok = ok && pattern[pf0[u] ^ pf0[0]] <= 2.0 * pattern[u];
    ok = ok && pattern[pb0[u] ^ pb0[0]] <= 2.0 * pattern[u];
  }
  c.check(ok, "K = 2 violated");
  // and K = 2 is attained
  c.check(pattern[zf0[1ULL << (w + 1)] ^ zf0[0]] == 2.0 * pattern[1ULL << (w + 1)], "K = 2 not attained");

  // two-sided expansivity at e = 0.5: every nonzero pattern reaches
  // distance > 0.5 within |i| <= W on both extensions
  const auto separates = [&](const std::vector<std::uint64_t>& fwd,
                             const std::vector<std::uint64_t>& bwd, std::uint64_t u0) {
    std::uint64_t u = u0;
    for (int i = 0; i <= w; ++i) {
      if (pattern[u] > 0.5) return true;
      u = fwd[u] ^ fwd[0];
    }
    u = u0;
    for (int i = 0; i <= w; ++i) {
      if (pattern[u] > 0.5) return true;
      u = bwd[u] ^ bwd[0];
    }
    return false;
  };
  ok = true;
  for (std::uint64_t u = 1; u < count; ++u)
    ok = ok && separates(zf0, zb0, u) && separates(pf0, pb0, u);
  c.check(ok, "expansivity at e = 0.5 failed");
  ExpansivitySearchParams params;
  params.pair_count = 2000;
  params.horizon = 2 * w;
  Rng r_exp(51);
  const ExpansivityEstimate est =
      expansivity_search(zero_sys, {0.5}, params, r_exp, IterationMode::TwoSided);
  c.check(est.verdict == ExpansivityVerdict::CertifiedAnalytic, "search did not certify e = 0.5");

  // stable/unstable contraction with eta = 1/2 exactly (constant-zero)
  Rng r_con(52);
  ContractionParams cp;
  cp.exhaustive = true;
  cp.horizon = w;
  const SymbolWord word{0, {0}, WordExtension::RepeatLast};
  const ContractionReport stable =
      stable_contraction_check(zero_sys, word, 0.5, ContractionSide::Stable, r_con, cp);
  const ContractionReport unstable =
      stable_contraction_check(zero_sys, word, 0.5, ContractionSide::Unstable, r_con, cp);
  c.check(stable.ratio == 0.5 && stable.contracting, "stable ratio is not exactly 1/2");
  c.check(unstable.ratio == 0.5, "unstable ratio is not exactly 1/2");
  c.check(stable.samples == 64 && unstable.samples == 64, "qualifying pair count off");
  const ContractionReport mirrored = stable_contraction_check(
      inverse_system(zero_sys), word, 0.5, ContractionSide::Stable, r_con, cp);
  c.check(mirrored.ratio == unstable.ratio && mirrored.samples == unstable.samples,
          "inverse system does not mirror the unstable side");

  // inverse-system round-trip on periodic windows: exact identities
  ok = true;
  for (std::uint64_t x = 0; x < count; ++x) {
    ok = ok && pb0[pf0[x]] == x && pf0[pb0[x]] == x && pb1[pf1[x]] == x && pf1[pb1[x]] == x;
  }
  c.check(ok, "inverse round-trip failed");
  c.check(inverse_system(inverse_system(peri_sys)) == peri_sys, "inverse involution failed");
  Rng r_word(53);
  const SymbolWord fwd_word = random_word(peri_sys, 0, 6, r_word);
  SymbolWord bwd_word;
  bwd_word.base = -6;
  for (long long k = 0; k < 6; ++k) bwd_word.word.push_back(fwd_word.at(k));
  ok = true;
  for (std::uint64_t x = 0; x < count; ++x) {
    const Point p = shift_point(peri_space, x);
    ok = ok && compose_backward(peri_sys, bwd_word, 6, compose_forward(peri_sys, fwd_word, 6, p)) == p;
  }
  c.check(ok, "compose round-trip failed");

  c.check(c.seconds() < 60.0, "runtime exceeded 60 s");
}

void criterion_9_derived_systems(const System& dbl) {
  Criterion c(9, "derived systems: F^2 passes the bound with L = 8/3; singleton matches the oracle");
  const System squared = power_system(dbl, 2);
  const ExpansionReport constants = expansion_constants(squared);
  c.check(constants.expanding_ratio == 4.0, "F^2 expanding ratio is not 4");
  c.check(constants.small_distance_factor == 4.0, "F^2 small-distance factor is not 4");
  const double big_l = shadow_factor(constants.small_distance_factor);
  c.check(std::fabs(big_l - 8.0 / 3.0) <= 1e-15, "L is not 8/3");

  Rng r1(61);
  const OpennessCertificate cert = openness_check(squared, constants, 100, r1);
  const double delta = 1e-3;
  double worst = 0.0;
  for (std::uint64_t run = 0; run < 1000; ++run) {
    Rng rng(Rng::derive_seed(70000, run));
    const Point x0 = random_point(squared.space, rng);
    const SymbolWord sigma = random_word(squared, 0, 200, rng);
    const PseudoOrbit po = generate_pseudo_orbit(squared, x0, sigma, 0, 199, delta, rng);
    const ShadowResult res = lipschitz_shadow(squared, po, cert, constants);
    worst = std::max(worst, res.sup_deviation);
    if (res.sup_deviation > big_l * delta + 1e-9) {
      c.check(false, fmt("F^2 run %.0f exceeded L delta", static_cast<double>(run)));
      return;
    }
  }
  c.check(true, fmt("F^2 worst sup deviation %.3e <= %.3e", worst, big_l * delta));

  // singleton family: classical single-map shadowing against the oracle
  const System single = doubling_singleton();
  const ExpansionReport sc = expansion_constants(single);
  Rng r2(62);
  const OpennessCertificate scert = openness_check(single, sc, 100, r2);
  const GridSample g = grid(single.space, 100000);
  for (std::uint64_t run = 0; run < 20; ++run) {
    Rng rng(Rng::derive_seed(80000, run));
    const Point x0 = random_point(single.space, rng);
    const SymbolWord sigma = random_word(single, 0, 20, rng);
    const PseudoOrbit po = generate_pseudo_orbit(single, x0, sigma, 0, 19, delta, rng);
    const ShadowResult res = lipschitz_shadow(single, po, scert, sc);
    const auto hits = brute_force_shadow(single, po, 4e-3, g);
    const auto clusters = cluster_hits(single.space, hits, std::max(4.0 * g.resolution, kTolerance));
    double best = 1.0;
    for (const auto& h : hits) best = std::min(best, distance(single.space, h.y0, res.y0));
    c.check(!hits.empty() && clusters.size() == 1 && best <= 2.0 * g.resolution,
            fmt("singleton run %.0f disagrees with the oracle", static_cast<double>(run)));
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite (version %s)\n", kVersion);
  const System dbl = doubling_family();
  const ExpansionReport constants = expansion_constants(dbl);
  Rng cert_rng(2);
  const OpennessCertificate cert = openness_check(dbl, constants, 1000, cert_rng);

  criterion_1_lipschitz_bound(dbl, cert, constants);
  criterion_2_oracle_agreement(dbl, cert, constants);
  criterion_3_hand_instance();
  criterion_4_openness();
  criterion_5_expansivity_separation(dbl);
  criterion_6_limit_shadowing(dbl, cert, constants);
  criterion_7_continuity(dbl, cert, constants);
  criterion_8_exact_suite();
  criterion_9_derived_systems(dbl);

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
