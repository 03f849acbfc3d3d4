#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifs/errors.hpp"
#include "ifs/orbit.hpp"
#include "ifs/rng.hpp"
#include "ifs/space.hpp"
#include "ifs/system.hpp"

namespace ifs {

// ---------------------------------------------------------------------------
// Openness certificate

/// Quantitative openness: whenever d(f_s(x), y) < factor * preimage_radius,
/// some preimage of y lies within preimage_radius of x. `preimage_radius`
/// is fixed at threshold/4 for reproducibility (any value below
/// threshold/2 is admissible).
struct OpennessCertificate {
  double preimage_radius = 0.0;
  bool verdict = false;
  struct Witness {
    int symbol = 0;
    Point x;
    Point y;
  };
  std::optional<Witness> witness;
  EstimateMethod method = EstimateMethod::Sampled;
  double threshold_used = 0.0;  // small-distance threshold the check ran under
  double factor_used = 0.0;     // small-distance factor the check ran under
};

/// Tests the preimage-ball criterion. Analytic short-circuits: families of
/// circle affine maps (the preimage branch sits at distance d(f(x), y)/a)
/// and families of homeomorphisms (open by bijectivity; confirmed
/// exhaustively on enumerable spaces). Everything else is sampled with
/// exact preimage enumeration: `trial_count` triples (s, x, y) with
/// d(f_s(x), y) < factor * radius are tested and the first violation is
/// returned as a witness.
inline OpennessCertificate openness_check(const System& sys, const ExpansionReport& constants,
                                          std::size_t trial_count, Rng& rng) {
  if (constants.small_distance_threshold <= 0.0 || constants.small_distance_factor <= 0.0)
    throw InvalidArgumentError("openness_check needs positive (threshold, factor) constants");
  OpennessCertificate cert;
  cert.threshold_used = constants.small_distance_threshold;
  cert.factor_used = constants.small_distance_factor;
  cert.preimage_radius = constants.small_distance_threshold / 4.0;
  const double radius = cert.preimage_radius;
  const double near = constants.small_distance_factor * radius;

  if (detail::all_family(sys, MapFamily::CircleAffine)) {
    cert.verdict = true;
    cert.method = EstimateMethod::Analytic;
    return cert;
  }

  const auto run_trial = [&](int symbol, const Point& x, const Point& y) -> bool {
    const double dist = preimage_set_distance(sys.space, preimages(sys, symbol, y), x);
    if (dist > radius + kTolerance) {
      cert.verdict = false;
      cert.witness = OpennessCertificate::Witness{symbol, x, y};
      return false;
    }
    return true;
  };

  if (all_invertible(sys)) {
    cert.verdict = true;
    cert.method = EstimateMethod::Analytic;
    // Confirm the quantitative form exhaustively where the space is small
    // enough to enumerate.
    const bool enumerable = (sys.space.kind == SpaceKind::BinaryShift && sys.space.window_bits() <= 9) ||
                            (sys.space.kind == SpaceKind::FiniteTable && sys.space.table_size() <= 64);
    if (enumerable) {
      const GridSample g = grid(sys.space, 1);
      for (int s = 0; s < sys.symbol_count() && cert.verdict; ++s)
        for (const Point& x : g.points) {
          const Point fx = apply(sys, s, x);
          for (const Point& y : g.points) {
            if (distance(sys.space, fx, y) >= near) continue;
            if (!run_trial(s, x, y)) break;
          }
          if (!cert.verdict) break;
        }
    }
    return cert;
  }

  cert.verdict = true;
  cert.method = EstimateMethod::Sampled;
  for (std::size_t t = 0; t < trial_count; ++t) {
    const int symbol = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sys.symbol_count())));
    const Point x = random_point(sys.space, rng);
    const Point fx = apply(sys, symbol, x);
    const Point y = point_within(sys.space, fx, near * (1.0 - 1e-9), rng);
    if (distance(sys.space, fx, y) >= near) continue;
    if (!run_trial(symbol, x, y)) break;
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Lipschitz shadowing solver

struct ShadowConstants {
  double expansion_factor = 0.0;  // alpha in expanding mode
  double shadow_factor = 0.0;     // L = 2 alpha / (alpha - 1)
  double epsilon = 0.0;           // pseudo-orbit error bound used
};

enum class PullbackMode { Expanding, Bijective };

struct ShadowResult {
  Point y0;                        // realized-orbit point at index 0 (window start if 0 is not covered)
  Orbit orbit;                     // the realized exact orbit over the window
  std::vector<double> deviations;  // d(orbit point, pseudo-orbit point) per index
  double sup_deviation = 0.0;
  double bound = 0.0;              // L * epsilon (infinity in bijective mode)
  ShadowConstants constants;
  double truncation_bound = 0.0;   // distance to the infinite-horizon pullback limit
  PullbackMode mode = PullbackMode::Expanding;
  long long tie_breaks = 0;        // pullback steps where several preimages were admissible
};

inline double shadow_factor(double expansion_factor) {
  if (expansion_factor <= 1.0) throw InvalidArgumentError("shadow factor needs expansion factor > 1");
  return 2.0 * expansion_factor / (expansion_factor - 1.0);
}

/// Pullback ball radii for depths 1..count: radius_j = s_j * epsilon/alpha
/// with s_j the j-term geometric sum of alpha^-k. Strictly increasing,
/// bounded by epsilon/(alpha-1) = L*epsilon/(2 alpha) * ... < L*epsilon/2.
inline std::vector<double> pullback_radii(double alpha, double epsilon, std::size_t count) {
  std::vector<double> radii;
  radii.reserve(count);
  double partial = 0.0, term = 1.0;
  for (std::size_t j = 0; j < count; ++j) {
    partial += term;
    term /= alpha;
    radii.push_back(partial * epsilon / alpha);
  }
  return radii;
}

namespace detail {

inline constexpr double kRadiusSlack = 1e-12;  // float headroom on closed-ball tests

}  // namespace detail

/// Constructive shadowing by backward preimage pullback: starting from the
/// last window point, repeatedly select the preimage (under the witnessed
/// symbol) lying in the growing ball around the corresponding pseudo-orbit
/// point. The pullback sequence is itself an exact orbit and every pullback
/// point stays within its ball, so the realized orbit tracks the
/// pseudo-orbit within L*epsilon. The finite-horizon pullback stands in
/// for the limit over ever-deeper start indices; `truncation_bound`
/// reports the gap, which shrinks geometrically with window length.
///
/// Expanding mode needs small-distance expansion (factor > 1) plus a valid
/// openness certificate and po.delta <= preimage_radius / L. For families
/// of homeomorphisms the preimage is unique and no ball test is needed
/// (bijective mode; no L-bound is claimed there).
inline ShadowResult lipschitz_shadow(const System& sys, const PseudoOrbit& po,
                                     const OpennessCertificate& certificate,
                                     const ExpansionReport& constants) {
  if (po.points.empty()) throw InvalidArgumentError("lipschitz_shadow: empty pseudo-orbit");
  const long long lo = po.lo(), hi = po.hi();
  const std::size_t len = po.points.size();

  ShadowResult res;
  res.constants.epsilon = po.delta;

  std::vector<double> radii;
  if (constants.expands_small_distances && constants.small_distance_factor > 1.0) {
    res.mode = PullbackMode::Expanding;
    const double alpha = constants.small_distance_factor;
    const double big_l = shadow_factor(alpha);
    if (!certificate.verdict)
      throw PreconditionError("openness certificate", "the certificate verdict is false");
    if (po.delta > certificate.preimage_radius / big_l + kTolerance)
      throw PreconditionError("delta <= preimage_radius / L",
                              "pseudo-orbit error bound too large for the certified radius");
    res.constants.expansion_factor = alpha;
    res.constants.shadow_factor = big_l;
    res.bound = big_l * po.delta;
    radii = pullback_radii(alpha, po.delta, len > 1 ? len - 1 : 0);
    const double depth = static_cast<double>(len - 1);
    res.truncation_bound =
        (po.delta / alpha) * std::pow(alpha, -depth) / (1.0 - 1.0 / alpha);
  } else if (all_invertible(sys)) {
    res.mode = PullbackMode::Bijective;
    res.bound = std::numeric_limits<double>::infinity();
    res.truncation_bound = 0.0;
  } else {
    throw PreconditionError("expands small distances",
                            "system neither expands small distances (factor > 1) nor is invertible");
  }

  std::vector<Point> ys(len);
  ys[len - 1] = po.at(hi);
  for (long long i = hi - 1; i >= lo; --i) {
    const std::size_t depth = static_cast<std::size_t>(hi - 1 - i);  // 0-based into radii
    const Point& target = ys[static_cast<std::size_t>(i - lo) + 1];
    const int symbol = po.sigma.at(i);
    const PreimageSet pre = preimages(sys, symbol, target);
    if (pre.points.empty())
      throw CertificateViolationError(i, "map has no preimage for the pullback target");

    if (res.mode == PullbackMode::Bijective) {
      ys[static_cast<std::size_t>(i - lo)] = pre.points[0];
      continue;
    }

    const double radius = radii[depth] + detail::kRadiusSlack;
    const Point& anchor = po.at(i);
    std::vector<std::size_t> admissible;
    for (std::size_t p = 0; p < pre.points.size(); ++p)
      if (distance(sys.space, pre.points[p], anchor) <= radius) admissible.push_back(p);
    if (admissible.empty())
      throw CertificateViolationError(i, "no preimage inside the pullback ball");
    if (admissible.size() > 1) {
      const MapDescriptor& m = sys.maps[static_cast<std::size_t>(symbol)];
      if (m.family == MapFamily::CircleAffine && radius < 0.5 / static_cast<double>(m.a))
        throw InternalInvariantError(
            "several preimage branches inside a ball smaller than half the branch separation");
      ++res.tie_breaks;
      std::sort(admissible.begin(), admissible.end(), [&](std::size_t lhs, std::size_t rhs) {
        return distance(sys.space, pre.points[lhs], anchor) < distance(sys.space, pre.points[rhs], anchor);
      });
    }
    ys[static_cast<std::size_t>(i - lo)] = pre.points[admissible[0]];
  }

  res.orbit.base = lo;
  res.orbit.sigma = po.sigma;
  res.orbit.points = std::move(ys);
  res.deviations.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    res.deviations[k] = distance(sys.space, res.orbit.points[k], po.points[k]);
    res.sup_deviation = std::max(res.sup_deviation, res.deviations[k]);
  }
  const long long anchor_index = std::clamp<long long>(0, lo, hi);
  res.y0 = res.orbit.at(anchor_index);

  if (res.mode == PullbackMode::Expanding && res.sup_deviation > res.bound + kTolerance)
    throw InternalInvariantError("pullback deviation exceeded the theoretical bound");
  return res;
}

// ---------------------------------------------------------------------------
// Brute-force oracle and uniqueness

struct OracleHit {
  Point y0;
  double sup_deviation = 0.0;
};

struct OracleParams {
  std::size_t cost_cap = 50'000'000;  // grid points x window length
};

/// Exhaustive shadow search over a grid, independent of the pullback. A
/// grid point is kept when its cell cannot be excluded: at depth t the raw
/// deviation may exceed epsilon by (stretch of the t-fold composition) *
/// covering radius, so every true shadow lands in some kept cell. On
/// exact grids (BinaryShift windows, finite tables, resolution 0) this is
/// an exact decision of max_i d(F_i(y), x_i) <= epsilon.
inline std::vector<OracleHit> brute_force_shadow(const System& sys, const PseudoOrbit& po,
                                                 double epsilon, const GridSample& g,
                                                 const OracleParams& params = {}) {
  if (po.points.empty()) throw InvalidArgumentError("brute_force_shadow: empty pseudo-orbit");
  const std::size_t len = po.points.size();
  if (g.points.size() * len > params.cost_cap)
    throw InvalidArgumentError("brute_force_shadow: grid too large for the configured cost cap");

  std::vector<double> allowance(len);
  double stretch = 1.0;
  for (std::size_t t = 0; t < len; ++t) {
    allowance[t] = epsilon + stretch * g.resolution + kTolerance;
    if (t + 1 < len)
      stretch *= forward_lipschitz(sys.space, sys.maps[static_cast<std::size_t>(po.sigma.at(po.lo() + static_cast<long long>(t)))]);
  }

  std::vector<OracleHit> hits;
  for (const Point& start : g.points) {
    Point cur = start;
    double worst = 0.0;
    bool ok = true;
    for (std::size_t t = 0; t < len; ++t) {
      const double d = distance(sys.space, cur, po.points[t]);
      if (d > allowance[t]) {
        ok = false;
        break;
      }
      worst = std::max(worst, d);
      if (t + 1 < len) cur = apply(sys, po.sigma.at(po.lo() + static_cast<long long>(t)), cur);
    }
    if (ok) hits.push_back(OracleHit{start, worst});
  }
  return hits;
}

/// Partition hits into single-linkage clusters at the given gap.
inline std::vector<std::vector<std::size_t>> cluster_hits(const Space& space,
                                                          const std::vector<OracleHit>& hits,
                                                          double gap) {
  const std::size_t n = hits.size();
  std::vector<std::vector<std::size_t>> clusters;
  if (n == 0) return clusters;
  if (space.kind == SpaceKind::Circle || space.kind == SpaceKind::Interval) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return hits[i].y0.value < hits[j].y0.value; });
    clusters.push_back({order[0]});
    for (std::size_t k = 1; k < n; ++k) {
      if (hits[order[k]].y0.value - hits[order[k - 1]].y0.value <= gap)
        clusters.back().push_back(order[k]);
      else
        clusters.push_back({order[k]});
    }
    // circle wrap-around: merge the last cluster into the first
    if (space.kind == SpaceKind::Circle && clusters.size() > 1) {
      const double wrap = hits[order[0]].y0.value + 1.0 - hits[order[n - 1]].y0.value;
      if (wrap <= gap) {
        auto& first = clusters.front();
        first.insert(first.end(), clusters.back().begin(), clusters.back().end());
        clusters.pop_back();
      }
    }
    return clusters;
  }
  // discrete spaces: union-find on pairwise distance
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(space, hits[i].y0, hits[j].y0) <= gap) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> by_root(n);
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].push_back(i);
  for (auto& c : by_root)
    if (!c.empty()) clusters.push_back(std::move(c));
  return clusters;
}

// ---------------------------------------------------------------------------
// Expansivity search

enum class IterationMode { Positive, TwoSided };
enum class ExpansivityVerdict { CertifiedAnalytic, PassedSampling, Refuted };

struct ExpansivityEstimate {
  double constant = 0.0;
  long long horizon = 0;
  std::size_t pair_count = 0;
  IterationMode mode = IterationMode::Positive;
  bool strong = false;  // independent symbol sequences for the two points
  ExpansivityVerdict verdict = ExpansivityVerdict::PassedSampling;
  std::optional<std::pair<Point, Point>> witness;  // pair that stayed together (refutation)
};

struct ExpansivitySearchParams {
  long long horizon = 40;
  std::size_t pair_count = 10000;
  int exhaustive_depth = 4;  // try all symbol words up to this length
  int random_words = 4;
  bool strong = false;
};

namespace detail {

// Adversary move: the symbol (pair) minimizing the next distance.
inline double adversary_run(const System& sys, Point x, Point y, double e, long long steps,
                            bool strong, bool backward, const std::vector<int>& prefix, Rng& rng,
                            int random_tail) {
  const int m = sys.symbol_count();
  double worst = distance(sys.space, x, y);
  const auto step = [&](Point& px, Point& py, int sx, int sy) {
    if (backward) {
      px = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(sx)], px);
      py = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(sy)], py);
    } else {
      px = apply(sys, sx, px);
      py = apply(sys, sy, py);
    }
  };
  long long t = 0;
  for (int sym : prefix) {
    if (t >= steps) break;
    step(x, y, sym, sym);
    worst = std::max(worst, distance(sys.space, x, y));
    if (worst > e) return worst;
    ++t;
  }
  for (; t < steps; ++t) {
    // greedy continuation, occasionally randomized
    int bx = 0, by = 0;
    double best = std::numeric_limits<double>::infinity();
    const bool randomize = random_tail > 0 && rng.next_below(4) == 0;
    if (randomize) {
      bx = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m)));
      by = strong ? static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m))) : bx;
    } else {
      for (int sx = 0; sx < m; ++sx) {
        const int sy_lo = strong ? 0 : sx;
        const int sy_hi = strong ? m - 1 : sx;
        for (int sy = sy_lo; sy <= sy_hi; ++sy) {
          Point tx = x, ty = y;
          step(tx, ty, sx, sy);
          const double d = distance(sys.space, tx, ty);
          if (d < best) {
            best = d;
            bx = sx;
            by = sy;
          }
        }
      }
    }
    step(x, y, bx, by);
    worst = std::max(worst, distance(sys.space, x, y));
    if (worst > e) return worst;
  }
  return worst;
}

// Can the adversary keep the pair within e over the horizon?
inline bool pair_stays_within(const System& sys, const Point& x, const Point& y, double e,
                              long long horizon, IterationMode mode, bool strong,
                              const ExpansivitySearchParams& params, Rng& rng) {
  if (distance(sys.space, x, y) > e) return false;
  const int m = sys.symbol_count();

  // all words up to exhaustive_depth (capped), each extended greedily
  int depth = 0;
  long long total = 1;
  while (depth < params.exhaustive_depth && total * m <= 4096) {
    total *= m;
    ++depth;
  }
  std::vector<std::vector<int>> prefixes;
  std::vector<int> cur;
  const std::function<void(int)> rec = [&](int left) {
    prefixes.push_back(cur);
    if (left == 0) return;
    for (int s = 0; s < m; ++s) {
      cur.push_back(s);
      rec(left - 1);
      cur.pop_back();
    }
  };
  rec(depth);

  const auto directions = (mode == IterationMode::TwoSided)
                              ? std::vector<bool>{false, true}
                              : std::vector<bool>{false};
  for (const auto& prefix : prefixes) {
    for (int r = 0; r <= params.random_words; ++r) {
      bool stays = true;
      for (bool backward : directions) {
        if (adversary_run(sys, x, y, e, horizon, strong, backward, prefix, rng, r) > e) {
          stays = false;
          break;
        }
      }
      if (stays) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Search for an expansivity constant among the candidates. Analytic
/// certification: circle affine families are positively expansive at any
/// e below 1/(2 a_max) (small distances grow geometrically until they
/// exceed that threshold); shift families are two-sided expansive at any
/// e < 1 (a window disagreement reaches index 0 within W steps in the
/// appropriate direction) and, on constant-zero windows, refutable in
/// positive mode for e >= 2^-W. Otherwise candidate constants are
/// stress-tested by sampling pairs and adversarial symbol words; sampling
/// can refute or give evidence, never prove.
inline ExpansivityEstimate expansivity_search(const System& sys, const std::vector<double>& candidates,
                                              const ExpansivitySearchParams& params, Rng& rng,
                                              IterationMode mode) {
  if (candidates.empty()) throw InvalidArgumentError("expansivity_search needs candidates");
  if (params.horizon < 1) throw InvalidArgumentError("expansivity_search needs horizon >= 1");
  for (double e : candidates)
    if (e <= 0.0) throw InvalidArgumentError("expansivity constants must be positive");
  if (mode == IterationMode::TwoSided && !all_invertible(sys))
    throw PreconditionError("two-sided iteration", "backward iterates need invertible maps");

  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  const bool affine = detail::all_family(sys, MapFamily::CircleAffine);
  const bool shifts = detail::all_shift_like(sys);
  int amax = 0;
  if (affine)
    for (const auto& m : sys.maps) amax = std::max(amax, m.a);

  ExpansivityEstimate est;
  est.horizon = params.horizon;
  est.pair_count = params.pair_count;
  est.mode = mode;
  est.strong = params.strong;

  for (double e : sorted) {
    // analytic refutation: constant-zero shift windows in positive mode
    // (a far-left disagreement only ever shrinks under forward shifts)
    if (shifts && mode == IterationMode::Positive &&
        sys.space.extension == ShiftExtension::ConstantZero &&
        e >= std::ldexp(1.0, -sys.space.window_radius)) {
      int k = 1;
      while (std::ldexp(1.0, -k) > e) ++k;
      const Space& s = sys.space;
      Point x = shift_point(s, 0);
      Point y = shift_point(s, std::uint64_t{1} << (s.window_radius - k));
      est.constant = e;
      est.verdict = ExpansivityVerdict::Refuted;
      est.witness = std::make_pair(x, y);
      continue;  // maybe a smaller candidate survives? smaller e only easier to refute; keep last
    }

    // The analytic arguments pin both points to one word; with independent
    // words (strong mode) affine offsets can cancel, so nothing is
    // certified there.
    bool analytic = false;
    if (!params.strong) {
      if (affine && e < 1.0 / (2.0 * static_cast<double>(amax))) analytic = true;
      if (shifts && e < 1.0 &&
          (mode == IterationMode::TwoSided || sys.space.extension == ShiftExtension::Periodic))
        analytic = true;
    }

    // sampling pass (also run under analytic certificates as a cross-check)
    bool refuted = false;
    std::pair<Point, Point> witness;
    const double diam = diameter(sys.space);
    for (std::size_t t = 0; t < params.pair_count && !refuted; ++t) {
      Point x = random_point(sys.space, rng);
      Point y;
      switch (t % 4) {
        case 0: y = random_point(sys.space, rng); break;
        case 1: y = point_within(sys.space, x, e, rng); break;
        case 2: y = point_within(sys.space, x, e / 4.0, rng); break;
        default: y = point_within(sys.space, x, std::min(e, diam) * rng.next_unit(), rng); break;
      }
      if (distance(sys.space, x, y) == 0.0) continue;
      if (detail::pair_stays_within(sys, x, y, e, params.horizon, mode, params.strong, params, rng)) {
        refuted = true;
        witness = {x, y};
      }
    }
    if (refuted) {
      if (analytic)
        throw InternalInvariantError("sampling refuted an analytically certified expansivity constant");
      est.constant = e;
      est.verdict = ExpansivityVerdict::Refuted;
      est.witness = witness;
      continue;
    }
    est.constant = e;
    est.verdict = analytic ? ExpansivityVerdict::CertifiedAnalytic : ExpansivityVerdict::PassedSampling;
    est.witness.reset();
    return est;
  }
  return est;  // everything refuted: the smallest candidate with its witness
}

// ---------------------------------------------------------------------------
// Separation horizon

/// Smallest N such that staying within `proximity` for all |i| <= N forces
/// the initial distance below `target`.
struct SeparationHorizon {
  double proximity = 0.0;      // e
  double target = 0.0;         // alpha
  long long steps = 0;         // N
  bool bounded = true;
  EstimateMethod method = EstimateMethod::Sampled;
  IterationMode mode = IterationMode::Positive;
};

struct SeparationParams {
  std::size_t pair_count = 2000;
  long long cap = 64;
  bool force_sampled = false;
  // Give the two points independent symbol words (the strong-expansivity
  // reading). Shared words are the default: they match how the continuity
  // experiment fixes one witness per pseudo-orbit pair.
  bool independent_words = false;
};

inline SeparationHorizon separation_horizon(const System& sys, double proximity, double target,
                                            Rng& rng, const SeparationParams& params = {}) {
  if (proximity <= 0.0 || target <= 0.0)
    throw InvalidArgumentError("separation_horizon needs positive proximity and target");
  SeparationHorizon out;
  out.proximity = proximity;
  out.target = target;
  out.mode = all_invertible(sys) ? IterationMode::TwoSided : IterationMode::Positive;

  if (target > proximity) {
    out.steps = 0;
    out.method = EstimateMethod::Analytic;
    return out;
  }

  const bool affine = detail::all_family(sys, MapFamily::CircleAffine);
  const bool shifts = detail::all_shift_like(sys);
  // The analytic bounds below are shared-word statements; with independent
  // words an affine family admits never-separating pairs (offsets cancel),
  // so only the sampled search applies there.
  if (!params.force_sampled && !params.independent_words && (affine || shifts)) {
    double growth = 2.0, floor_distance = target;
    bool valid = false;
    if (affine) {
      int amax = 0, amin = sys.maps[0].a;
      for (const auto& m : sys.maps) {
        amax = std::max(amax, m.a);
        amin = std::min(amin, m.a);
      }
      growth = amin;
      valid = proximity <= 1.0 / (2.0 * static_cast<double>(amax));
    } else {
      growth = 2.0;
      // distances are powers of two; the worst pair at distance >= target
      // sits at the largest power of two <= ... >= target
      floor_distance = std::ldexp(1.0, -static_cast<int>(std::floor(std::log2(1.0 / target))));
      valid = proximity < 1.0;
    }
    if (valid) {
      long long n = 0;
      double d = floor_distance;
      while (d <= proximity && n < params.cap) {
        d *= growth;
        ++n;
      }
      out.steps = n;
      out.bounded = n < params.cap || d > proximity;
      out.method = EstimateMethod::Analytic;
      return out;
    }
  }

  // sampled search: N is refuted by a pair at distance >= target that an
  // adversarial word keeps within proximity for all |i| <= N
  ExpansivitySearchParams asp;
  asp.exhaustive_depth = 3;
  asp.random_words = 2;
  const double diam = diameter(sys.space);
  for (long long n = 0; n <= params.cap; ++n) {
    bool refuted = false;
    for (std::size_t t = 0; t < params.pair_count && !refuted; ++t) {
      Point x = random_point(sys.space, rng);
      double dd;
      switch (t % 4) {
        case 0: dd = target; break;
        case 1: dd = target * (1.0 + rng.next_unit()); break;
        case 2: dd = std::min(proximity, diam) * rng.next_unit() + target; break;
        default: dd = target + (std::min(proximity, diam) - target) * rng.next_unit(); break;
      }
      Point y = point_at_distance(sys.space, x, std::min(dd, diam), rng);
      const double d0 = distance(sys.space, x, y);
      if (d0 < target || d0 > proximity) continue;
      if (n == 0 || detail::pair_stays_within(sys, x, y, proximity, n, out.mode,
                                              params.independent_words, asp, rng))
        refuted = true;
    }
    if (!refuted) {
      out.steps = n;
      out.method = EstimateMethod::Sampled;
      return out;
    }
  }
  out.steps = params.cap;
  out.bounded = false;  // evidence against expansivity at this proximity
  out.method = EstimateMethod::Sampled;
  return out;
}

// ---------------------------------------------------------------------------
// Uniqueness of the shadow

struct UniquenessReport {
  bool ok = false;
  std::size_t cluster_count = 0;
  std::vector<OracleHit> hits;
  double cluster_gap = 0.0;
};

/// Shadow uniqueness via the oracle: with expansivity constant e and
/// tracking tolerance epsilon < e/3, all oracle hits must form a single
/// cluster at oracle resolution.
inline UniquenessReport uniqueness_check(const System& sys, const PseudoOrbit& po, double epsilon,
                                         const ExpansivityEstimate& estimate, const GridSample& g,
                                         const OracleParams& params = {}) {
  if (!(epsilon < estimate.constant / 3.0))
    throw PreconditionError("epsilon < e/3", "tracking tolerance too large for the expansivity constant");
  UniquenessReport rep;
  rep.hits = brute_force_shadow(sys, po, epsilon, g, params);
  rep.cluster_gap = std::max(4.0 * g.resolution, kTolerance);
  const auto clusters = cluster_hits(sys.space, rep.hits, rep.cluster_gap);
  rep.cluster_count = clusters.size();
  rep.ok = !rep.hits.empty() && clusters.size() == 1;
  return rep;
}

// ---------------------------------------------------------------------------
// Limit shadowing experiment

struct LimitLevelCheck {
  long long start_index = 0;   // I
  double level = 0.0;          // the error level beyond I
  double tail_sup = 0.0;       // max full-shadow deviation at |i| >= I
  double tail_bound = 0.0;     // (L + 1) * level
  double suffix_sup = 0.0;     // deviation of the re-shadowed suffix window
  double suffix_bound = 0.0;   // L * level
  bool ok = false;
};

struct LimitShadowReport {
  bool applicable = true;      // the profile actually decays
  long long base = 0;
  std::vector<double> deviations;  // full-window shadow deviations
  std::vector<LimitLevelCheck> levels;
  double shadow_factor = 0.0;
  double sup_deviation = 0.0;
  bool ok = false;
};

/// Shadows a decaying-profile pseudo-orbit over the full window, then
/// re-shadows suffix windows [I, hi] for increasing I and checks that tail
/// deviations beyond each I obey (L + 1) * profile(I). A non-decaying
/// profile is flagged not-applicable and only the global L * delta bound
/// is asserted.
inline LimitShadowReport limit_shadow_experiment(const System& sys, const PseudoOrbit& po,
                                                 const std::function<double(long long)>& profile,
                                                 const OpennessCertificate& certificate,
                                                 const ExpansionReport& constants,
                                                 long long level_stride = 10) {
  if (level_stride < 1) throw InvalidArgumentError("limit_shadow_experiment needs level_stride >= 1");
  LimitShadowReport rep;
  rep.base = po.lo();
  rep.applicable = profile(po.hi()) < profile(0) || profile(0) == 0.0;

  const ShadowResult full = lipschitz_shadow(sys, po, certificate, constants);
  rep.deviations = full.deviations;
  rep.sup_deviation = full.sup_deviation;
  rep.shadow_factor = full.constants.shadow_factor;
  const double big_l = full.constants.shadow_factor;

  if (!rep.applicable) {
    rep.ok = full.sup_deviation <= big_l * po.delta + kTolerance;
    return rep;
  }

  bool all_ok = true;
  for (long long start = 0; start <= po.hi(); start += level_stride) {
    LimitLevelCheck lv;
    lv.start_index = start;
    lv.level = profile(start);
    lv.tail_bound = (big_l + 1.0) * lv.level;
    for (long long i = po.lo(); i <= po.hi(); ++i)
      if (std::llabs(i) >= start)
        lv.tail_sup = std::max(lv.tail_sup, rep.deviations[static_cast<std::size_t>(i - po.lo())]);
    bool level_ok = lv.tail_sup <= lv.tail_bound + kTolerance;
    if (start > po.lo() && start <= po.hi()) {
      const PseudoOrbit suffix = sub_pseudo_orbit(po, start, po.hi(), lv.level);
      const ShadowResult sres = lipschitz_shadow(sys, suffix, certificate, constants);
      lv.suffix_sup = sres.sup_deviation;
      lv.suffix_bound = big_l * lv.level;
      level_ok = level_ok && lv.suffix_sup <= lv.suffix_bound + kTolerance;
    }
    lv.ok = level_ok;
    all_ok = all_ok && level_ok;
    rep.levels.push_back(lv);
  }
  rep.ok = all_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Continuous shadowing experiment

struct UniquenessProbe {
  std::size_t stride = 0;      // probe every stride-th member (0 = off)
  std::size_t grid_n = 10000;
  long long prefix_len = 12;   // indices of the probed prefix window
};

struct ContinuityReport {
  std::size_t pairs_tested = 0;
  std::size_t pairs_skipped = 0;   // tilde distance >= beta (hypothesis unmet)
  double max_displacement = 0.0;
  double proximity_bound = 0.0;    // beta, chosen with 2^N beta < e/3
  long long horizon = 0;           // N
  std::size_t uniqueness_probes = 0;
  bool ok = false;
};

/// Realizes the pseudo-orbit -> shadow-point map on an ensemble and checks
/// its continuity: members closer than beta in the weighted sequence
/// metric must have shadow points closer than `target`. Witness words are
/// fixed per member (they are part of the pseudo-orbit datum). A subsample
/// of members is cross-checked for shadow uniqueness against the oracle;
/// a violation aborts the experiment.
inline ContinuityReport continuity_experiment(const System& sys, const PseudoOrbitEnsemble& ensemble,
                                              double epsilon, double target,
                                              const ExpansivityEstimate& estimate,
                                              const OpennessCertificate& certificate,
                                              const ExpansionReport& constants, Rng& rng,
                                              const UniquenessProbe& probe = {}) {
  const double e = estimate.constant;
  if (!(epsilon < e / 3.0))
    throw PreconditionError("epsilon < e/3", "tracking tolerance too large for the expansivity constant");
  if (estimate.verdict == ExpansivityVerdict::Refuted)
    throw PreconditionError("expansive system", "the expansivity estimate is refuted");

  ContinuityReport rep;
  const SeparationHorizon sep = separation_horizon(sys, e, target, rng);
  rep.horizon = sep.steps;
  rep.proximity_bound = e / (3.0 * std::ldexp(1.0, static_cast<int>(sep.steps) + 1));

  std::vector<ShadowResult> shadows;
  shadows.reserve(ensemble.members.size());
  for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
    const PseudoOrbit& member = ensemble.members[k];
    const StepErrorReport check = verify_pseudo_orbit(sys, member);
    if (!check.ok)
      throw PreconditionError("ensemble members are delta-pseudo-orbits",
                              "member " + std::to_string(k) + " fails verification");
    if (constants.expands_small_distances &&
        shadow_factor(constants.small_distance_factor) * member.delta > epsilon + kTolerance)
      throw PreconditionError("L * delta <= epsilon",
                              "member " + std::to_string(k) + " is too noisy to track within epsilon");
    shadows.push_back(lipschitz_shadow(sys, member, certificate, constants));

    if (probe.stride > 0 && k % probe.stride == 0) {
      const long long pend = std::min(member.lo() + probe.prefix_len, member.hi());
      const PseudoOrbit prefix = sub_pseudo_orbit(member, member.lo(), pend, member.delta);
      const GridSample g = grid(sys.space, probe.grid_n);
      const UniquenessReport uni = uniqueness_check(sys, prefix, epsilon, estimate, g);
      ++rep.uniqueness_probes;
      if (!uni.ok)
        throw InternalInvariantError("shadow uniqueness violated on ensemble member " +
                                     std::to_string(k) + " (" + std::to_string(uni.cluster_count) +
                                     " clusters)");
    }
  }

  for (std::size_t i = 0; i < ensemble.members.size(); ++i)
    for (std::size_t j = i + 1; j < ensemble.members.size(); ++j) {
      const TildeDistance td =
          tilde_distance(sys.space, ensemble.members[i], ensemble.members[j], rep.proximity_bound / 4.0);
      if (!td.window_sufficient || td.value >= rep.proximity_bound) {
        ++rep.pairs_skipped;
        continue;
      }
      ++rep.pairs_tested;
      rep.max_displacement =
          std::max(rep.max_displacement, distance(sys.space, shadows[i].y0, shadows[j].y0));
    }
  rep.ok = rep.pairs_tested > 0 && rep.max_displacement < target;
  return rep;
}

// ---------------------------------------------------------------------------
// Local stable / unstable set contraction

enum class ContractionSide { Stable, Unstable };

struct ContractionReport {
  double locality = 0.0;        // epsilon_0 screening radius
  double ratio = 1.0;           // eta: max one-step shrink factor among qualifying pairs
  ContractionSide side = ContractionSide::Stable;
  std::size_t samples = 0;      // qualifying pairs
  bool certified_analytic = false;
  bool contracting = false;     // ratio < 1 with at least one qualifying pair
};

struct ContractionParams {
  std::size_t pair_count = 2000;
  long long horizon = 6;
  bool exhaustive = false;  // enumerate all pairs (shift systems: all difference patterns)
};

/// Samples pairs whose forward (stable) or backward (unstable) iterates
/// under the given word stay within `locality`, and fits the smallest
/// uniform one-step factor eta with d_{i+1} <= eta * d_i over all
/// qualifying pairs (which implies the geometric bound eta^i). For shift
/// families eta = 1/2 exactly: the first disagreement recedes by one index
/// per step. Exhaustive mode on shift systems enumerates difference
/// patterns, which covers every pair because the member maps act on the
/// XOR of two windows as a plain shift.
inline ContractionReport stable_contraction_check(const System& sys, const SymbolWord& sigma,
                                                  double locality, ContractionSide side, Rng& rng,
                                                  const ContractionParams& params = {}) {
  if (locality <= 0.0) throw InvalidArgumentError("stable_contraction_check needs locality > 0");
  if (side == ContractionSide::Unstable && !all_invertible(sys))
    throw NotInvertibleError("unstable side needs an invertible system");

  ContractionReport rep;
  rep.locality = locality;
  rep.side = side;
  rep.certified_analytic = detail::all_shift_like(sys);

  const auto trajectory_ratios = [&](const Point& x, const Point& y, double& max_ratio) -> bool {
    Point px = x, py = y;
    std::vector<double> dists{distance(sys.space, px, py)};
    for (long long i = 0; i < params.horizon; ++i) {
      const long long idx = side == ContractionSide::Stable ? i : -(i + 1);
      const int symbol = sigma.at(idx);
      if (side == ContractionSide::Stable) {
        px = apply(sys, symbol, px);
        py = apply(sys, symbol, py);
      } else {
        px = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(symbol)], px);
        py = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(symbol)], py);
      }
      dists.push_back(distance(sys.space, px, py));
    }
    for (double d : dists)
      if (d > locality) return false;
    for (std::size_t i = 0; i + 1 < dists.size(); ++i)
      if (dists[i] > 0.0) max_ratio = std::max(max_ratio, dists[i + 1] / dists[i]);
    return true;
  };

  double max_ratio = 0.0;
  if (params.exhaustive) {
    if (rep.certified_analytic) {
      const Space& s = sys.space;
      const std::uint64_t count = std::uint64_t{1} << s.window_bits();
      const Point zero = shift_point(s, 0);
      for (std::uint64_t u = 0; u < count; ++u) {
        if (trajectory_ratios(zero, shift_point(s, u), max_ratio)) ++rep.samples;
      }
    } else if (sys.space.kind == SpaceKind::FiniteTable) {
      const std::size_t n = sys.space.table_size();
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i; j < n; ++j)
          if (trajectory_ratios(table_point(sys.space, i), table_point(sys.space, j), max_ratio))
            ++rep.samples;
    } else {
      throw InvalidArgumentError("exhaustive contraction check needs an enumerable space");
    }
  } else {
    for (std::size_t t = 0; t < params.pair_count; ++t) {
      const Point x = random_point(sys.space, rng);
      const Point y = t % 2 == 0 ? point_within(sys.space, x, locality, rng)
                                 : random_point(sys.space, rng);
      if (trajectory_ratios(x, y, max_ratio)) ++rep.samples;
    }
  }
  if (rep.samples > 0) {
    rep.ratio = max_ratio;
    rep.contracting = max_ratio < 1.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Power-system block view of a pseudo-orbit

/// Every k-th point of a pseudo-orbit of the base system, with composed
/// symbols, read as a pseudo-orbit of the k-th power system. The stored
/// delta is the measured worst block step error.
inline PseudoOrbit power_block_pseudo_orbit(const System& base, const System& powered,
                                            const PseudoOrbit& po, int k) {
  if (k < 1) throw InvalidArgumentError("power_block_pseudo_orbit needs k >= 1");
  if (po.base != 0) throw InvalidArgumentError("power_block_pseudo_orbit expects a window based at 0");
  const long long blocks = po.hi() / k;  // block points at 0, k, ..., blocks*k
  PseudoOrbit out;
  out.base = 0;
  out.sigma.base = 0;
  out.sigma.extension = WordExtension::RepeatLast;
  for (long long t = 0; t <= blocks; ++t) {
    out.points.push_back(po.at(t * k));
    if (t < blocks) {
      std::vector<int> block;
      block.reserve(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) block.push_back(po.sigma.at(t * k + j));
      out.sigma.word.push_back(power_symbol_index(base.symbol_count(), block));
    }
  }
  if (out.sigma.word.empty()) out.sigma.word.push_back(0);
  double worst = 0.0;
  for (long long t = 0; t < blocks; ++t) {
    const Point image = apply(powered, out.sigma.at(t), out.at(t));
    worst = std::max(worst, distance(powered.space, image, out.at(t + 1)));
  }
  out.delta = worst;
  return out;
}

}  // namespace ifs
