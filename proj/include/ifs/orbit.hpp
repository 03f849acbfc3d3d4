#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ifs/errors.hpp"
#include "ifs/rng.hpp"
#include "ifs/space.hpp"
#include "ifs/system.hpp"

namespace ifs {

/// An exact orbit segment: points[k] sits at index base + k and
/// points[k+1] = f_{sigma(base+k)}(points[k]) up to the float tolerance.
struct Orbit {
  long long base = 0;
  std::vector<Point> points;
  SymbolWord sigma;

  long long lo() const { return base; }
  long long hi() const { return base + static_cast<long long>(points.size()) - 1; }
  const Point& at(long long i) const { return points[static_cast<std::size_t>(i - base)]; }
};

/// A delta-pseudo-orbit segment: every step errs from the prescribed image
/// by at most delta. The witnessing symbol word is part of the datum.
struct PseudoOrbit {
  long long base = 0;
  std::vector<Point> points;
  SymbolWord sigma;
  double delta = 0.0;

  long long lo() const { return base; }
  long long hi() const { return base + static_cast<long long>(points.size()) - 1; }
  const Point& at(long long i) const { return points[static_cast<std::size_t>(i - base)]; }
};

/// Members share one system and one delta and are pairwise comparable
/// under the weighted sequence metric.
struct PseudoOrbitEnsemble {
  std::vector<PseudoOrbit> members;
};

inline PseudoOrbit orbit_to_pseudo(const Orbit& o) {
  return PseudoOrbit{o.base, o.points, o.sigma, 0.0};
}

inline Orbit pseudo_to_orbit(const PseudoOrbit& po) {
  if (po.delta != 0.0) throw InvalidArgumentError("pseudo_to_orbit needs delta == 0");
  return Orbit{po.base, po.points, po.sigma};
}

inline void require_window(long long lo, long long hi) {
  if (lo > 0 || hi < 0) throw InvalidArgumentError("window must contain index 0 (lo <= 0 <= hi)");
}

/// The orbit through x0 (placed at index 0) over [lo, hi]; forward by the
/// maps, backward by their inverses where defined.
inline Orbit generate_orbit(const System& sys, const Point& x0, const SymbolWord& sigma,
                            long long lo, long long hi) {
  require_window(lo, hi);
  require_point(sys.space, x0, "generate_orbit");
  Orbit o;
  o.base = lo;
  o.sigma = sigma;
  o.points.resize(static_cast<std::size_t>(hi - lo + 1));
  o.points[static_cast<std::size_t>(-lo)] = x0;
  Point cur = x0;
  for (long long i = 0; i < hi; ++i) {
    cur = apply(sys, sigma.at(i), cur);
    o.points[static_cast<std::size_t>(i + 1 - lo)] = cur;
  }
  cur = x0;
  for (long long i = 0; i > lo; --i) {
    const int symbol = sigma.at(i - 1);
    require_symbol(sys, symbol, "generate_orbit");
    cur = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(symbol)], cur);
    o.points[static_cast<std::size_t>(i - 1 - lo)] = cur;
  }
  return o;
}

namespace detail {

// Perturbations below ~4 ulp would vanish under rounding and could break a
// per-index error budget; snap them to an exact step instead.
inline constexpr double kNoiseFloor = 1e-14;

inline Point perturb_forward(const System& sys, const Point& raw, double bound, Rng& rng) {
  if (bound <= kNoiseFloor) return raw;
  return point_within(sys.space, raw, bound, rng);
}

// Backward construction keeps the *forward* step error within `bound` by
// shrinking the perturbation by the forward stretch of the map.
inline Point perturb_backward(const System& sys, int symbol, const Point& next, double bound, Rng& rng) {
  const MapDescriptor& m = sys.maps[static_cast<std::size_t>(symbol)];
  const Point exact = inverse_apply(sys.space, m, next);
  if (bound <= kNoiseFloor) return exact;
  const double k = forward_lipschitz(sys.space, m);
  return point_within(sys.space, exact, bound / k, rng);
}

}  // namespace detail

/// A seeded delta-pseudo-orbit through x0 over [lo, hi]: each forward step
/// applies the prescribed map and then moves at most `profile(i)` inside
/// the metric ball (backward steps shrink the perturbation so the forward
/// error stays within budget). The stored delta is the max profile value
/// over the window.
inline PseudoOrbit generate_profile_pseudo_orbit(const System& sys, const Point& x0,
                                                 const SymbolWord& sigma, long long lo, long long hi,
                                                 const std::function<double(long long)>& profile,
                                                 Rng& rng) {
  require_window(lo, hi);
  require_point(sys.space, x0, "generate_pseudo_orbit");
  PseudoOrbit po;
  po.base = lo;
  po.sigma = sigma;
  po.points.resize(static_cast<std::size_t>(hi - lo + 1));
  po.points[static_cast<std::size_t>(-lo)] = x0;
  double dmax = 0.0;
  Point cur = x0;
  for (long long i = 0; i < hi; ++i) {
    const double bound = profile(i);
    if (bound < 0.0) throw InvalidArgumentError("pseudo-orbit error bound must be >= 0");
    dmax = std::max(dmax, bound);
    cur = detail::perturb_forward(sys, apply(sys, sigma.at(i), cur), bound, rng);
    po.points[static_cast<std::size_t>(i + 1 - lo)] = cur;
  }
  cur = x0;
  for (long long i = 0; i > lo; --i) {
    const double bound = profile(i - 1);
    if (bound < 0.0) throw InvalidArgumentError("pseudo-orbit error bound must be >= 0");
    dmax = std::max(dmax, bound);
    const int symbol = sigma.at(i - 1);
    if (!invertible(sys.maps[static_cast<std::size_t>(symbol)]))
      throw NotInvertibleError("generate_pseudo_orbit: backward window needs invertible maps");
    cur = detail::perturb_backward(sys, symbol, cur, bound, rng);
    po.points[static_cast<std::size_t>(i - 1 - lo)] = cur;
  }
  po.delta = dmax;
  return po;
}

inline PseudoOrbit generate_pseudo_orbit(const System& sys, const Point& x0, const SymbolWord& sigma,
                                         long long lo, long long hi, double delta, Rng& rng) {
  if (delta < 0.0) throw InvalidArgumentError("generate_pseudo_orbit needs delta >= 0");
  PseudoOrbit po = generate_profile_pseudo_orbit(
      sys, x0, sigma, lo, hi, [delta](long long) { return delta; }, rng);
  po.delta = delta;
  return po;
}

/// Decaying variant: the step at index i gets budget profile(|i|).
inline PseudoOrbit generate_decaying_pseudo_orbit(const System& sys, const Point& x0,
                                                  const SymbolWord& sigma, long long lo, long long hi,
                                                  const std::function<double(long long)>& profile,
                                                  Rng& rng) {
  return generate_profile_pseudo_orbit(
      sys, x0, sigma, lo, hi, [&profile](long long i) { return profile(i < 0 ? -i : i); }, rng);
}

struct StepErrorReport {
  bool ok = true;
  long long worst_index = 0;
  double worst_error = 0.0;
};

/// Checks every consecutive step against po.delta (non-strict, with the
/// global tolerance). Returns a verdict, never throws on failure.
inline StepErrorReport verify_pseudo_orbit(const System& sys, const PseudoOrbit& po) {
  StepErrorReport rep;
  rep.worst_index = po.base;
  for (long long i = po.lo(); i < po.hi(); ++i) {
    const Point image = apply(sys, po.sigma.at(i), po.at(i));
    const double err = distance(sys.space, image, po.at(i + 1));
    if (err > rep.worst_error) {
      rep.worst_error = err;
      rep.worst_index = i;
    }
  }
  rep.ok = rep.worst_error <= po.delta + kTolerance;
  return rep;
}

/// Per-index variant used by the decaying experiments: step i must stay
/// within profile(|i|).
inline bool verify_error_profile(const System& sys, const PseudoOrbit& po,
                                 const std::function<double(long long)>& profile) {
  for (long long i = po.lo(); i < po.hi(); ++i) {
    const Point image = apply(sys, po.sigma.at(i), po.at(i));
    const double err = distance(sys.space, image, po.at(i + 1));
    if (err > profile(i < 0 ? -i : i) + kTolerance) return false;
  }
  return true;
}

/// Weighted sequence distance sup d(a_i, b_i) / 2^|i| evaluated on the
/// intersection of the two windows, with an explicit bound on what the
/// unseen tails could contribute.
struct TildeDistance {
  double value = 0.0;
  double error_bound = 0.0;
  bool window_sufficient = true;  // error_bound <= requested tail bound
};

inline TildeDistance tilde_distance(const Space& space, const PseudoOrbit& a, const PseudoOrbit& b,
                                    double tail_bound_target) {
  const long long lo = std::max(a.lo(), b.lo());
  const long long hi = std::min(a.hi(), b.hi());
  if (lo > hi) throw InvalidArgumentError("tilde_distance: windows are disjoint");
  TildeDistance out;
  for (long long i = lo; i <= hi; ++i) {
    const double w = std::ldexp(1.0, -static_cast<int>(std::min<long long>(i < 0 ? -i : i, 1000)));
    out.value = std::max(out.value, distance(space, a.at(i), b.at(i)) * w);
  }
  // Smallest |index| the comparison did not cover. Windows that both start
  // at 0 are read as one-sided sequence data (no negative tail exists).
  const bool one_sided = a.lo() == 0 && b.lo() == 0;
  long long m;
  if (lo > 0 || hi < 0)
    m = 0;  // index 0 itself is uncovered
  else if (one_sided)
    m = hi + 1;
  else
    m = std::min(hi + 1, -lo + 1);
  out.error_bound = diameter(space) * std::ldexp(1.0, -static_cast<int>(std::min<long long>(m, 1000)));
  out.window_sufficient = out.error_bound <= tail_bound_target;
  return out;
}

/// Extends a one-sided pseudo-orbit (base 0) to a two-sided window by
/// filling indices i < 0 with the backward iterates of x_0 under one fixed
/// invertible map. The negative-side steps are exact, so the output is a
/// pseudo-orbit with the same delta.
inline PseudoOrbit extend_zplus_to_z(const System& sys, const PseudoOrbit& po, int symbol,
                                     long long depth) {
  if (po.base != 0) throw InvalidArgumentError("extend_zplus_to_z expects a pseudo-orbit based at 0");
  if (depth < 1) throw InvalidArgumentError("extend_zplus_to_z needs depth >= 1");
  require_symbol(sys, symbol, "extend_zplus_to_z");
  const MapDescriptor& m = sys.maps[static_cast<std::size_t>(symbol)];
  if (!invertible(m)) throw NotInvertibleError("extend_zplus_to_z: backward fill needs an invertible map");

  PseudoOrbit out;
  out.base = -depth;
  out.delta = po.delta;
  out.points.resize(static_cast<std::size_t>(depth) + po.points.size());
  Point cur = po.at(0);
  for (long long i = -1; i >= -depth; --i) {
    cur = inverse_apply(sys.space, m, cur);
    out.points[static_cast<std::size_t>(i + depth)] = cur;
  }
  for (std::size_t k = 0; k < po.points.size(); ++k)
    out.points[static_cast<std::size_t>(depth) + k] = po.points[k];

  out.sigma.base = -depth;
  out.sigma.extension = po.sigma.extension;
  out.sigma.word.assign(static_cast<std::size_t>(depth), symbol);
  for (long long i = 0; i < static_cast<long long>(po.points.size()); ++i)
    out.sigma.word.push_back(po.sigma.at(i));
  return out;
}

/// Index depth up to which continuity-test twins share their base's
/// points: beyond it, a disagreement of any size contributes less than
/// `bound` to the weighted sequence distance.
inline long long continuity_couple_length(double diam, double bound) {
  if (bound <= 0.0) throw InvalidArgumentError("continuity_couple_length needs bound > 0");
  long long c = 1;
  while (diam * std::ldexp(1.0, -static_cast<int>(c) - 1) >= bound && c < 1000) ++c;
  return c;
}

/// A copy of the pseudo-orbit that keeps the points at offsets up to
/// couple_len and regenerates the forward step noise independently beyond
/// (same witness word, same delta budget).
inline PseudoOrbit diverging_twin(const System& sys, const PseudoOrbit& po, long long couple_len,
                                  Rng& rng) {
  PseudoOrbit twin = po;
  for (long long i = po.lo() + couple_len; i < po.hi(); ++i) {
    const Point raw = apply(sys, twin.sigma.at(i), twin.at(i));
    twin.points[static_cast<std::size_t>(i + 1 - po.lo())] =
        detail::perturb_forward(sys, raw, po.delta, rng);
  }
  return twin;
}

/// Truncate a pseudo-orbit to the sub-window [lo, hi] (same witness word,
/// same delta).
inline PseudoOrbit sub_pseudo_orbit(const PseudoOrbit& po, long long lo, long long hi, double delta) {
  if (lo < po.lo() || hi > po.hi() || lo > hi)
    throw InvalidArgumentError("sub_pseudo_orbit: window out of range");
  PseudoOrbit out;
  out.base = lo;
  out.delta = delta;
  out.sigma = po.sigma;
  out.points.assign(po.points.begin() + static_cast<std::ptrdiff_t>(lo - po.lo()),
                    po.points.begin() + static_cast<std::ptrdiff_t>(hi - po.lo() + 1));
  return out;
}

}  // namespace ifs
