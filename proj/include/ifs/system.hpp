#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ifs/errors.hpp"
#include "ifs/rng.hpp"
#include "ifs/space.hpp"

namespace ifs {

// ---------------------------------------------------------------------------
// Map descriptors

enum class MapFamily { CircleAffine, IntervalTent, IntervalClamp, ShiftMap, FiniteMap, Composite, Inverse };

/// One member map of an iterated function system, with enough analytic
/// metadata (slopes, invertibility, exact preimage enumeration) for the
/// certifiers to work without numerical root finding.
///
/// Families:
///   CircleAffine(a, b)  x -> a x + b (mod 1) on the circle, integer a >= 2
///   IntervalTent        x -> 2x for x <= 1/2, 2 - 2x otherwise
///   IntervalClamp       x -> min(2x, 1); continuous but not open (plateau)
///   ShiftMap(flip)      left shift of the bit window, then bitwise
///                       complement when flip is set
///   FiniteMap(table)    explicit state -> state table
///   Composite(parts)    parts applied front to back (derived systems)
///   Inverse(inner)      the inverse of an invertible inner map
struct MapDescriptor {
  MapFamily family = MapFamily::CircleAffine;
  int a = 2;
  double b = 0.0;
  bool flip = false;
  std::vector<std::uint32_t> table;
  std::vector<MapDescriptor> parts;

  static MapDescriptor circle_affine(int a, double b) {
    if (a < 2) throw InvalidArgumentError("circle_affine needs integer degree a >= 2");
    MapDescriptor m;
    m.family = MapFamily::CircleAffine;
    m.a = a;
    m.b = canon_circle(b);
    return m;
  }

  static MapDescriptor interval_tent() {
    MapDescriptor m;
    m.family = MapFamily::IntervalTent;
    return m;
  }

  static MapDescriptor interval_clamp() {
    MapDescriptor m;
    m.family = MapFamily::IntervalClamp;
    return m;
  }

  static MapDescriptor shift_map(bool flip) {
    MapDescriptor m;
    m.family = MapFamily::ShiftMap;
    m.flip = flip;
    return m;
  }

  static MapDescriptor finite_map(std::vector<std::uint32_t> table) {
    if (table.empty()) throw InvalidArgumentError("finite_map needs a nonempty table");
    MapDescriptor m;
    m.family = MapFamily::FiniteMap;
    m.table = std::move(table);
    return m;
  }

  static MapDescriptor composite(std::vector<MapDescriptor> parts) {
    if (parts.empty()) throw InvalidArgumentError("composite needs at least one part");
    MapDescriptor m;
    m.family = MapFamily::Composite;
    m.parts = std::move(parts);
    return m;
  }

  static MapDescriptor inverse_of(MapDescriptor inner);

  friend bool operator==(const MapDescriptor&, const MapDescriptor&) = default;
};

inline bool invertible(const MapDescriptor& m) {
  switch (m.family) {
    case MapFamily::CircleAffine: return false;  // a-to-1
    case MapFamily::IntervalTent: return false;
    case MapFamily::IntervalClamp: return false;
    case MapFamily::ShiftMap: return true;
    case MapFamily::FiniteMap: {
      std::vector<bool> hit(m.table.size(), false);
      for (std::uint32_t v : m.table) {
        if (v >= m.table.size() || hit[v]) return false;
        hit[v] = true;
      }
      return true;
    }
    case MapFamily::Composite:
      return std::all_of(m.parts.begin(), m.parts.end(), [](const MapDescriptor& p) { return invertible(p); });
    case MapFamily::Inverse: return true;  // only constructed from invertible maps
  }
  return false;
}

inline MapDescriptor MapDescriptor::inverse_of(MapDescriptor inner) {
  if (!invertible(inner)) throw NotInvertibleError("inverse_of: map is not a homeomorphism");
  if (inner.family == MapFamily::Inverse) return inner.parts[0];  // involution
  if (inner.family == MapFamily::FiniteMap) {
    std::vector<std::uint32_t> inv(inner.table.size());
    for (std::uint32_t x = 0; x < inner.table.size(); ++x) inv[inner.table[x]] = x;
    return finite_map(std::move(inv));
  }
  MapDescriptor m;
  m.family = MapFamily::Inverse;
  m.parts.push_back(std::move(inner));
  return m;
}

inline void require_map_space(const Space& s, const MapDescriptor& m) {
  switch (m.family) {
    case MapFamily::CircleAffine:
      if (s.kind != SpaceKind::Circle) throw KindMismatchError("circle_affine map needs the circle");
      return;
    case MapFamily::IntervalTent:
    case MapFamily::IntervalClamp:
      if (s.kind != SpaceKind::Interval) throw KindMismatchError("interval map needs the interval");
      return;
    case MapFamily::ShiftMap:
      if (s.kind != SpaceKind::BinaryShift) throw KindMismatchError("shift map needs a BinaryShift space");
      return;
    case MapFamily::FiniteMap:
      if (s.kind != SpaceKind::FiniteTable || m.table.size() != s.table_size())
        throw KindMismatchError("finite map table must match the finite space");
      for (std::uint32_t v : m.table)
        if (v >= s.table_size()) throw InvalidArgumentError("finite map target out of range");
      return;
    case MapFamily::Composite:
    case MapFamily::Inverse:
      for (const auto& p : m.parts) require_map_space(s, p);
      return;
  }
}

// ---------------------------------------------------------------------------
// Forward / inverse evaluation and exact preimages

inline Point apply_map(const Space& s, const MapDescriptor& m, const Point& x);

inline Point inverse_apply(const Space& s, const MapDescriptor& m, const Point& y) {
  require_point(s, y, "inverse_apply");
  switch (m.family) {
    case MapFamily::ShiftMap: {
      // f = (complement if flip) o left-shift, so f^{-1} reads the
      // complemented input one index to the left.
      Point x = y;
      x.bits = 0;
      const int w = s.window_radius;
      for (int i = -w; i <= w; ++i) {
        int bit = sequence_bit(s, y, i - 1);
        if (m.flip) bit ^= 1;
        if (bit) x.bits |= std::uint64_t{1} << (i + w);
      }
      return x;
    }
    case MapFamily::FiniteMap: {
      if (!invertible(m)) throw NotInvertibleError("inverse_apply: finite map is not a bijection");
      for (std::uint32_t i = 0; i < m.table.size(); ++i)
        if (m.table[i] == y.index) return table_point(s, i);
      throw InternalInvariantError("inverse_apply: bijective table misses a value");
    }
    case MapFamily::Composite: {
      Point x = y;
      for (auto it = m.parts.rbegin(); it != m.parts.rend(); ++it) x = inverse_apply(s, *it, x);
      return x;
    }
    case MapFamily::Inverse:
      return apply_map(s, m.parts[0], y);
    default:
      throw NotInvertibleError("inverse_apply: map is not a homeomorphism");
  }
}

inline Point apply_map(const Space& s, const MapDescriptor& m, const Point& x) {
  require_point(s, x, "apply");
  switch (m.family) {
    case MapFamily::CircleAffine:
      return circle_point(static_cast<double>(m.a) * x.value + m.b);
    case MapFamily::IntervalTent:
      return interval_point(x.value <= 0.5 ? 2.0 * x.value : 2.0 - 2.0 * x.value);
    case MapFamily::IntervalClamp:
      return interval_point(std::min(2.0 * x.value, 1.0));
    case MapFamily::ShiftMap: {
      Point y = x;
      y.bits = 0;
      const int w = s.window_radius;
      for (int i = -w; i <= w; ++i) {
        int bit = sequence_bit(s, x, i + 1);
        if (m.flip) bit ^= 1;
        if (bit) y.bits |= std::uint64_t{1} << (i + w);
      }
      return y;
    }
    case MapFamily::FiniteMap:
      return table_point(s, m.table[x.index]);
    case MapFamily::Composite: {
      Point y = x;
      for (const auto& p : m.parts) y = apply_map(s, p, y);
      return y;
    }
    case MapFamily::Inverse:
      return inverse_apply(s, m.parts[0], x);
  }
  throw InternalInvariantError("apply: unreachable family");
}

/// Complete preimage list. `finite_fiber` is false only where a map has a
/// genuine continuum of preimages (the IntervalClamp plateau at y = 1); the
/// points then hold the endpoints of that segment.
struct PreimageSet {
  std::vector<Point> points;
  bool finite_fiber = true;
};

inline PreimageSet map_preimages(const Space& s, const MapDescriptor& m, const Point& y) {
  require_point(s, y, "preimages");
  PreimageSet out;
  switch (m.family) {
    case MapFamily::CircleAffine: {
      // The a solutions of a x + b = y (mod 1), pairwise exactly 1/a apart.
      for (int k = 0; k < m.a; ++k)
        out.points.push_back(circle_point((y.value - m.b + static_cast<double>(k)) / static_cast<double>(m.a)));
      std::sort(out.points.begin(), out.points.end(),
                [](const Point& p, const Point& q) { return p.value < q.value; });
      return out;
    }
    case MapFamily::IntervalTent: {
      out.points.push_back(interval_point(y.value / 2.0));
      const Point other = interval_point(1.0 - y.value / 2.0);
      if (!(other == out.points[0])) out.points.push_back(other);
      return out;
    }
    case MapFamily::IntervalClamp: {
      if (y.value == 1.0) {
        out.points.push_back(interval_point(0.5));
        out.points.push_back(interval_point(1.0));
        out.finite_fiber = false;  // whole plateau [1/2, 1]
      } else {
        out.points.push_back(interval_point(y.value / 2.0));
      }
      return out;
    }
    case MapFamily::ShiftMap:
    case MapFamily::Inverse:
      out.points.push_back(inverse_apply(s, m, y));
      return out;
    case MapFamily::FiniteMap: {
      for (std::uint32_t i = 0; i < m.table.size(); ++i)
        if (m.table[i] == y.index) out.points.push_back(table_point(s, i));
      return out;
    }
    case MapFamily::Composite: {
      std::vector<Point> layer{y};
      bool finite = true;
      for (auto it = m.parts.rbegin(); it != m.parts.rend(); ++it) {
        std::vector<Point> next;
        for (const Point& p : layer) {
          PreimageSet ps = map_preimages(s, *it, p);
          finite = finite && ps.finite_fiber;
          next.insert(next.end(), ps.points.begin(), ps.points.end());
        }
        layer = std::move(next);
      }
      out.points = std::move(layer);
      out.finite_fiber = finite;
      return out;
    }
  }
  throw InternalInvariantError("preimages: unreachable family");
}

/// Distance from x to the preimage set; understands the clamp plateau
/// (two endpoint points marking a segment of the interval).
inline double preimage_set_distance(const Space& s, const PreimageSet& ps, const Point& x) {
  if (ps.points.empty()) return std::numeric_limits<double>::infinity();
  if (!ps.finite_fiber && s.kind == SpaceKind::Interval && ps.points.size() == 2) {
    const double lo = std::min(ps.points[0].value, ps.points[1].value);
    const double hi = std::max(ps.points[0].value, ps.points[1].value);
    if (x.value >= lo && x.value <= hi) return 0.0;
    return x.value < lo ? lo - x.value : x.value - hi;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : ps.points) best = std::min(best, distance(s, p, x));
  return best;
}

/// Forward stretch bound of one map: d(f(x), f(y)) <= bound * d(x, y).
inline double forward_lipschitz(const Space& s, const MapDescriptor& m) {
  switch (m.family) {
    case MapFamily::CircleAffine: return static_cast<double>(m.a);
    case MapFamily::IntervalTent:
    case MapFamily::IntervalClamp: return 2.0;
    case MapFamily::ShiftMap: return 2.0;  // first-disagreement index recedes by at most one
    case MapFamily::FiniteMap: {
      double best = 1.0;
      for (std::uint32_t i = 0; i < m.table.size(); ++i)
        for (std::uint32_t j = i + 1; j < m.table.size(); ++j) {
          const double d = s.table[i][j];
          if (d > 0.0) best = std::max(best, s.table[m.table[i]][m.table[j]] / d);
        }
      return best;
    }
    case MapFamily::Composite: {
      double prod = 1.0;
      for (const auto& p : m.parts) prod *= forward_lipschitz(s, p);
      return prod;
    }
    case MapFamily::Inverse: {
      const MapDescriptor& inner = m.parts[0];
      if (inner.family == MapFamily::ShiftMap) return 2.0;
      if (inner.family == MapFamily::Composite) {
        double prod = 1.0;
        for (const auto& p : inner.parts) prod *= forward_lipschitz(s, MapDescriptor::inverse_of(p));
        return prod;
      }
      throw InternalInvariantError("forward_lipschitz: unexpected inverse inner family");
    }
  }
  throw InternalInvariantError("forward_lipschitz: unreachable family");
}

/// Stretch bound of the inverse map, defined for homeomorphisms only.
inline double inverse_lipschitz(const Space& s, const MapDescriptor& m) {
  if (!invertible(m)) throw NotInvertibleError("inverse_lipschitz: map is not a homeomorphism");
  return forward_lipschitz(s, MapDescriptor::inverse_of(m));
}

// ---------------------------------------------------------------------------
// Systems and symbol sequences

/// An iterated function system: one space and a finite ordered family of
/// maps indexed by symbols 0..m-1. Immutable after construction.
struct System {
  Space space;
  std::vector<MapDescriptor> maps;

  int symbol_count() const { return static_cast<int>(maps.size()); }

  friend bool operator==(const System&, const System&) = default;
};

inline System make_system(Space space, std::vector<MapDescriptor> maps) {
  if (maps.empty()) throw InvalidArgumentError("a system needs at least one map");
  for (const auto& m : maps) require_map_space(space, m);
  return System{std::move(space), std::move(maps)};
}

inline bool all_invertible(const System& sys) {
  return std::all_of(sys.maps.begin(), sys.maps.end(), [](const MapDescriptor& m) { return invertible(m); });
}

enum class WordExtension { RepeatLast, Cyclic, FailOutside };

/// A finite window of a bi-infinite symbol sequence. `word[k]` is the
/// symbol at index `base + k`; outside the stored range the extension rule
/// decides (RepeatLast clamps to the nearest stored end, Cyclic wraps,
/// FailOutside refuses).
struct SymbolWord {
  long long base = 0;
  std::vector<int> word;
  WordExtension extension = WordExtension::RepeatLast;

  int at(long long i) const {
    if (word.empty()) throw InvalidArgumentError("symbol word is empty");
    const long long n = static_cast<long long>(word.size());
    long long k = i - base;
    if (k < 0 || k >= n) {
      switch (extension) {
        case WordExtension::RepeatLast:
          k = std::clamp<long long>(k, 0, n - 1);
          break;
        case WordExtension::Cyclic:
          k %= n;
          if (k < 0) k += n;
          break;
        case WordExtension::FailOutside:
          throw InvalidArgumentError("symbol word undefined at index " + std::to_string(i));
      }
    }
    return word[static_cast<std::size_t>(k)];
  }

  friend bool operator==(const SymbolWord&, const SymbolWord&) = default;
};

inline SymbolWord random_word(const System& sys, long long base, std::size_t length, Rng& rng) {
  SymbolWord w;
  w.base = base;
  w.word.reserve(length);
  for (std::size_t i = 0; i < length; ++i)
    w.word.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sys.symbol_count()))));
  return w;
}

inline void require_symbol(const System& sys, int symbol, const char* who) {
  if (symbol < 0 || symbol >= sys.symbol_count())
    throw InvalidArgumentError(std::string(who) + ": symbol out of range");
}

inline Point apply(const System& sys, int symbol, const Point& x) {
  require_symbol(sys, symbol, "apply");
  return apply_map(sys.space, sys.maps[static_cast<std::size_t>(symbol)], x);
}

inline PreimageSet preimages(const System& sys, int symbol, const Point& y) {
  require_symbol(sys, symbol, "preimages");
  return map_preimages(sys.space, sys.maps[static_cast<std::size_t>(symbol)], y);
}

/// n-fold forward composition prescribed by the word at indices 0..n-1;
/// n = 0 is the identity.
inline Point compose_forward(const System& sys, const SymbolWord& sigma, long long n, Point x) {
  if (n < 0) throw InvalidArgumentError("compose_forward needs n >= 0");
  for (long long k = 0; k < n; ++k) x = apply(sys, sigma.at(k), x);
  return x;
}

/// n-fold backward composition through the inverses at indices -1..-n.
/// Every map in that range must be a homeomorphism.
inline Point compose_backward(const System& sys, const SymbolWord& sigma, long long n, Point x) {
  if (n < 0) throw InvalidArgumentError("compose_backward needs n >= 0");
  for (long long k = 1; k <= n; ++k) {
    const int symbol = sigma.at(-k);
    require_symbol(sys, symbol, "compose_backward");
    x = inverse_apply(sys.space, sys.maps[static_cast<std::size_t>(symbol)], x);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Expansion and Lipschitz reports

enum class EstimateMethod { Analytic, Sampled };

struct SampleParams {
  std::size_t pair_count = 10000;
  std::uint64_t seed = 20260810;
};

/// Expansion constants of a system. `expanding_ratio` is the supremum of
/// stretch factors over maps and point pairs. The small-distance pair
/// (threshold, factor) certifies d(f x, f y) >= factor * d(x, y) whenever
/// 0 < d(x, y) <= threshold; `expands_small_distances` says whether a
/// factor > 1 was certified/observed.
struct ExpansionReport {
  double expanding_ratio = 0.0;
  double small_distance_threshold = 0.0;
  double small_distance_factor = 0.0;
  bool expands_small_distances = false;
  EstimateMethod method = EstimateMethod::Sampled;
};

namespace detail {

inline bool all_family(const System& sys, MapFamily f) {
  return std::all_of(sys.maps.begin(), sys.maps.end(),
                     [&](const MapDescriptor& m) { return m.family == f; });
}

inline bool all_shift_like(const System& sys) {
  return std::all_of(sys.maps.begin(), sys.maps.end(), [](const MapDescriptor& m) {
    return m.family == MapFamily::ShiftMap ||
           (m.family == MapFamily::Inverse && m.parts[0].family == MapFamily::ShiftMap);
  });
}

inline ExpansionReport sampled_expansion(const System& sys, const SampleParams& params) {
  ExpansionReport rep;
  rep.method = EstimateMethod::Sampled;
  Rng rng(params.seed);
  const Space& s = sys.space;
  const double diam = diameter(s);
  const bool value_space = s.kind == SpaceKind::Circle || s.kind == SpaceKind::Interval;

  double ratio = 0.0;
  for (std::size_t t = 0; t < params.pair_count; ++t) {
    const Point x = random_point(s, rng);
    const Point y = random_point(s, rng);
    const double d = distance(s, x, y);
    if (d <= 0.0) continue;
    for (const auto& m : sys.maps)
      ratio = std::max(ratio, distance(s, apply_map(s, m, x), apply_map(s, m, y)) / d);
  }
  rep.expanding_ratio = ratio;

  // A pair that contracts usually does so because it straddles a fold;
  // remember the midpoint of the most contracting pair of each level and
  // probe jittered symmetric pairs around it at the next, so the estimate
  // of the fold location refines together with the scale.
  double fold_center = 0.0;
  bool have_fold = false;
  const auto midpoint = [&](const Point& x, const Point& y) {
    if (s.kind == SpaceKind::Circle) {
      double d = y.value - x.value;
      d -= std::round(d);  // signed wrapped difference
      return canon_circle(x.value + d / 2.0);
    }
    return (x.value + y.value) / 2.0;
  };
  const auto symmetric_pair = [&](double center, double sep) {
    if (s.kind == SpaceKind::Circle)
      return std::pair<Point, Point>{circle_point(center - sep / 2.0), circle_point(center + sep / 2.0)};
    return std::pair<Point, Point>{interval_point(std::clamp(center - sep / 2.0, 0.0, 1.0)),
                                   interval_point(std::clamp(center + sep / 2.0, 0.0, 1.0))};
  };

  // Threshold ladder: largest diam * 2^-j at which every sampled close
  // pair is stretched by a factor > 1.
  const std::size_t per_level = std::max<std::size_t>(params.pair_count / 8, 64);
  for (int j = 1; j <= 24; ++j) {
    const double threshold = diam * std::ldexp(1.0, -j);
    double worst = std::numeric_limits<double>::infinity();
    double level_best = 1.25;  // track only pairs that (nearly) contract
    for (std::size_t t = 0; t < per_level; ++t) {
      Point x, y;
      if (value_space && t % 3 != 0) {
        const double center = (t % 3 == 1 && have_fold)
                                  ? fold_center + rng.next_symmetric() * threshold * 0.5
                                  : rng.next_unit();
        std::tie(x, y) = symmetric_pair(center, threshold * (0.25 + 0.75 * rng.next_unit()));
      } else {
        x = random_point(s, rng);
        y = point_within(s, x, threshold, rng);
      }
      const double d = distance(s, x, y);
      if (d <= 0.0 || d > threshold) continue;
      for (const auto& m : sys.maps) {
        const double r = distance(s, apply_map(s, m, x), apply_map(s, m, y)) / d;
        worst = std::min(worst, r);
        if (value_space && r < level_best) {
          level_best = r;
          fold_center = midpoint(x, y);
          have_fold = true;
        }
      }
    }
    if (!std::isfinite(worst)) continue;
    if (worst > 1.0) {
      rep.small_distance_threshold = threshold;
      rep.small_distance_factor = worst;
      rep.expands_small_distances = true;
      return rep;
    }
    if (rep.small_distance_threshold == 0.0) {
      rep.small_distance_threshold = threshold;
      rep.small_distance_factor = worst;
    }
  }
  return rep;
}

}  // namespace detail

/// Expansion constants: analytic for all-CircleAffine families
/// (ratio = max a, threshold = 1/(2 max a), factor = min a), all-shift
/// families (ratio 2; a two-sided shift does not expand small distances,
/// the worst small-distance factor is 1/2) and finite systems (exhaustive,
/// reported as analytic); sampled otherwise.
inline ExpansionReport expansion_constants(const System& sys, const SampleParams& params = {}) {
  ExpansionReport rep;
  if (detail::all_family(sys, MapFamily::CircleAffine)) {
    int amax = 2, amin = sys.maps[0].a;
    for (const auto& m : sys.maps) {
      amax = std::max(amax, m.a);
      amin = std::min(amin, m.a);
    }
    rep.expanding_ratio = amax;
    rep.small_distance_threshold = 1.0 / (2.0 * amax);
    rep.small_distance_factor = amin;
    rep.expands_small_distances = true;
    rep.method = EstimateMethod::Analytic;
    return rep;
  }
  if (detail::all_shift_like(sys)) {
    rep.expanding_ratio = 2.0;
    rep.small_distance_threshold = diameter(sys.space);
    rep.small_distance_factor = 0.5;
    rep.expands_small_distances = false;
    rep.method = EstimateMethod::Analytic;
    return rep;
  }
  if (detail::all_family(sys, MapFamily::FiniteMap)) {
    const Space& s = sys.space;
    const std::size_t n = s.table_size();
    std::vector<double> dists;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dists.push_back(s.table[i][j]);
    std::sort(dists.begin(), dists.end(), std::greater<>());
    double ratio = 0.0;
    for (const auto& m : sys.maps)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          ratio = std::max(ratio, s.table[m.table[i]][m.table[j]] / s.table[i][j]);
    rep.expanding_ratio = ratio;
    rep.method = EstimateMethod::Analytic;
    for (double threshold : dists) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& m : sys.maps)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (s.table[i][j] <= threshold)
              worst = std::min(worst, s.table[m.table[i]][m.table[j]] / s.table[i][j]);
      if (std::isfinite(worst) && worst > 1.0) {
        rep.small_distance_threshold = threshold;
        rep.small_distance_factor = worst;
        rep.expands_small_distances = true;
        return rep;
      }
      rep.small_distance_threshold = threshold;
      rep.small_distance_factor = std::isfinite(worst) ? worst : 0.0;
    }
    return rep;
  }
  return detail::sampled_expansion(sys, params);
}

/// Uniform bound K >= 1 with d(f x, f y) <= K d(x, y) for every member map
/// (and the same for inverses when they exist). `forward_only` marks
/// systems containing non-invertible maps.
struct LipschitzReport {
  double bound = 1.0;
  bool forward_only = false;
  EstimateMethod method = EstimateMethod::Analytic;
};

inline LipschitzReport lipschitz_constant(const System& sys, const SampleParams& = {}) {
  LipschitzReport rep;
  for (const auto& m : sys.maps) {
    rep.bound = std::max(rep.bound, forward_lipschitz(sys.space, m));
    if (invertible(m))
      rep.bound = std::max(rep.bound, inverse_lipschitz(sys.space, m));
    else
      rep.forward_only = true;
  }
  rep.bound = std::max(rep.bound, 1.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Derived systems

/// Encode a block of k symbols of the base system as one symbol of the
/// k-th power system; word[0] acts first and is the least significant digit.
inline int power_symbol_index(int symbol_count, const std::vector<int>& block) {
  int idx = 0;
  for (std::size_t j = block.size(); j-- > 0;) idx = idx * symbol_count + block[j];
  return idx;
}

inline std::vector<int> power_symbol_block(int symbol_count, int index, int k) {
  std::vector<int> block(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    block[static_cast<std::size_t>(j)] = index % symbol_count;
    index /= symbol_count;
  }
  return block;
}

/// The k-th power system over symbol set Lambda^k (materialized eagerly,
/// capped). Compositions of CircleAffine maps fuse to CircleAffine exactly.
inline System power_system(const System& sys, int k, std::size_t symbol_cap = 10000) {
  if (k < 1) throw InvalidArgumentError("power_system needs k >= 1");
  const int m = sys.symbol_count();
  double count = 1.0;
  for (int j = 0; j < k; ++j) count *= m;
  if (count > static_cast<double>(symbol_cap))
    throw InvalidArgumentError("power_system symbol set exceeds the configured cap");
  if (k == 1) return sys;

  const bool affine = detail::all_family(sys, MapFamily::CircleAffine);
  std::vector<MapDescriptor> maps;
  maps.reserve(static_cast<std::size_t>(count));
  const int total = static_cast<int>(count);
  for (int idx = 0; idx < total; ++idx) {
    const std::vector<int> block = power_symbol_block(m, idx, k);
    if (affine) {
      long long a = 1;
      double b = 0.0;
      for (int sym : block) {
        const MapDescriptor& f = sys.maps[static_cast<std::size_t>(sym)];
        // (a x + b) then (a' x + b') is (a a') x + (a' b + b') mod 1
        a *= f.a;
        b = canon_circle(static_cast<double>(f.a) * b + f.b);
      }
      maps.push_back(MapDescriptor::circle_affine(static_cast<int>(a), b));
    } else {
      std::vector<MapDescriptor> parts;
      parts.reserve(block.size());
      for (int sym : block) parts.push_back(sys.maps[static_cast<std::size_t>(sym)]);
      maps.push_back(MapDescriptor::composite(std::move(parts)));
    }
  }
  return System{sys.space, std::move(maps)};
}

/// The inverse system over the same symbol set; every map must be a
/// homeomorphism.
inline System inverse_system(const System& sys) {
  std::vector<MapDescriptor> maps;
  maps.reserve(sys.maps.size());
  for (const auto& m : sys.maps) {
    if (!invertible(m)) throw NotInvertibleError("inverse_system: a member map is not a homeomorphism");
    maps.push_back(MapDescriptor::inverse_of(m));
  }
  return System{sys.space, std::move(maps)};
}

}  // namespace ifs
