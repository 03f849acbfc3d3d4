#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ifs/errors.hpp"
#include "ifs/rng.hpp"

namespace ifs {

/// Global comparison tolerance for floating-point spaces. BinaryShift and
/// FiniteTable comparisons are exact and never use it.
inline constexpr double kTolerance = 1e-9;

enum class SpaceKind { Circle, Interval, BinaryShift, FiniteTable };

/// How a finite bit window stands in for an infinite 0/1 sequence outside
/// its stored range. ConstantZero reads 0 beyond the window; Periodic
/// repeats the window cyclically (which makes the shift map an exact
/// bijection on windows).
enum class ShiftExtension { ConstantZero, Periodic };

/// A canonical point of one of the four concrete spaces. Only the fields
/// of the owning kind are meaningful.
struct Point {
  SpaceKind kind = SpaceKind::Circle;
  double value = 0.0;        // Circle: [0,1), Interval: [0,1]
  std::uint32_t index = 0;   // FiniteTable state
  std::uint64_t bits = 0;    // BinaryShift window; bit j holds sequence index j - radius
  int radius = 0;            // BinaryShift window radius W

  friend bool operator==(const Point& a, const Point& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case SpaceKind::Circle:
      case SpaceKind::Interval: return a.value == b.value;
      case SpaceKind::BinaryShift: return a.radius == b.radius && a.bits == b.bits;
      case SpaceKind::FiniteTable: return a.index == b.index;
    }
    return false;
  }
};

/// Reduce a real to the canonical circle coordinate in [0, 1).
inline double canon_circle(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;  // guard against floor/rounding at the seam
  if (r < 0.0) r = 0.0;
  return r;
}

/// Descriptor of a compact metric space: the unit circle with arc metric,
/// the unit interval, the space of bit windows of radius W with the
/// first-disagreement metric, or an explicit finite distance table.
class Space {
public:
  SpaceKind kind = SpaceKind::Circle;
  int window_radius = 0;                    // BinaryShift
  ShiftExtension extension = ShiftExtension::ConstantZero;
  std::vector<std::vector<double>> table;   // FiniteTable, symmetric

  static Space circle() { return Space{SpaceKind::Circle, 0, ShiftExtension::ConstantZero, {}}; }

  static Space interval() { return Space{SpaceKind::Interval, 0, ShiftExtension::ConstantZero, {}}; }

  static Space binary_shift(int window_radius, ShiftExtension ext = ShiftExtension::ConstantZero) {
    if (window_radius < 1 || window_radius > 31)
      throw InvalidArgumentError("binary_shift window radius must be in [1, 31]");
    return Space{SpaceKind::BinaryShift, window_radius, ext, {}};
  }

  /// Validates symmetry, zero diagonal, positivity off the diagonal and the
  /// triangle inequality (exactly; the table is the metric).
  static Space finite_table(std::vector<std::vector<double>> distances) {
    const std::size_t n = distances.size();
    if (n == 0) throw InvalidArgumentError("finite_table needs at least one point");
    for (const auto& row : distances)
      if (row.size() != n) throw InvalidArgumentError("finite_table matrix must be square");
    for (std::size_t i = 0; i < n; ++i) {
      if (distances[i][i] != 0.0) throw InvalidArgumentError("finite_table diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        if (distances[i][j] < 0.0) throw InvalidArgumentError("finite_table entries must be >= 0");
        if (distances[i][j] != distances[j][i])
          throw InvalidArgumentError("finite_table matrix must be symmetric");
        if (i != j && distances[i][j] == 0.0)
          throw InvalidArgumentError("finite_table distinct points need positive distance");
        for (std::size_t k = 0; k < n; ++k)
          if (distances[i][j] > distances[i][k] + distances[k][j])
            throw InvalidArgumentError("finite_table violates the triangle inequality");
      }
    }
    return Space{SpaceKind::FiniteTable, 0, ShiftExtension::ConstantZero, std::move(distances)};
  }

  std::size_t table_size() const { return table.size(); }
  int window_bits() const { return 2 * window_radius + 1; }

  friend bool operator==(const Space& a, const Space& b) {
    return a.kind == b.kind && a.window_radius == b.window_radius &&
           a.extension == b.extension && a.table == b.table;
  }
};

/// Finite sample of a space together with its covering radius: every point
/// of the space has a grid point within `resolution` of it.
struct GridSample {
  std::vector<Point> points;
  double resolution = 0.0;
};

// ---------------------------------------------------------------------------
// Point construction

inline Point circle_point(double x) {
  Point p;
  p.kind = SpaceKind::Circle;
  p.value = canon_circle(x);
  return p;
}

inline Point interval_point(double x) {
  if (x < -kTolerance || x > 1.0 + kTolerance)
    throw InvalidArgumentError("interval point outside [0, 1]");
  Point p;
  p.kind = SpaceKind::Interval;
  p.value = std::clamp(x, 0.0, 1.0);
  return p;
}

inline Point shift_point(const Space& s, std::uint64_t bits) {
  if (s.kind != SpaceKind::BinaryShift) throw KindMismatchError("shift_point needs a BinaryShift space");
  Point p;
  p.kind = SpaceKind::BinaryShift;
  p.radius = s.window_radius;
  p.bits = bits & ((std::uint64_t{1} << s.window_bits()) - 1);
  return p;
}

/// Parse a window from a bit string, leftmost character = sequence index -W.
inline Point shift_point_from_string(const Space& s, std::string_view text) {
  if (s.kind != SpaceKind::BinaryShift) throw KindMismatchError("shift_point needs a BinaryShift space");
  if (static_cast<int>(text.size()) != s.window_bits())
    throw InvalidArgumentError("bit string length must equal 2W+1");
  std::uint64_t bits = 0;
  for (int j = 0; j < s.window_bits(); ++j) {
    const char c = text[static_cast<std::size_t>(j)];
    if (c != '0' && c != '1') throw InvalidArgumentError("bit string must contain only 0/1");
    if (c == '1') bits |= std::uint64_t{1} << j;
  }
  return shift_point(s, bits);
}

inline std::string shift_point_to_string(const Space& s, const Point& p) {
  std::string text(static_cast<std::size_t>(s.window_bits()), '0');
  for (int j = 0; j < s.window_bits(); ++j)
    if ((p.bits >> j) & 1) text[static_cast<std::size_t>(j)] = '1';
  return text;
}

inline Point table_point(const Space& s, std::uint32_t index) {
  if (s.kind != SpaceKind::FiniteTable) throw KindMismatchError("table_point needs a FiniteTable space");
  if (index >= s.table_size()) throw InvalidArgumentError("finite_table index out of range");
  Point p;
  p.kind = SpaceKind::FiniteTable;
  p.index = index;
  return p;
}

inline void require_point(const Space& s, const Point& p, const char* who) {
  if (p.kind != s.kind) throw KindMismatchError(std::string(who) + ": point/space kind mismatch");
  if (s.kind == SpaceKind::BinaryShift && p.radius != s.window_radius)
    throw KindMismatchError(std::string(who) + ": window radius mismatch");
  if (s.kind == SpaceKind::FiniteTable && p.index >= s.table_size())
    throw InvalidArgumentError(std::string(who) + ": finite_table index out of range");
}

/// Bit of the represented infinite sequence at index i (any i); applies the
/// space's extension rule outside the stored window.
inline int sequence_bit(const Space& s, const Point& p, long long i) {
  const int w = s.window_radius;
  if (i >= -w && i <= w) return static_cast<int>((p.bits >> (i + w)) & 1);
  if (s.extension == ShiftExtension::ConstantZero) return 0;
  const long long n = s.window_bits();
  long long j = (i + w) % n;
  if (j < 0) j += n;
  return static_cast<int>((p.bits >> j) & 1);
}

// ---------------------------------------------------------------------------
// Metric operations

/// The metric d. Exact for BinaryShift (powers of two) and FiniteTable
/// (table lookup), floating for Circle/Interval.
inline double distance(const Space& s, const Point& a, const Point& b) {
  require_point(s, a, "distance");
  require_point(s, b, "distance");
  switch (s.kind) {
    case SpaceKind::Circle: {
      const double t = std::fabs(a.value - b.value);
      return std::min(t, 1.0 - t);
    }
    case SpaceKind::Interval:
      return std::fabs(a.value - b.value);
    case SpaceKind::BinaryShift: {
      const std::uint64_t diff = a.bits ^ b.bits;
      if (diff == 0) return 0.0;  // equal on the whole window; truncation error <= 2^-W
      const int w = s.window_radius;
      int best = w + 1;
      for (int i = 0; i <= w && i < best; ++i) {
        if ((diff >> (w + i)) & 1) best = i;
        if ((diff >> (w - i)) & 1) best = i;
      }
      return std::ldexp(1.0, -best);  // 2^{-first disagreement}
    }
    case SpaceKind::FiniteTable:
      return s.table[a.index][b.index];
  }
  throw InternalInvariantError("distance: unreachable space kind");
}

inline double diameter(const Space& s) {
  switch (s.kind) {
    case SpaceKind::Circle: return 0.5;
    case SpaceKind::Interval: return 1.0;
    case SpaceKind::BinaryShift: return 1.0;  // disagreement at index 0
    case SpaceKind::FiniteTable: {
      double m = 0.0;
      for (const auto& row : s.table)
        for (double v : row) m = std::max(m, v);
      return m;
    }
  }
  throw InternalInvariantError("diameter: unreachable space kind");
}

/// Uniform n-point sample. Circle: k/n with covering radius 1/(2n).
/// Interval: k/(n-1) endpoints included (n=1 gives the midpoint).
/// BinaryShift: all 2^(2W+1) windows regardless of n. FiniteTable: all
/// states. The discrete spaces have covering radius 0 (the grid is exact).
inline GridSample grid(const Space& s, std::size_t n) {
  if (n == 0) throw InvalidArgumentError("grid needs n >= 1");
  GridSample g;
  switch (s.kind) {
    case SpaceKind::Circle: {
      g.points.reserve(n);
      for (std::size_t k = 0; k < n; ++k)
        g.points.push_back(circle_point(static_cast<double>(k) / static_cast<double>(n)));
      g.resolution = 1.0 / (2.0 * static_cast<double>(n));
      break;
    }
    case SpaceKind::Interval: {
      if (n == 1) {
        g.points.push_back(interval_point(0.5));
        g.resolution = 0.5;
        break;
      }
      g.points.reserve(n);
      for (std::size_t k = 0; k < n; ++k)
        g.points.push_back(interval_point(static_cast<double>(k) / static_cast<double>(n - 1)));
      g.resolution = 1.0 / (2.0 * static_cast<double>(n - 1));
      break;
    }
    case SpaceKind::BinaryShift: {
      if (s.window_bits() > 24)
        throw InvalidArgumentError("grid: BinaryShift enumeration capped at 2^24 windows");
      const std::uint64_t count = std::uint64_t{1} << s.window_bits();
      g.points.reserve(count);
      for (std::uint64_t b = 0; b < count; ++b) g.points.push_back(shift_point(s, b));
      g.resolution = 0.0;
      break;
    }
    case SpaceKind::FiniteTable: {
      g.points.reserve(s.table_size());
      for (std::uint32_t i = 0; i < s.table_size(); ++i) g.points.push_back(table_point(s, i));
      g.resolution = 0.0;
      break;
    }
  }
  return g;
}

/// Uniformly distributed canonical point; reproducible per seed state.
inline Point random_point(const Space& s, Rng& rng) {
  switch (s.kind) {
    case SpaceKind::Circle: return circle_point(rng.next_unit());
    case SpaceKind::Interval: return interval_point(rng.next_unit());
    case SpaceKind::BinaryShift:
      return shift_point(s, rng.next_u64());
    case SpaceKind::FiniteTable:
      return table_point(s, static_cast<std::uint32_t>(rng.next_below(s.table_size())));
  }
  throw InternalInvariantError("random_point: unreachable space kind");
}

/// Random point within the closed metric ball of the given radius around
/// `center`. For Circle/Interval this is a uniform offset in [-r, r]
/// (clamped into the interval); for BinaryShift it resamples bits at
/// window indices |i| >= ceil(-log2 r) only, so the ball constraint is
/// exact; for FiniteTable it picks uniformly among qualifying states.
inline Point point_within(const Space& s, const Point& center, double radius, Rng& rng) {
  require_point(s, center, "point_within");
  if (radius < 0.0) throw InvalidArgumentError("point_within needs radius >= 0");
  switch (s.kind) {
    case SpaceKind::Circle:
      return circle_point(center.value + rng.next_symmetric() * radius);
    case SpaceKind::Interval: {
      const double x = std::clamp(center.value + rng.next_symmetric() * radius, 0.0, 1.0);
      return interval_point(x);
    }
    case SpaceKind::BinaryShift: {
      if (radius == 0.0) return center;
      const int w = s.window_radius;
      int k = 0;
      while (std::ldexp(1.0, -k) > radius && k <= w + 1) ++k;  // smallest k with 2^-k <= radius
      Point p = center;
      for (int i = k; i <= w; ++i) {
        if (rng.next_bool()) p.bits ^= std::uint64_t{1} << (w + i);
        if (i > 0 && rng.next_bool()) p.bits ^= std::uint64_t{1} << (w - i);
      }
      return p;
    }
    case SpaceKind::FiniteTable: {
      std::vector<std::uint32_t> ok;
      for (std::uint32_t i = 0; i < s.table_size(); ++i)
        if (s.table[center.index][i] <= radius) ok.push_back(i);
      return table_point(s, ok[rng.next_below(ok.size())]);
    }
  }
  throw InternalInvariantError("point_within: unreachable space kind");
}

/// Best-effort point at a prescribed distance from x: exact on the circle
/// and (direction permitting) the interval; on BinaryShift the distance is
/// quantized to the nearest representable power of two; on FiniteTable the
/// closest available distance wins.
inline Point point_at_distance(const Space& s, const Point& x, double target, Rng& rng) {
  require_point(s, x, "point_at_distance");
  switch (s.kind) {
    case SpaceKind::Circle:
      return circle_point(x.value + (rng.next_bool() ? target : -target));
    case SpaceKind::Interval: {
      const bool up = rng.next_bool();
      if (up && x.value + target <= 1.0) return interval_point(x.value + target);
      if (x.value - target >= 0.0) return interval_point(x.value - target);
      return interval_point(std::min(x.value + target, 1.0));
    }
    case SpaceKind::BinaryShift: {
      if (target <= 0.0) return x;
      int k = static_cast<int>(std::lround(-std::log2(std::min(target, 1.0))));
      k = std::clamp(k, 0, s.window_radius);
      Point y = x;
      const int w = s.window_radius;
      const bool neg = k > 0 && rng.next_bool();
      y.bits ^= std::uint64_t{1} << (neg ? (w - k) : (w + k));
      return y;
    }
    case SpaceKind::FiniteTable: {
      std::uint32_t best = x.index;
      double gap = std::numeric_limits<double>::infinity();
      for (std::uint32_t i = 0; i < s.table_size(); ++i) {
        if (i == x.index) continue;
        const double g = std::fabs(s.table[x.index][i] - target);
        if (g < gap) {
          gap = g;
          best = i;
        }
      }
      return table_point(s, best);
    }
  }
  throw InternalInvariantError("point_at_distance: unreachable space kind");
}

inline std::string point_to_text(const Space& s, const Point& p) {
  switch (s.kind) {
    case SpaceKind::Circle:
    case SpaceKind::Interval: return std::to_string(p.value);
    case SpaceKind::BinaryShift: return shift_point_to_string(s, p);
    case SpaceKind::FiniteTable: return "#" + std::to_string(p.index);
  }
  return "?";
}

}  // namespace ifs
