#include "fieldlog/core/geometry.h"

#include <algorithm>
#include <cmath>

namespace fieldlog::geometry {
namespace {

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_touch(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c, const GeoPoint& d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) ||
         (d3 == 0 && on_segment(a, b, c)) || (d4 == 0 && on_segment(a, b, d));
}

}  // namespace

double signed_area(std::span<const GeoPoint> ring) {
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % n];
    twice += p.lon * q.lat - q.lon * p.lat;
  }
  return twice / 2.0;
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  if (cross(a, b, p) != 0.0) return false;
  return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
         std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
}

bool is_simple_polygon(std::span<const GeoPoint> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (const auto& p : ring) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 ||
        std::abs(p.lon) > 180.0) {
      return false;
    }
  }
  if (signed_area(ring) == 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % n];
    if (a == b) return false;
    // A vertex that doubles back onto its incoming edge is a zero-width spike.
    const auto& c = ring[(i + 2) % n];
    if (cross(a, b, c) == 0.0 && (on_segment(a, b, c) || on_segment(b, c, a))) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share exactly one vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_touch(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace fieldlog::geometry
