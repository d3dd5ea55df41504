#pragma once

#include <span>

#include "fieldlog/core/types.h"

namespace fieldlog::geometry {

// Planar treatment of (lat, lon): lon is x, lat is y. Zones are farm-scale, so
// projection distortion is irrelevant to containment.

// Signed shoelace area in square degrees (positive for counter-clockwise rings).
double signed_area(std::span<const GeoPoint> ring);

// True if `p` lies on the closed segment [a, b].
bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p);

// >= 3 vertices, finite WGS84 coordinates, non-zero area, and no two
// non-adjacent edges touch.
bool is_simple_polygon(std::span<const GeoPoint> ring);

}  // namespace fieldlog::geometry
