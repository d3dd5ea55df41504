#include "fieldlog/ingest/geofence.h"

#include <algorithm>
#include <cmath>

#include "fieldlog/core/geometry.h"

namespace fieldlog::ingest {

bool contains(std::span<const GeoPoint> ring, const GeoPoint& p) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (geometry::on_segment(ring[i], ring[(i + 1) % n], p)) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

ZoneRegistry::ZoneRegistry(std::vector<Zone> zones) : zones_(std::move(zones)) {
  for (const auto& z : zones_) {
    for (const auto& b : z.beacon_ids) beacon_to_zone_.emplace(b, z.id);
    if (z.geofence) {
      fences_.push_back({z.id, *z.geofence, std::abs(geometry::signed_area(*z.geofence))});
    }
  }
  std::sort(fences_.begin(), fences_.end(), [](const Fence& a, const Fence& b) {
    return a.area != b.area ? a.area < b.area : a.zone_id < b.zone_id;
  });
}

ZoneResolution ZoneRegistry::resolve(const std::optional<GeoPoint>& gps,
                                     const std::optional<std::string>& beacon_id) const {
  ZoneResolution out;
  if (beacon_id) {
    const auto it = beacon_to_zone_.find(*beacon_id);
    if (it != beacon_to_zone_.end()) {
      out.zone_id = it->second;
      return out;
    }
    out.unknown_beacon = true;
  }
  if (gps) {
    for (const auto& fence : fences_) {
      if (contains(fence.ring, *gps)) {
        out.zone_id = fence.zone_id;
        break;
      }
    }
  }
  return out;
}

}  // namespace fieldlog::ingest
