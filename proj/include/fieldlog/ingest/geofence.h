#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fieldlog/core/types.h"

namespace fieldlog::ingest {

// Even-odd (ray casting) containment; points on the boundary count as inside.
bool contains(std::span<const GeoPoint> ring, const GeoPoint& point);

struct ZoneResolution {
  std::optional<std::string> zone_id;  // nullopt = Unzoned
  bool unknown_beacon = false;
};

class ZoneRegistry {
 public:
  explicit ZoneRegistry(std::vector<Zone> zones);

  // Registered beacon wins; otherwise the smallest-area geofence containing
  // the gps point (ties: smallest zone id); otherwise Unzoned.
  ZoneResolution resolve(const std::optional<GeoPoint>& gps,
                         const std::optional<std::string>& beacon_id) const;

  const std::vector<Zone>& zones() const { return zones_; }

 private:
  struct Fence {
    std::string zone_id;
    std::vector<GeoPoint> ring;
    double area;
  };
  std::vector<Zone> zones_;
  std::map<std::string, std::string> beacon_to_zone_;
  std::vector<Fence> fences_;  // sorted by (area, zone_id)
};

inline ZoneResolution resolve_location(const std::optional<GeoPoint>& gps,
                                       const std::optional<std::string>& beacon_id,
                                       const ZoneRegistry& zones) {
  return zones.resolve(gps, beacon_id);
}

}  // namespace fieldlog::ingest
