#pragma once

namespace lifepattern {

inline constexpr double kEarthRadiusM = 6371000.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;
};

/// Great-circle distance in meters.
double haversine_m(LatLon a, LatLon b);

/// Moves `origin` by (north_m, east_m) on a local tangent plane.
LatLon offset_m(LatLon origin, double north_m, double east_m);

bool valid_coordinate(double lat, double lon);

}  // namespace lifepattern
