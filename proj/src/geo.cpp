#include "lifepattern/geo.hpp"

#include <cmath>
#include <numbers>

namespace lifepattern {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_m(LatLon a, LatLon b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

LatLon offset_m(LatLon origin, double north_m, double east_m) {
  const double dlat = north_m / kEarthRadiusM / kDegToRad;
  const double dlon = east_m / (kEarthRadiusM * std::cos(origin.lat * kDegToRad)) / kDegToRad;
  return {origin.lat + dlat, origin.lon + dlon};
}

bool valid_coordinate(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

}  // namespace lifepattern
