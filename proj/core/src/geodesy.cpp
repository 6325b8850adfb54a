#include "vergepipe/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vergepipe {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double clamp_unit(double x) { return x > 1.0 ? 1.0 : (x < -1.0 ? -1.0 : x); }

}  // namespace

double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value plus 360 can round up to exactly 360.
  if (r >= 360.0) r = 0.0;
  return r;
}

double angular_difference(Bearing a, Bearing b) {
  const double d = std::fabs(a.degrees() - b.degrees());
  return d > 180.0 ? 360.0 - d : d;
}

std::string_view to_string(VergeSide s) { return s == VergeSide::Left ? "Left" : "Right"; }

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

Bearing forward_bearing(const GeoPoint& from, const GeoPoint& to) {
  if (from == to) throw std::invalid_argument("undefined bearing: coincident points");
  const double phi1 = from.lat * kDegToRad;
  const double phi2 = to.lat * kDegToRad;
  const double dlambda = (to.lon - from.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return Bearing(std::atan2(y, x) * kRadToDeg);
}

Bearing perpendicular_bearing(Bearing road, VergeSide side) {
  return side == VergeSide::Right ? road + 90.0 : road + 270.0;
}

CompassOctant octant_of(Bearing b) {
  const double deg = b.degrees();
  int idx = static_cast<int>(std::floor((deg + 22.5) / 45.0));
  // The division can round across a boundary; settle it with exact
  // comparisons against the (exactly representable) interval edges.
  const double lower = idx * 45.0 - 22.5;
  if (deg < lower) {
    --idx;
  } else if (deg >= lower + 45.0) {
    ++idx;
  }
  idx %= 8;
  if (idx < 0) idx += 8;
  return static_cast<CompassOctant>(idx);
}

GeoPoint destination_point(const GeoPoint& origin, Bearing bearing, double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing.degrees() * kDegToRad;
  const double phi1 = origin.lat * kDegToRad;
  const double lambda1 = origin.lon * kDegToRad;
  const double sin_phi2 =
      std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(clamp_unit(sin_phi2));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * sin_phi2);
  double lon = lambda2 * kRadToDeg;
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;
  return {phi2 * kRadToDeg, lon};
}

GeoPoint intermediate_point(const GeoPoint& a, const GeoPoint& b, double fraction) {
  const double delta = haversine_distance(a, b) / kEarthRadiusM;
  if (delta == 0.0) return a;
  const double phi1 = a.lat * kDegToRad;
  const double lambda1 = a.lon * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double lambda2 = b.lon * kDegToRad;
  const double wa = std::sin((1.0 - fraction) * delta) / std::sin(delta);
  const double wb = std::sin(fraction * delta) / std::sin(delta);
  const double x = wa * std::cos(phi1) * std::cos(lambda1) + wb * std::cos(phi2) * std::cos(lambda2);
  const double y = wa * std::cos(phi1) * std::sin(lambda1) + wb * std::cos(phi2) * std::sin(lambda2);
  const double z = wa * std::sin(phi1) + wb * std::sin(phi2);
  return {std::atan2(z, std::sqrt(x * x + y * y)) * kRadToDeg, std::atan2(y, x) * kRadToDeg};
}

double along_track_distance(const GeoPoint& start, const GeoPoint& end, const GeoPoint& p) {
  const double d13 = haversine_distance(start, p) / kEarthRadiusM;
  if (d13 == 0.0 || start == end) return 0.0;
  const double theta13 = forward_bearing(start, p).degrees() * kDegToRad;
  const double theta12 = forward_bearing(start, end).degrees() * kDegToRad;
  const double dxt = std::asin(clamp_unit(std::sin(d13) * std::sin(theta13 - theta12)));
  const double dat = std::acos(clamp_unit(std::cos(d13) / std::cos(dxt)));
  const double sign = std::cos(theta12 - theta13) < 0.0 ? -1.0 : 1.0;
  return sign * dat * kEarthRadiusM;
}

}  // namespace vergepipe
