#pragma once

#include <cstdint>
#include <string_view>

#include "vergepipe/types.hpp"

namespace vergepipe {

/// Mean Earth radius used by every spherical formula in the library.
inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Wraps any finite angle into [0, 360).
double normalize_degrees(double deg);

/// Compass bearing, degrees clockwise from true north, always in [0, 360).
class Bearing {
 public:
  constexpr Bearing() = default;
  explicit Bearing(double degrees) : degrees_(normalize_degrees(degrees)) {}

  double degrees() const { return degrees_; }

  Bearing operator+(double delta) const { return Bearing(degrees_ + delta); }
  Bearing operator-(double delta) const { return Bearing(degrees_ - delta); }

  friend bool operator==(const Bearing&, const Bearing&) = default;

 private:
  double degrees_ = 0.0;
};

/// Smallest absolute angle between two bearings, in [0, 180].
double angular_difference(Bearing a, Bearing b);

enum class VergeSide : std::uint8_t { Left, Right };

std::string_view to_string(VergeSide s);

double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Initial great-circle azimuth from `from` towards `to`.
/// Throws std::invalid_argument for coincident points.
Bearing forward_bearing(const GeoPoint& from, const GeoPoint& to);

/// Bearing of the verge on `side` of a road travelling along `road`.
Bearing perpendicular_bearing(Bearing road, VergeSide side);

/// Sector whose half-open interval [center - 22.5, center + 22.5) holds `b`.
CompassOctant octant_of(Bearing b);

/// Point reached by travelling `distance_m` along the great circle leaving
/// `origin` at `bearing`.
GeoPoint destination_point(const GeoPoint& origin, Bearing bearing, double distance_m);

/// Point at `fraction` (0..1) of the way along the great circle from a to b.
GeoPoint intermediate_point(const GeoPoint& a, const GeoPoint& b, double fraction);

/// Signed distance along the great circle start->end of the foot of the
/// perpendicular from `p`. Negative when `p` projects behind `start`.
double along_track_distance(const GeoPoint& start, const GeoPoint& end, const GeoPoint& p);

}  // namespace vergepipe
