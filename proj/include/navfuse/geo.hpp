#pragma once

// WGS84 geodetic <-> ECEF <-> local ENU coordinate transforms.
//
// Angles are radians internally; degrees appear only at I/O boundaries.
// Estimation runs in ECEF (matching the pseudorange measurement model) and
// errors are reported in ENU about a reference point, so these transforms
// must be cheap and bit-reproducible.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

namespace navfuse {

// ===========================================================================
// WGS84 constants
// ===========================================================================

struct Wgs84 {
  static constexpr double a = 6378137.0;            ///< semi-major axis [m]
  static constexpr double f = 1.0 / 298.257223563;  ///< flattening
  static constexpr double b = a * (1.0 - f);        ///< semi-minor axis [m]
  static constexpr double e2 = f * (2.0 - f);       ///< first eccentricity squared
};

// ===========================================================================
// Coordinate types
// ===========================================================================

/// Ellipsoidal coordinates. |latitude| <= pi/2, longitude in (-pi, pi].
struct GeodeticCoord {
  double latitude{0.0};   ///< [rad]
  double longitude{0.0};  ///< [rad]
  double height{0.0};     ///< [m] above the ellipsoid
};

/// Earth-centered earth-fixed Cartesian position [m].
struct EcefCoord {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static EcefCoord from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Local tangent-plane position [m] relative to a FrameRef.
struct EnuCoord {
  double east{0.0};
  double north{0.0};
  double up{0.0};

  Eigen::Vector3d vec() const { return {east, north, up}; }
  static EnuCoord from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Wraps a longitude into (-pi, pi].
inline double normalize_longitude(double lon) {
  const double two_pi = 2.0 * std::numbers::pi;
  lon = std::fmod(lon, two_pi);
  if (lon > std::numbers::pi) lon -= two_pi;
  if (lon <= -std::numbers::pi) lon += two_pi;
  return lon;
}

// ===========================================================================
// Geodetic <-> ECEF
// ===========================================================================

inline EcefCoord geodetic_to_ecef(const GeodeticCoord& g) {
  const double sin_lat = std::sin(g.latitude);
  const double cos_lat = std::cos(g.latitude);
  const double n = Wgs84::a / std::sqrt(1.0 - Wgs84::e2 * sin_lat * sin_lat);
  return {(n + g.height) * cos_lat * std::cos(g.longitude),
          (n + g.height) * cos_lat * std::sin(g.longitude),
          (n * (1.0 - Wgs84::e2) + g.height) * sin_lat};
}

/// Inverse transform by fixed-point latitude iteration.
///
/// Converged when successive latitude change < 1e-12 rad and height change
/// < 1e-9 m; throws if 20 iterations are exceeded (unreachable for any point
/// within 10 000 km of the ellipsoid). Longitude at the poles is defined as 0.
inline GeodeticCoord ecef_to_geodetic(const EcefCoord& e) {
  const double p = std::hypot(e.x, e.y);
  if (p == 0.0 && e.z == 0.0) {
    throw std::invalid_argument("ecef_to_geodetic: input at geocenter");
  }
  if (p < 1e-9 * Wgs84::a) {
    // Polar axis: latitude sign from z, longitude fixed to 0 by convention.
    return {std::copysign(std::numbers::pi / 2.0, e.z), 0.0, std::abs(e.z) - Wgs84::b};
  }
  const double lon = normalize_longitude(std::atan2(e.y, e.x));

  double lat = std::atan2(e.z, p * (1.0 - Wgs84::e2));
  double h = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    const double w = std::sqrt(1.0 - Wgs84::e2 * sin_lat * sin_lat);
    const double n = Wgs84::a / w;
    // h = p cos(lat) + z sin(lat) - a w is well conditioned at all latitudes.
    const double h_new = p * cos_lat + e.z * sin_lat - Wgs84::a * w;
    const double lat_new = std::atan2(e.z + Wgs84::e2 * n * sin_lat, p);
    const bool done = std::abs(lat_new - lat) < 1e-12 && std::abs(h_new - h) < 1e-9;
    lat = lat_new;
    h = h_new;
    if (done) return {lat, lon, h};
  }
  throw std::runtime_error("ecef_to_geodetic: no convergence after 20 iterations");
}

// ===========================================================================
// Local ENU frame
// ===========================================================================

/// Rotation taking ECEF vectors into ENU axes at the given origin.
inline Eigen::Matrix3d ecef_to_enu_rotation(const GeodeticCoord& origin) {
  const double sl = std::sin(origin.latitude), cl = std::cos(origin.latitude);
  const double so = std::sin(origin.longitude), co = std::cos(origin.longitude);
  Eigen::Matrix3d r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
        cl * co, cl * so, sl;
  return r;
}

/// Local-frame anchor: geodetic origin plus cached ECEF origin and rotation.
struct FrameRef {
  GeodeticCoord origin;
  EcefCoord origin_ecef;
  Eigen::Matrix3d rot_ecef_to_enu;

  static FrameRef at(const GeodeticCoord& origin) {
    return {origin, geodetic_to_ecef(origin), ecef_to_enu_rotation(origin)};
  }
};

inline EnuCoord ecef_to_enu(const EcefCoord& e, const FrameRef& ref) {
  return EnuCoord::from(ref.rot_ecef_to_enu * (e.vec() - ref.origin_ecef.vec()));
}

inline EcefCoord enu_to_ecef(const EnuCoord& l, const FrameRef& ref) {
  return EcefCoord::from(ref.origin_ecef.vec() + ref.rot_ecef_to_enu.transpose() * l.vec());
}

}  // namespace navfuse
