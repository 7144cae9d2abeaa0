// Coordinate transform tests: WGS84 geodetic <-> ECEF <-> local ENU.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "navfuse/geo.hpp"
#include "navfuse/rng.hpp"

namespace {

using namespace navfuse;

constexpr double kPi = std::numbers::pi;

// ===========================================================================
// geodetic_to_ecef
// ===========================================================================

TEST(GeodeticToEcef, EquatorPrimeMeridian) {
  const EcefCoord e = geodetic_to_ecef({0.0, 0.0, 0.0});
  EXPECT_NEAR(e.x, 6378137.0, 1e-9);
  EXPECT_NEAR(e.y, 0.0, 1e-9);
  EXPECT_NEAR(e.z, 0.0, 1e-9);
}

TEST(GeodeticToEcef, NorthPoleHitsSemiMinorAxis) {
  const EcefCoord e = geodetic_to_ecef({kPi / 2.0, 0.0, 0.0});
  EXPECT_NEAR(e.x, 0.0, 1e-6);
  EXPECT_NEAR(e.y, 0.0, 1e-6);
  EXPECT_NEAR(e.z, 6356752.314245, 1e-6);
}

TEST(GeodeticToEcef, Antimeridian) {
  const EcefCoord e = geodetic_to_ecef({0.0, kPi, 0.0});
  EXPECT_NEAR(e.x, -6378137.0, 1e-9);
  EXPECT_NEAR(e.y, 0.0, 1e-6);
  EXPECT_NEAR(e.z, 0.0, 1e-9);
}

// ===========================================================================
// ecef_to_geodetic
// ===========================================================================

TEST(EcefToGeodetic, EquatorPrimeMeridian) {
  const GeodeticCoord g = ecef_to_geodetic({6378137.0, 0.0, 0.0});
  EXPECT_NEAR(g.latitude, 0.0, 1e-12);
  EXPECT_NEAR(g.longitude, 0.0, 1e-12);
  EXPECT_NEAR(g.height, 0.0, 1e-9);
}

TEST(EcefToGeodetic, PoleLongitudeConvention) {
  const GeodeticCoord g = ecef_to_geodetic({0.0, 0.0, 6356752.314245});
  EXPECT_NEAR(g.latitude, kPi / 2.0, 1e-9);
  EXPECT_EQ(g.longitude, 0.0);
  EXPECT_NEAR(g.height, 0.0, 1e-6);
}

TEST(EcefToGeodetic, GeocenterThrows) {
  EXPECT_THROW(ecef_to_geodetic({0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(EcefToGeodetic, RoundTripGrid) {
  // Latitude sweep covering both hemispheres, heights from a valley to LEO-ish.
  const double lats[] = {-kPi / 2.0, -1.2, -0.7, -0.2, 0.0, 0.3, 0.8, 1.4, kPi / 2.0};
  const double lons[] = {-kPi + 1e-6, -2.0, -0.5, 0.0, 1.0, 2.5, kPi};
  const double heights[] = {-400.0, 0.0, 120.5, 9000.0, 450000.0};
  for (double lat : lats) {
    for (double lon : lons) {
      for (double h : heights) {
        const GeodeticCoord g{lat, lon, h};
        const GeodeticCoord back = ecef_to_geodetic(geodetic_to_ecef(g));
        EXPECT_NEAR(back.latitude, lat, 1e-9);
        EXPECT_NEAR(back.height, h, 1e-6);
        if (std::abs(lat) < kPi / 2.0 - 1e-9) {
          // Longitude is undefined at the poles, skip it there.
          EXPECT_NEAR(back.longitude, lon, 1e-9);
        }
      }
    }
  }
}

TEST(EcefToGeodetic, RandomRoundTrips) {
  Rng rng(7u);
  for (int i = 0; i < 500; ++i) {
    const GeodeticCoord g{rng.uniform(-kPi / 2.0, kPi / 2.0),
                          rng.uniform(-kPi + 1e-3, kPi),
                          rng.uniform(-500.0, 1e5)};
    const GeodeticCoord back = ecef_to_geodetic(geodetic_to_ecef(g));
    EXPECT_NEAR(back.latitude, g.latitude, 1e-9);
    EXPECT_NEAR(back.longitude, g.longitude, 1e-9);
    EXPECT_NEAR(back.height, g.height, 1e-6);
  }
}

// ===========================================================================
// normalize_longitude
// ===========================================================================

TEST(NormalizeLongitude, WrapsIntoHalfOpenRange) {
  EXPECT_NEAR(normalize_longitude(kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(normalize_longitude(-kPi - 0.1), kPi - 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(normalize_longitude(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_longitude(-kPi), kPi);
  EXPECT_NEAR(normalize_longitude(5.0 * kPi / 2.0), kPi / 2.0, 1e-12);
}

// ===========================================================================
// ENU frame
// ===========================================================================

TEST(EnuFrame, RotationOrthonormal) {
  Rng rng(11u);
  for (int i = 0; i < 100; ++i) {
    const GeodeticCoord origin{rng.uniform(-kPi / 2.0, kPi / 2.0),
                               rng.uniform(-kPi + 1e-3, kPi), rng.uniform(0.0, 3000.0)};
    const Eigen::Matrix3d r = ecef_to_enu_rotation(origin);
    const double defect =
        (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    EXPECT_LE(defect, 1e-12);
  }
}

TEST(EnuFrame, OriginMapsToZero) {
  const FrameRef ref = FrameRef::at({0.62, -1.91, 35.0});
  const EnuCoord l = ecef_to_enu(ref.origin_ecef, ref);
  EXPECT_NEAR(l.east, 0.0, 1e-9);
  EXPECT_NEAR(l.north, 0.0, 1e-9);
  EXPECT_NEAR(l.up, 0.0, 1e-9);
}

TEST(EnuFrame, EllipsoidNormalIsUp) {
  // +1 m along the geodetic normal shows up as (0, 0, 1): raising the height
  // by one meter moves the point exactly along the local up axis.
  const GeodeticCoord origin{0.71, 0.23, 100.0};
  const FrameRef ref = FrameRef::at(origin);
  const EcefCoord raised = geodetic_to_ecef({origin.latitude, origin.longitude, 101.0});
  const EnuCoord l = ecef_to_enu(raised, ref);
  EXPECT_NEAR(l.east, 0.0, 1e-9);
  EXPECT_NEAR(l.north, 0.0, 1e-9);
  EXPECT_NEAR(l.up, 1.0, 1e-9);
}

TEST(EnuFrame, EastAxisAtOriginIsEcefY) {
  const FrameRef ref = FrameRef::at({0.0, 0.0, 0.0});
  const EcefCoord e = enu_to_ecef({1.0, 0.0, 0.0}, ref);
  EXPECT_NEAR(e.x, ref.origin_ecef.x, 1e-9);
  EXPECT_NEAR(e.y, ref.origin_ecef.y + 1.0, 1e-9);
  EXPECT_NEAR(e.z, ref.origin_ecef.z, 1e-9);
}

TEST(EnuFrame, ZeroEnuIsOrigin) {
  const FrameRef ref = FrameRef::at({-0.4, 2.2, 500.0});
  const EcefCoord e = enu_to_ecef({0.0, 0.0, 0.0}, ref);
  EXPECT_NEAR(e.x, ref.origin_ecef.x, 1e-9);
  EXPECT_NEAR(e.y, ref.origin_ecef.y, 1e-9);
  EXPECT_NEAR(e.z, ref.origin_ecef.z, 1e-9);
}

TEST(EnuFrame, RoundTripWithin100Km) {
  const FrameRef ref = FrameRef::at({0.39, 2.0, 40.0});
  Rng rng(23u);
  for (int i = 0; i < 200; ++i) {
    const EnuCoord l{rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5), rng.uniform(-5e3, 5e3)};
    const EnuCoord back = ecef_to_enu(enu_to_ecef(l, ref), ref);
    EXPECT_NEAR(back.east, l.east, 1e-9);
    EXPECT_NEAR(back.north, l.north, 1e-9);
    EXPECT_NEAR(back.up, l.up, 1e-9);
  }
}

TEST(EnuFrame, DistancesAreFrameInvariant) {
  const FrameRef ref = FrameRef::at({-1.0, 0.8, 0.0});
  Rng rng(31u);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d e1 = ref.origin_ecef.vec() + rng.gaussian3(2e4);
    const Eigen::Vector3d e2 = ref.origin_ecef.vec() + rng.gaussian3(2e4);
    const Eigen::Vector3d l1 = ecef_to_enu(EcefCoord::from(e1), ref).vec();
    const Eigen::Vector3d l2 = ecef_to_enu(EcefCoord::from(e2), ref).vec();
    EXPECT_NEAR((e1 - e2).norm(), (l1 - l2).norm(), 1e-9);
  }
}

}  // namespace
