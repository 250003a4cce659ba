#pragma once

#include <utility>

namespace geograph {

// Mean Earth radius in meters, the Haversine convention. Fixed, not
// configurable.
inline constexpr double kEarthRadiusM = 6371000.0;

// Geographic point in radians. Degrees only at I/O boundaries.
// Invariants: lat in [-pi/2, pi/2], lng in (-pi, pi].
struct GeoPoint {
  double lat = 0.0;
  double lng = 0.0;
};

GeoPoint geo_from_degrees(double lat_deg, double lng_deg);
double lat_degrees(const GeoPoint &p);
double lng_degrees(const GeoPoint &p);

// Wraps lng into (-pi, pi]. lat is expected in range already.
GeoPoint normalized(GeoPoint p);

// Heading is clockwise from true north, normalized to [0, 2*pi).
double normalize_heading(double heading);

struct CameraPose {
  GeoPoint position;
  double heading = 0.0;  // radians, clockwise from true north
  double height = 2.5;   // meters above ground, > 0
};

CameraPose make_camera_pose(GeoPoint position, double heading, double height);

// Local tangent-plane offset in meters: east, north, up.
struct EnuVector {
  double e = 0.0;
  double n = 0.0;
  double u = 0.0;
};

// Continuous pixel coordinates, origin top-left, x grows right (wraps modulo
// the panorama width), y grows down.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

// Flat-terrain local tangent plane mapping around the camera:
//   e = R * cos(C_lat) * (O_lng - C_lng)
//   n = R * (O_lat - C_lat)
//   u = -camera.height
// Valid for objects within ~10 km of the camera.
EnuVector geo_to_enu(const GeoPoint &object, const CameraPose &camera);

// Horizontal tangent-plane offset (east, north) of p relative to ref.
std::pair<double, double> enu_offset(const GeoPoint &p, const GeoPoint &ref);

// Inverse of enu_offset: origin displaced east_m/north_m meters.
GeoPoint displace(const GeoPoint &origin, double east_m, double north_m);

// Equirectangular projection of a ground-level ENU offset.
//   z = sqrt(e^2 + n^2)
//   x = wrap_[0,W)( (pi + atan2(e, n) - heading) * W / (2*pi) )
//   y = (pi/2 + atan2(camera.height, z)) * H / pi
// The horizon sits at row H/2; ground objects land strictly below it
// (y > H/2), matching the top-left pixel origin with sky above.
// Throws DegenerateRayError when the object is directly below the camera.
PixelPoint enu_to_pixel(const EnuVector &v, const CameraPose &camera,
                        double width, double height);

// Inverts enu_to_pixel under the flat-terrain assumption:
//   bearing    = 2*pi*x/W - pi + heading
//   depression = pi*y/H - pi/2          (positive below the horizon row)
//   z          = camera.height / tan(depression)
// Throws HorizonRayError when y <= H/2.
GeoPoint pixel_to_geo(const PixelPoint &p, const CameraPose &camera,
                      double width, double height);

// True when a pixel row lies strictly below the horizon, i.e. its ground ray
// intersects the terrain plane.
bool below_horizon(double y, double height);

// Great-circle distance in meters:
//   d = 2 R asin(sqrt(sin^2(dlat/2) + cos(a.lat) cos(b.lat) sin^2(dlng/2)))
double haversine_m(const GeoPoint &a, const GeoPoint &b);

} // namespace geograph
