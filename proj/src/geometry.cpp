#include "geograph/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geograph/error.hpp"

namespace geograph {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_into(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0)
    r += period;
  if (r >= period) // fmod of a tiny negative can round up to the period
    r = 0.0;
  return r;
}

} // namespace

GeoPoint geo_from_degrees(double lat_deg, double lng_deg) {
  return normalized({lat_deg * kPi / 180.0, lng_deg * kPi / 180.0});
}

double lat_degrees(const GeoPoint &p) { return p.lat * 180.0 / kPi; }
double lng_degrees(const GeoPoint &p) { return p.lng * 180.0 / kPi; }

GeoPoint normalized(GeoPoint p) {
  p.lat = std::clamp(p.lat, -kPi / 2.0, kPi / 2.0);
  if (p.lng <= -kPi || p.lng > kPi) {
    p.lng = wrap_into(p.lng + kPi, kTwoPi) - kPi;
    if (p.lng <= -kPi)
      p.lng = kPi; // boundary maps to +pi, keeping lng in (-pi, pi]
  }
  return p;
}

double normalize_heading(double heading) { return wrap_into(heading, kTwoPi); }

CameraPose make_camera_pose(GeoPoint position, double heading, double height) {
  return {normalized(position), normalize_heading(heading), height};
}

std::pair<double, double> enu_offset(const GeoPoint &p, const GeoPoint &ref) {
  double dlng = p.lng - ref.lng;
  if (dlng > kPi)
    dlng -= kTwoPi;
  else if (dlng <= -kPi)
    dlng += kTwoPi;
  double e = kEarthRadiusM * std::cos(ref.lat) * dlng;
  double n = kEarthRadiusM * (p.lat - ref.lat);
  return {e, n};
}

GeoPoint displace(const GeoPoint &origin, double east_m, double north_m) {
  GeoPoint out;
  out.lat = origin.lat + north_m / kEarthRadiusM;
  out.lng = origin.lng + east_m / (kEarthRadiusM * std::cos(origin.lat));
  return normalized(out);
}

EnuVector geo_to_enu(const GeoPoint &object, const CameraPose &camera) {
  auto [e, n] = enu_offset(object, camera.position);
  return {e, n, -camera.height};
}

PixelPoint enu_to_pixel(const EnuVector &v, const CameraPose &camera,
                        double width, double height) {
  double z = std::hypot(v.e, v.n);
  if (z == 0.0)
    throw DegenerateRayError("enu_to_pixel: object directly below camera");
  double azimuth = std::atan2(v.e, v.n); // compass bearing from camera
  double x = wrap_into((kPi + azimuth - camera.heading) * width / kTwoPi, width);
  double y = (kPi / 2.0 + std::atan2(camera.height, z)) * height / kPi;
  return {x, y};
}

bool below_horizon(double y, double height) { return y > height / 2.0; }

GeoPoint pixel_to_geo(const PixelPoint &p, const CameraPose &camera,
                      double width, double height) {
  if (!below_horizon(p.y, height))
    throw HorizonRayError("pixel_to_geo: ray at or above horizon row");
  double bearing = kTwoPi * p.x / width - kPi + camera.heading;
  double depression = kPi * p.y / height - kPi / 2.0;
  double z = camera.height / std::tan(depression);
  return displace(camera.position, z * std::sin(bearing),
                  z * std::cos(bearing));
}

double haversine_m(const GeoPoint &a, const GeoPoint &b) {
  double sin_dlat = std::sin((a.lat - b.lat) / 2.0);
  double sin_dlng = std::sin((a.lng - b.lng) / 2.0);
  double h = sin_dlat * sin_dlat +
             std::cos(a.lat) * std::cos(b.lat) * sin_dlng * sin_dlng;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

} // namespace geograph
