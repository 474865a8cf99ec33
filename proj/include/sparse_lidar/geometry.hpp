#pragma once

// Shared geometric types. Frame convention: x forward, y left, z up, meters.
// Clouds and boxes are expressed in the ego frame whose origin is on the
// ground directly below the sensor.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sparse_lidar
{

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Point3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::optional<int> ring; ///< laser plane index, absent when the source has none

    Eigen::Vector3d position() const { return {x, y, z}; }

    friend bool operator==(const Point3&, const Point3&) = default;
};

struct PointCloud
{
    std::vector<Point3> points;
    std::string frame_id = "lidar";
    double timestamp = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Plane {p : normal . p + offset = 0}, normal of unit length.
struct Plane3
{
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double offset = 0.0;

    double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
};

/// Infinite 2D line. The direction is unit length and canonical: x > 0, or x == 0 and y < 0,
/// so its angle lies in [-pi/2, pi/2).
struct Line2
{
    Eigen::Vector2d point = Eigen::Vector2d::Zero();
    Eigen::Vector2d direction = Eigen::Vector2d::UnitX();

    /// Builds a line with a normalized, canonical direction. Throws DegenerateError on a zero direction.
    static Line2 through(const Eigen::Vector2d& point, const Eigen::Vector2d& direction);

    Eigen::Vector2d normal() const { return {-direction.y(), direction.x()}; }
    double distance(const Eigen::Vector2d& p) const { return std::abs(normal().dot(p - point)); }
    double angle() const;
};

/// Box rotating about the ground normal only. `length` runs along `yaw`, `width` across it.
struct OrientedBox3
{
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double length = 0.0;
    double width = 0.0;
    double height = 0.0;
    double yaw = 0.0;
    bool heading_valid = false;
    bool height_is_lower_bound = false;

    /// Footprint corners in counter-clockwise order.
    std::array<Eigen::Vector2d, 4> footprint() const;
    /// Bottom four corners (CCW) followed by the top four.
    std::array<Eigen::Vector3d, 8> corners() const;
};

struct Pose2
{
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

/// Wraps to [-pi, pi). Throws DomainError for non-finite input.
double wrap_angle(double theta);

/// Wraps to [-pi/2, pi/2): the orientation of an undirected axis.
double wrap_half_turn(double theta);

/// Smallest rotation between two headings modulo pi, in [0, pi/2].
double heading_difference(double a, double b);

/// Distance from `p` to the box footprint, 0 when inside.
double footprint_distance(const OrientedBox3& box, const Eigen::Vector2d& p = Eigen::Vector2d::Zero());

/// Orthonormal frame on a ground plane. u follows the projection of ego +x, v = normal x u,
/// h is the signed height above the plane. The origin is the projection of the ego origin.
class GroundFrame
{
  public:
    explicit GroundFrame(const Plane3& ground);

    Eigen::Vector3d to_ground(const Eigen::Vector3d& p) const;
    Eigen::Vector3d from_ground(double u, double v, double h) const;
    Eigen::Vector2d project(const Eigen::Vector3d& p) const;

    const Eigen::Vector3d& u_axis() const { return u_; }
    const Eigen::Vector3d& v_axis() const { return v_; }
    const Eigen::Vector3d& normal() const { return n_; }

  private:
    Eigen::Vector3d origin_;
    Eigen::Vector3d u_;
    Eigen::Vector3d v_;
    Eigen::Vector3d n_;
};

} // namespace sparse_lidar
