#include "sparse_lidar/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

Line2 Line2::through(const Eigen::Vector2d& point, const Eigen::Vector2d& direction)
{
    const double norm = direction.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
    {
        throw DegenerateError("line direction must be non-zero");
    }
    Eigen::Vector2d d = direction / norm;
    if (d.x() < 0.0 || (d.x() == 0.0 && d.y() > 0.0))
    {
        d = -d;
    }
    return Line2{point, d};
}

double Line2::angle() const { return std::atan2(direction.y(), direction.x()); }

std::array<Eigen::Vector2d, 4> OrientedBox3::footprint() const
{
    const Eigen::Vector2d c(center.x(), center.y());
    const Eigen::Vector2d along(std::cos(yaw), std::sin(yaw));
    const Eigen::Vector2d across(-along.y(), along.x());
    const Eigen::Vector2d a = 0.5 * length * along;
    const Eigen::Vector2d b = 0.5 * width * across;
    return {c - a - b, c + a - b, c + a + b, c - a + b};
}

std::array<Eigen::Vector3d, 8> OrientedBox3::corners() const
{
    const auto fp = footprint();
    const double z0 = center.z() - 0.5 * height;
    const double z1 = center.z() + 0.5 * height;
    std::array<Eigen::Vector3d, 8> out;
    for (std::size_t i = 0; i < 4; ++i)
    {
        out[i] = {fp[i].x(), fp[i].y(), z0};
        out[i + 4] = {fp[i].x(), fp[i].y(), z1};
    }
    return out;
}

double wrap_angle(double theta)
{
    if (!std::isfinite(theta))
    {
        throw DomainError("wrap_angle: non-finite angle");
    }
    constexpr double two_pi = 2.0 * kPi;
    double r = std::fmod(theta + kPi, two_pi);
    if (r < 0.0)
    {
        r += two_pi;
    }
    if (r >= two_pi)
    {
        r -= two_pi;
    }
    return r - kPi;
}

double wrap_half_turn(double theta) { return 0.5 * wrap_angle(2.0 * theta); }

double heading_difference(double a, double b)
{
    if (!std::isfinite(a) || !std::isfinite(b))
    {
        throw DomainError("heading_difference: non-finite angle");
    }
    return 0.5 * std::abs(wrap_angle(2.0 * (a - b)));
}

double footprint_distance(const OrientedBox3& box, const Eigen::Vector2d& p)
{
    const Eigen::Vector2d along(std::cos(box.yaw), std::sin(box.yaw));
    const Eigen::Vector2d across(-along.y(), along.x());
    const Eigen::Vector2d d = p - Eigen::Vector2d(box.center.x(), box.center.y());
    const double du = std::max(std::abs(d.dot(along)) - 0.5 * box.length, 0.0);
    const double dv = std::max(std::abs(d.dot(across)) - 0.5 * box.width, 0.0);
    return std::hypot(du, dv);
}

GroundFrame::GroundFrame(const Plane3& ground) : n_(ground.normal.normalized())
{
    origin_ = -ground.offset * n_;
    Eigen::Vector3d x = Eigen::Vector3d::UnitX() - n_.x() * n_;
    if (x.norm() < 1e-9)
    {
        throw DomainError("ground normal is parallel to the ego x axis");
    }
    u_ = x.normalized();
    v_ = n_.cross(u_);
}

Eigen::Vector3d GroundFrame::to_ground(const Eigen::Vector3d& p) const
{
    const Eigen::Vector3d d = p - origin_;
    return {d.dot(u_), d.dot(v_), d.dot(n_)};
}

Eigen::Vector3d GroundFrame::from_ground(double u, double v, double h) const
{
    return origin_ + u * u_ + v * v_ + h * n_;
}

Eigen::Vector2d GroundFrame::project(const Eigen::Vector3d& p) const
{
    const Eigen::Vector3d d = p - origin_;
    return {d.dot(u_), d.dot(v_)};
}

} // namespace sparse_lidar
