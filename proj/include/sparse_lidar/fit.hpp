#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sparse_lidar/geometry.hpp"

namespace sparse_lidar
{

struct RansacParams
{
    int max_iterations = 200;
    double inlier_tolerance = 0.05;
    int min_inliers = 5;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Counter-clockwise convex polygon without collinear vertices. One or two vertices
/// represent degenerate (point or segment) hulls.
struct HullPolygon
{
    std::vector<Eigen::Vector2d> vertices;

    std::size_t size() const { return vertices.size(); }
    bool contains(const Eigen::Vector2d& p, double tolerance = 1e-9) const;
    double area() const;
};

/// Andrew's monotone chain. Throws PreconditionError on empty input.
HullPolygon convex_hull(const std::vector<Eigen::Vector2d>& points);

struct LineFit
{
    Line2 line;
    std::vector<std::size_t> inliers;
};

/// Two-point RANSAC line fit followed by a total-least-squares refit on the consensus set.
/// When all point pairs fit in the iteration budget they are enumerated instead of sampled.
/// Throws DegenerateError if all points coincide, NoConsensusError below min_inliers.
LineFit ransac_line(const std::vector<Eigen::Vector2d>& points, const RansacParams& params);

/// Total-least-squares line through `points` (at least two distinct).
Line2 fit_line_least_squares(const std::vector<Eigen::Vector2d>& points);

struct VerticalPlaneFit
{
    Plane3 plane;                     ///< contains the ground normal; normal points toward the ego origin
    Line2 trace;                      ///< the plane's intersection with the ground, in the ground frame
    std::vector<std::size_t> inliers;
    bool side_facing = false;         ///< no candidate faced the ego +x axis within the allowed angle
};

/// Fits a plane that contains the ground normal, preferring faces whose normal is within
/// `max_normal_angle` of the ego +x axis.
VerticalPlaneFit fit_vertical_plane(const std::vector<Eigen::Vector3d>& points, const Plane3& ground,
                                    const RansacParams& params, double max_normal_angle = kPi / 4.0);

enum class RectangleSource
{
    two_sides,
    ransac_line
};

struct RectangleEstimate
{
    std::array<Eigen::Vector2d, 4> corners; ///< A, B, C observed, D = A + C - B
    double yaw = 0.0;                       ///< along the longer of AB, BC; in [-pi/2, pi/2)
    RectangleSource source = RectangleSource::two_sides;
};

/// Corner extrapolation for an L-shaped trace. A and C are the hull diameter, B the vertex
/// farthest from AC. Returns nullopt (one side visible) when the hull has fewer than 3 vertices,
/// either bbox side is <= min_side, or angle ABC is not within 90 deg +- `angle_tolerance`.
std::optional<RectangleEstimate> rectangle_from_hull(const HullPolygon& hull, double min_side,
                                                     double angle_tolerance = deg2rad(35.0));

} // namespace sparse_lidar
