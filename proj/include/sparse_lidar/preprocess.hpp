#pragma once

#include <vector>

#include "sparse_lidar/geometry.hpp"

namespace sparse_lidar
{

/// Knobs of the iterative lowest-point-representative ground fit.
struct GroundParams
{
    int num_lpr = 250;             ///< lowest points averaged into the seed height
    double seed_margin = 0.15;     ///< seeds lie at most this far above the seed height
    double dist_threshold = 0.20;  ///< ground membership distance to the plane
    int num_iterations = 3;
    double seed_range = 20.0;      ///< only points within this horizontal range seed the fit; <= 0 disables

    void validate() const;
};

struct RoiParams
{
    double max_height = 3.0;          ///< closed upper bound above ground
    double lateral_half_width = 20.0;
    double forward_min = -30.0;
    double forward_max = 30.0;

    void validate() const;
};

struct GroundSegmentation
{
    PointCloud nonground;
    PointCloud ground_points;
    Plane3 ground;
};

/// Least-squares plane through `points` (smallest principal direction of their covariance),
/// oriented so that normal.z >= 0. Throws FitError when the points are collinear or coincident.
Plane3 fit_plane_least_squares(const std::vector<Eigen::Vector3d>& points);

/// Splits a frame into ground and non-ground points. The returned plane has normal.z > 0 and every
/// ground point lies strictly within dist_threshold of it.
GroundSegmentation remove_ground(const PointCloud& cloud, const GroundParams& params = {});

/// Keeps points with height above ground in (0, max_height], |y| <= lateral_half_width and
/// x in [forward_min, forward_max]. Order is preserved.
PointCloud filter_by_roi(const PointCloud& cloud, const Plane3& ground, const RoiParams& params = {});

} // namespace sparse_lidar
