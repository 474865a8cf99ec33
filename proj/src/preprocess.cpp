#include "sparse_lidar/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

void GroundParams::validate() const
{
    if (num_lpr <= 0 || !(seed_margin > 0.0) || !(dist_threshold > 0.0) || num_iterations < 1)
    {
        throw ConfigError("ground parameters must be positive and num_iterations >= 1");
    }
}

void RoiParams::validate() const
{
    if (!(max_height > 0.0) || !(lateral_half_width > 0.0) || !(forward_min < forward_max))
    {
        throw ConfigError("roi: max_height and lateral_half_width must be positive, forward_min < forward_max");
    }
}

Plane3 fit_plane_least_squares(const std::vector<Eigen::Vector3d>& points)
{
    if (points.size() < 3)
    {
        throw FitError("plane fit needs at least 3 points");
    }
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : points)
    {
        centroid += p;
    }
    centroid /= static_cast<double>(points.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points)
    {
        const Eigen::Vector3d d = p - centroid;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d ev = solver.eigenvalues(); // ascending
    // Second eigenvalue ~0 means the spread is one-dimensional: no unique plane.
    if (!(ev(1) > 1e-12 * std::max(ev(2), 1.0)))
    {
        throw FitError("plane fit: points are collinear or coincident");
    }
    Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
    if (normal.z() < 0.0)
    {
        normal = -normal;
    }
    return Plane3{normal, -normal.dot(centroid)};
}

GroundSegmentation remove_ground(const PointCloud& cloud, const GroundParams& params)
{
    params.validate();
    const auto n = cloud.points.size();
    if (n < static_cast<std::size_t>(params.num_lpr))
    {
        throw PreconditionError("remove_ground: cloud has " + std::to_string(n) + " points, num_lpr is " +
                                std::to_string(params.num_lpr));
    }

    // Seeding is restricted to the near field where a sparse sensor samples the ground densely.
    std::vector<std::size_t> candidates;
    candidates.reserve(n);
    if (params.seed_range > 0.0)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto& p = cloud.points[i];
            if (std::hypot(p.x, p.y) <= params.seed_range)
            {
                candidates.push_back(i);
            }
        }
    }
    if (candidates.size() < static_cast<std::size_t>(params.num_lpr))
    {
        candidates.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            candidates[i] = i;
        }
    }

    std::vector<double> heights;
    heights.reserve(candidates.size());
    for (const auto i : candidates)
    {
        heights.push_back(cloud.points[i].z);
    }
    const auto lpr_end = heights.begin() + params.num_lpr;
    std::nth_element(heights.begin(), lpr_end - 1, heights.end());
    std::sort(heights.begin(), lpr_end);
    double lpr = 0.0;
    for (auto it = heights.begin(); it != lpr_end; ++it)
    {
        lpr += *it;
    }
    lpr /= static_cast<double>(params.num_lpr);

    std::vector<Eigen::Vector3d> members;
    for (const auto i : candidates)
    {
        if (cloud.points[i].z <= lpr + params.seed_margin)
        {
            members.push_back(cloud.points[i].position());
        }
    }

    Plane3 plane;
    std::vector<char> is_ground(n, 0);
    for (int iter = 0; iter < params.num_iterations; ++iter)
    {
        plane = fit_plane_least_squares(members);
        if (!(plane.normal.z() > 1e-6))
        {
            throw FitError("remove_ground: fitted plane is vertical");
        }
        members.clear();
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto p = cloud.points[i].position();
            is_ground[i] = std::abs(plane.signed_distance(p)) < params.dist_threshold ? 1 : 0;
            if (is_ground[i])
            {
                members.push_back(p);
            }
        }
        if (iter + 1 < params.num_iterations && members.size() < 3)
        {
            throw FitError("remove_ground: segmentation left fewer than 3 ground points");
        }
    }

    GroundSegmentation out;
    out.ground = plane;
    out.nonground.frame_id = out.ground_points.frame_id = cloud.frame_id;
    out.nonground.timestamp = out.ground_points.timestamp = cloud.timestamp;
    for (std::size_t i = 0; i < n; ++i)
    {
        (is_ground[i] ? out.ground_points : out.nonground).points.push_back(cloud.points[i]);
    }
    return out;
}

PointCloud filter_by_roi(const PointCloud& cloud, const Plane3& ground, const RoiParams& params)
{
    PointCloud out;
    out.frame_id = cloud.frame_id;
    out.timestamp = cloud.timestamp;
    for (const auto& p : cloud.points)
    {
        const double h = ground.signed_distance(p.position());
        if (h > 0.0 && h <= params.max_height && std::abs(p.y) <= params.lateral_half_width &&
            p.x >= params.forward_min && p.x <= params.forward_max)
        {
            out.points.push_back(p);
        }
    }
    return out;
}

} // namespace sparse_lidar
