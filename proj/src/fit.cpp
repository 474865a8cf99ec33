#include "sparse_lidar/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

void RansacParams::validate() const
{
    if (max_iterations < 1 || !(inlier_tolerance > 0.0) || min_inliers < 1)
    {
        throw ConfigError("ransac: max_iterations, inlier_tolerance and min_inliers must be positive");
    }
}

namespace
{

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

} // namespace

bool HullPolygon::contains(const Eigen::Vector2d& p, double tolerance) const
{
    if (vertices.empty())
    {
        return false;
    }
    if (vertices.size() == 1)
    {
        return (p - vertices[0]).norm() <= tolerance;
    }
    if (vertices.size() == 2)
    {
        return segment_distance(p, vertices[0], vertices[1]) <= tolerance;
    }
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
        const auto& a = vertices[i];
        const auto& b = vertices[(i + 1) % vertices.size()];
        const double len = (b - a).norm();
        if (cross(a, b, p) / len < -tolerance)
        {
            return false;
        }
    }
    return true;
}

double HullPolygon::area() const
{
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
        const auto& a = vertices[i];
        const auto& b = vertices[(i + 1) % vertices.size()];
        twice += a.x() * b.y() - a.y() * b.x();
    }
    return 0.5 * twice;
}

HullPolygon convex_hull(const std::vector<Eigen::Vector2d>& points)
{
    if (points.empty())
    {
        throw PreconditionError("convex_hull: empty input");
    }
    std::vector<Eigen::Vector2d> pts = points;
    const auto lex = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    };
    std::sort(pts.begin(), pts.end(), lex);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3)
    {
        return HullPolygon{pts};
    }

    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts)
    {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0)
        {
            --k;
        }
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it)
    {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0)
        {
            --k;
        }
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return HullPolygon{hull};
}

Line2 fit_line_least_squares(const std::vector<Eigen::Vector2d>& points)
{
    if (points.size() < 2)
    {
        throw DegenerateError("line fit needs at least 2 points");
    }
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points)
    {
        centroid += p;
    }
    centroid /= static_cast<double>(points.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : points)
    {
        const Eigen::Vector2d d = p - centroid;
        cov.noalias() += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
    if (!(solver.eigenvalues()(1) > 0.0))
    {
        throw DegenerateError("line fit: all points coincide");
    }
    return Line2::through(centroid, solver.eigenvectors().col(1));
}

namespace
{

struct Consensus
{
    std::size_t count = 0;
    double ssr = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> inliers;

    bool worse_than(std::size_t other_count, double other_ssr) const
    {
        return other_count > count || (other_count == count && other_ssr < ssr);
    }
};

struct SearchResult
{
    Consensus best;
    Consensus preferred; ///< best among lines satisfying the preference predicate
};

template <typename Prefer>
SearchResult consensus_search(const std::vector<Eigen::Vector2d>& points, const RansacParams& params, Prefer prefer)
{
    params.validate();
    const std::size_t n = points.size();
    if (n < 2)
    {
        throw PreconditionError("ransac: at least 2 points required");
    }
    const bool any_distinct = std::any_of(points.begin() + 1, points.end(),
                                          [&](const Eigen::Vector2d& p) { return p != points.front(); });
    if (!any_distinct)
    {
        throw DegenerateError("ransac: all points coincide");
    }

    SearchResult result;
    std::vector<std::size_t> scratch;
    scratch.reserve(n);
    const double tol = params.inlier_tolerance;

    const auto evaluate = [&](std::size_t i, std::size_t j) {
        if (points[i] == points[j])
        {
            return;
        }
        const Line2 line = Line2::through(points[i], points[j] - points[i]);
        const Eigen::Vector2d normal = line.normal();
        std::size_t count = 0;
        double ssr = 0.0;
        scratch.clear();
        for (std::size_t k = 0; k < n; ++k)
        {
            const double r = normal.dot(points[k] - line.point);
            if (std::abs(r) <= tol)
            {
                ++count;
                ssr += r * r;
                scratch.push_back(k);
            }
        }
        Consensus* slots[2] = {&result.best, prefer(line) ? &result.preferred : nullptr};
        for (Consensus* slot : slots)
        {
            if (slot != nullptr && slot->worse_than(count, ssr))
            {
                slot->count = count;
                slot->ssr = ssr;
                slot->inliers = scratch;
            }
        }
    };

    const auto iterations = static_cast<std::size_t>(params.max_iterations);
    const std::size_t pairs = n * (n - 1) / 2;
    if (pairs <= iterations)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = i + 1; j < n; ++j)
            {
                evaluate(i, j);
            }
        }
    }
    else
    {
        std::mt19937_64 rng(params.rng_seed);
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        std::uniform_int_distribution<std::size_t> second(0, n - 2);
        for (std::size_t it = 0; it < iterations; ++it)
        {
            const std::size_t i = first(rng);
            std::size_t j = second(rng);
            if (j >= i)
            {
                ++j;
            }
            evaluate(i, j);
        }
    }
    return result;
}

LineFit finish(const std::vector<Eigen::Vector2d>& points, const Consensus& consensus, const RansacParams& params)
{
    if (consensus.count < static_cast<std::size_t>(params.min_inliers))
    {
        throw NoConsensusError("ransac: best line has " + std::to_string(consensus.count) + " inliers, need " +
                               std::to_string(params.min_inliers));
    }
    std::vector<Eigen::Vector2d> members;
    members.reserve(consensus.inliers.size());
    for (const auto i : consensus.inliers)
    {
        members.push_back(points[i]);
    }
    return LineFit{fit_line_least_squares(members), consensus.inliers};
}

} // namespace

LineFit ransac_line(const std::vector<Eigen::Vector2d>& points, const RansacParams& params)
{
    const auto result = consensus_search(points, params, [](const Line2&) { return false; });
    return finish(points, result.best, params);
}

VerticalPlaneFit fit_vertical_plane(const std::vector<Eigen::Vector3d>& points, const Plane3& ground,
                                    const RansacParams& params, double max_normal_angle)
{
    const GroundFrame frame(ground);
    std::vector<Eigen::Vector2d> projected;
    projected.reserve(points.size());
    for (const auto& p : points)
    {
        projected.push_back(frame.project(p));
    }

    // Ego +x is the u axis of the ground frame, so the angle test only needs |normal.u|.
    const double min_cos = std::cos(max_normal_angle) - 1e-12;
    const auto result = consensus_search(projected, params,
                                         [min_cos](const Line2& line) { return std::abs(line.normal().x()) >= min_cos; });

    VerticalPlaneFit out;
    const bool use_preferred = result.preferred.count >= static_cast<std::size_t>(params.min_inliers);
    const LineFit fit = finish(projected, use_preferred ? result.preferred : result.best, params);
    out.side_facing = !use_preferred;
    out.trace = fit.line;
    out.inliers = fit.inliers;

    const Eigen::Vector2d n2 = fit.line.normal();
    Eigen::Vector3d normal = n2.x() * frame.u_axis() + n2.y() * frame.v_axis();
    const Eigen::Vector3d on_plane = frame.from_ground(fit.line.point.x(), fit.line.point.y(), 0.0);
    double offset = -normal.dot(on_plane);
    if (offset < 0.0)
    {
        normal = -normal;
        offset = -offset;
    }
    out.plane = Plane3{normal, offset};
    return out;
}

std::optional<RectangleEstimate> rectangle_from_hull(const HullPolygon& hull, double min_side, double angle_tolerance)
{
    const auto& v = hull.vertices;
    if (v.size() < 3)
    {
        return std::nullopt;
    }
    Eigen::Vector2d lo = v.front();
    Eigen::Vector2d hi = v.front();
    for (const auto& p : v)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    if (!(hi.x() - lo.x() > min_side) || !(hi.y() - lo.y() > min_side))
    {
        return std::nullopt;
    }

    // A, C: the hull diameter. For a right-angled trace this is the hypotenuse.
    std::size_t ia = 0;
    std::size_t ic = 1;
    double diameter = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        for (std::size_t j = i + 1; j < v.size(); ++j)
        {
            const double d = (v[i] - v[j]).squaredNorm();
            if (d > diameter)
            {
                diameter = d;
                ia = i;
                ic = j;
            }
        }
    }

    // B: the corner of the L is the vertex farthest from the diagonal AC.
    const Eigen::Vector2d diag = (v[ic] - v[ia]).normalized();
    std::optional<std::size_t> ib;
    double best_offset = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
    {
        if (k == ia || k == ic)
        {
            continue;
        }
        const Eigen::Vector2d w = v[k] - v[ia];
        const double offset = std::abs(diag.x() * w.y() - diag.y() * w.x());
        if (offset > best_offset)
        {
            best_offset = offset;
            ib = k;
        }
    }
    if (!ib)
    {
        return std::nullopt;
    }
    const Eigen::Vector2d a = v[ia];
    const Eigen::Vector2d b = v[*ib];
    const Eigen::Vector2d c = v[ic];
    const Eigen::Vector2d ab = b - a;
    const Eigen::Vector2d bc = c - b;
    const double corner_angle = std::atan2(std::abs(ab.x() * bc.y() - ab.y() * bc.x()), -ab.dot(bc));
    if (std::abs(corner_angle - kPi / 2.0) > angle_tolerance)
    {
        return std::nullopt;
    }
    const double t1 = std::atan2(ab.y(), ab.x());
    const double t2 = std::atan2(bc.y(), bc.x()) + kPi / 2.0;
    // Mean of undirected axes: average on the doubled-angle circle.
    double yaw = 0.5 * std::atan2(std::sin(2.0 * t1) + std::sin(2.0 * t2), std::cos(2.0 * t1) + std::cos(2.0 * t2));
    if (bc.norm() > ab.norm())
    {
        yaw += kPi / 2.0;
    }

    RectangleEstimate out;
    out.corners = {a, b, c, a + c - b};
    out.yaw = wrap_half_turn(yaw);
    out.source = RectangleSource::two_sides;
    return out;
}

} // namespace sparse_lidar
