#include <doctest.h>

#include <random>
#include <set>

#include "sparse_lidar/errors.hpp"
#include "sparse_lidar/fit.hpp"
#include "support/oracles.hpp"

using namespace sparse_lidar;

namespace
{

std::set<std::pair<double, double>> vertex_set(const HullPolygon& hull)
{
    std::set<std::pair<double, double>> out;
    for (const auto& v : hull.vertices)
    {
        out.insert({v.x(), v.y()});
    }
    return out;
}

// Dense samples along two perpendicular sides of a rectangle meeting at its corner nearest the origin.
std::vector<Eigen::Vector2d> l_trace(const Eigen::Vector2d& center, double length, double width, double yaw, int n)
{
    const Eigen::Vector2d along(std::cos(yaw), std::sin(yaw));
    const Eigen::Vector2d across(-along.y(), along.x());
    std::array<Eigen::Vector2d, 4> corners;
    int k = 0;
    for (const double su : {-1.0, 1.0})
    {
        for (const double sv : {-1.0, 1.0})
        {
            corners[k++] = center + su * 0.5 * length * along + sv * 0.5 * width * across;
        }
    }
    const auto nearest = *std::min_element(corners.begin(), corners.end(),
                                           [](const auto& a, const auto& b) { return a.norm() < b.norm(); });
    const Eigen::Vector2d rel = nearest - center;
    const double su = rel.dot(along) > 0 ? 1.0 : -1.0;
    const double sv = rel.dot(across) > 0 ? 1.0 : -1.0;
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i <= n; ++i)
    {
        const double s = static_cast<double>(i) / n;
        pts.push_back(nearest - su * s * length * along);
        pts.push_back(nearest - sv * s * width * across);
    }
    return pts;
}

} // namespace

TEST_CASE("hull of a square with interior and edge points")
{
    const std::vector<Eigen::Vector2d> pts = {{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 0}, {2, 1}, {0, 0}};
    const HullPolygon hull = convex_hull(pts);
    REQUIRE(hull.size() == 4);
    CHECK(hull.area() == doctest::Approx(4.0));
    CHECK(hull.contains({1.0, 1.0}));
    CHECK(hull.contains({2.0, 1.0}));
    CHECK_FALSE(hull.contains({2.1, 1.0}));
    CHECK(convex_hull({{1, 1}, {1, 1}}).size() == 1);
    CHECK(convex_hull({{0, 0}, {1, 1}, {2, 2}}).size() == 2);
    CHECK_THROWS_AS(convex_hull({}), PreconditionError);
}

TEST_SUITE("convex hull property")
{
    TEST_CASE("hull matches the brute-force oracle on 500 random sets")
    {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 500; ++trial)
        {
            const int n = 1 + static_cast<int>(rng() % 40);
            // Small integer lattice: plenty of duplicates and collinear triples.
            std::uniform_int_distribution<int> coord(-6, 6);
            std::vector<Eigen::Vector2d> pts;
            for (int i = 0; i < n; ++i)
            {
                pts.emplace_back(coord(rng), coord(rng));
            }
            const HullPolygon hull = convex_hull(pts);
            CHECK(vertex_set(hull) == oracle::hull_vertices(pts));
            if (hull.size() >= 3)
            {
                for (std::size_t i = 0; i < hull.size(); ++i)
                {
                    const Eigen::Vector2d a = hull.vertices[i];
                    const Eigen::Vector2d b = hull.vertices[(i + 1) % hull.size()];
                    const Eigen::Vector2d c = hull.vertices[(i + 2) % hull.size()];
                    CHECK((b - a).x() * (c - b).y() - (b - a).y() * (c - b).x() > 0.0);
                }
                for (const auto& p : pts)
                {
                    CHECK(hull.contains(p));
                }
            }
        }
    }
}

TEST_SUITE("ransac property")
{
    TEST_CASE("exact recovery on clean data with outliers")
    {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int trial = 0; trial < 100; ++trial)
        {
            const double angle = kPi * unit(rng);
            const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
            const Eigen::Vector2d origin(5.0 * unit(rng), 5.0 * unit(rng));
            std::vector<Eigen::Vector2d> pts;
            for (int i = 0; i < 30; ++i)
            {
                pts.push_back(origin + 4.0 * unit(rng) * dir);
            }
            for (int i = 0; i < 10; ++i)
            {
                pts.push_back(origin + Eigen::Vector2d(5.0 * unit(rng), 5.0 * unit(rng)) +
                              0.5 * Eigen::Vector2d(-dir.y(), dir.x()));
            }
            RansacParams params;
            params.inlier_tolerance = 1e-6;
            params.rng_seed = static_cast<std::uint64_t>(trial);
            const LineFit fit = ransac_line(pts, params);
            for (int i = 0; i < 30; ++i)
            {
                CHECK(fit.line.distance(pts[i]) < 1e-9);
            }
            CHECK(heading_difference(fit.line.angle(), angle) < 1e-9);
            CHECK(fit.line.angle() >= -kPi / 2.0);
            CHECK(fit.line.angle() < kPi / 2.0);
            CHECK(fit.inliers.size() >= 30);
        }
    }

    TEST_CASE("fixed seed gives identical results")
    {
        std::mt19937_64 rng(32);
        std::normal_distribution<double> noise(0.0, 0.3);
        std::vector<Eigen::Vector2d> pts;
        for (int i = 0; i < 200; ++i)
        {
            pts.emplace_back(0.05 * i, 0.5 * 0.05 * i + noise(rng));
        }
        RansacParams params;
        params.rng_seed = 99;
        const LineFit a = ransac_line(pts, params);
        const LineFit b = ransac_line(pts, params);
        CHECK(a.inliers == b.inliers);
        CHECK(a.line.point == b.line.point);
        CHECK(a.line.direction == b.line.direction);
    }

    TEST_CASE("exhaustive mode finds the best pair consensus")
    {
        std::mt19937_64 rng(33);
        std::uniform_real_distribution<double> coord(0.0, 3.0);
        for (int trial = 0; trial < 100; ++trial)
        {
            std::vector<Eigen::Vector2d> pts;
            for (int i = 0; i < 18; ++i)
            {
                pts.emplace_back(coord(rng), coord(rng));
            }
            RansacParams params;
            params.max_iterations = 200; // 18 * 17 / 2 = 153 pairs, enumerated
            params.inlier_tolerance = 0.1;
            params.min_inliers = 2;
            const LineFit fit = ransac_line(pts, params);
            CHECK(fit.inliers.size() == oracle::best_pair_consensus(pts, 0.1).count);
        }
    }
}

TEST_CASE("ransac error cases")
{
    RansacParams params;
    CHECK_THROWS_AS(ransac_line({{1, 1}, {1, 1}, {1, 1}}, params), DegenerateError);
    CHECK_THROWS_AS(ransac_line({{0, 0}, {1, 0}, {0, 1}}, params), NoConsensusError);
    CHECK_THROWS_AS(ransac_line({{0, 0}}, params), PreconditionError);
    params.inlier_tolerance = -1.0;
    CHECK_THROWS_AS(ransac_line({{0, 0}, {1, 0}}, params), ConfigError);
}

TEST_CASE("vertical plane fit prefers the face toward the sensor")
{
    // Rear face x = 10 (y in [-1, 1]) and a longer side face y = 1 (x in [10, 14.5]).
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i <= 20; ++i)
    {
        for (const double z : {0.5, 1.0, 1.5})
        {
            pts.emplace_back(10.0, -1.0 + 0.1 * i, z);
        }
    }
    for (int i = 0; i <= 45; ++i)
    {
        pts.emplace_back(10.0 + 0.1 * i, 1.0, 1.0);
    }
    RansacParams params;
    params.min_inliers = 5;
    const VerticalPlaneFit fit = fit_vertical_plane(pts, Plane3{}, params);
    CHECK_FALSE(fit.side_facing);
    CHECK(fit.plane.normal.isApprox(Eigen::Vector3d(-1.0, 0.0, 0.0), 1e-9));
    CHECK(fit.plane.offset == doctest::Approx(10.0));
    CHECK(fit.plane.signed_distance(Eigen::Vector3d::Zero()) > 0.0);

    // Without the front face only the side remains.
    std::vector<Eigen::Vector3d> side(pts.begin() + 63, pts.end());
    const VerticalPlaneFit s = fit_vertical_plane(side, Plane3{}, params);
    CHECK(s.side_facing);
    CHECK(std::abs(s.plane.normal.y()) == doctest::Approx(1.0));
}

TEST_CASE("rectangle from an exact L trace")
{
    const auto pts = l_trace({10.0, 2.0}, 4.5, 2.0, deg2rad(30.0), 40);
    const auto rect = rectangle_from_hull(convex_hull(pts), 1.2);
    REQUIRE(rect.has_value());
    CHECK(rect->source == RectangleSource::two_sides);
    CHECK(heading_difference(rect->yaw, deg2rad(30.0)) < 1e-9);
    const Eigen::Vector2d centre = 0.5 * (rect->corners[0] + rect->corners[2]);
    CHECK((centre - Eigen::Vector2d(10.0, 2.0)).norm() < 1e-9);
}

TEST_CASE("rectangle rejects one-sided and skewed hulls")
{
    std::vector<Eigen::Vector2d> segment;
    for (int i = 0; i <= 40; ++i)
    {
        segment.emplace_back(10.0, -2.0 + 0.1 * i);
    }
    CHECK_FALSE(rectangle_from_hull(convex_hull(segment), 1.2).has_value());
    // Broadside trace: bbox narrower than the visible-side threshold.
    segment.emplace_back(10.5, 0.0);
    CHECK_FALSE(rectangle_from_hull(convex_hull(segment), 1.2).has_value());
    // Corner of 45 degrees.
    const HullPolygon skew = convex_hull({{0, 0}, {4, 0}, {6, 2}, {3, 1}});
    CHECK_FALSE(rectangle_from_hull(skew, 1.2, deg2rad(20.0)).has_value());
}

TEST_SUITE("rectangle property")
{
    TEST_CASE("parallelogram identity and yaw bound on 500 random rectangles")
    {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> jitter(0.0, 0.01);
        double worst = 0.0;
        int found = 0;
        for (int trial = 0; trial < 500; ++trial)
        {
            const double length = 3.5 + 2.0 * unit(rng);
            const double width = 1.6 + 0.6 * unit(rng);
            const double yaw = kPi * (unit(rng) - 0.5);
            const double range = 6.0 + 14.0 * unit(rng);
            const double bearing = deg2rad(-60.0 + 120.0 * unit(rng));
            auto pts = l_trace(range * Eigen::Vector2d(std::cos(bearing), std::sin(bearing)), length, width, yaw, 60);
            for (auto& p : pts)
            {
                p += Eigen::Vector2d(jitter(rng), jitter(rng));
            }
            const HullPolygon hull = convex_hull(pts);
            const auto rect = rectangle_from_hull(hull, 0.5);
            if (!rect)
            {
                continue;
            }
            ++found;
            const auto& c = rect->corners;
            CHECK((c[3] - (c[0] + c[2] - c[1])).norm() == 0.0);
            CHECK(rect->yaw >= -kPi / 2.0);
            CHECK(rect->yaw < kPi / 2.0);
            worst = std::max(worst, heading_difference(rect->yaw, yaw));
        }
        // Traces whose bbox collapses (side nearly aligned with an axis) legitimately return nothing.
        CHECK(found >= 400);
        CHECK(rad2deg(worst) < 3.0);
    }
}
