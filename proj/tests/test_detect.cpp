#include <doctest.h>

#include <random>

#include "sparse_lidar/errors.hpp"
#include "sparse_lidar/eval.hpp"
#include "support/scenes.hpp"

using namespace sparse_lidar;
using testing_support::lidar16;
using testing_support::single_obstacle;

namespace
{

// Points on the surface of an axis-aligned box, 0.1 m apart.
PointCloud box_shell(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi)
{
    PointCloud cloud;
    const double step = 0.1;
    for (double x = lo.x(); x <= hi.x() + 1e-9; x += step)
    {
        for (double y = lo.y(); y <= hi.y() + 1e-9; y += step)
        {
            for (double z = lo.z(); z <= hi.z() + 1e-9; z += step)
            {
                const bool surface = std::abs(x - lo.x()) < 1e-9 || std::abs(x - hi.x()) < 1e-9 ||
                                     std::abs(y - lo.y()) < 1e-9 || std::abs(y - hi.y()) < 1e-9 ||
                                     std::abs(z - lo.z()) < 1e-9 || std::abs(z - hi.z()) < 1e-9;
                if (surface)
                {
                    cloud.points.push_back({x, y, z, 0});
                }
            }
        }
    }
    // Snap the far bounds exactly, the loop may stop a rounding step short.
    cloud.points.push_back({lo.x(), lo.y(), lo.z(), 0});
    cloud.points.push_back({hi.x(), hi.y(), hi.z(), 0});
    return cloud;
}

PointCloud rotated(const PointCloud& cloud, double yaw, const Eigen::Vector2d& pivot)
{
    PointCloud out = cloud;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    for (auto& p : out.points)
    {
        const double dx = p.x - pivot.x();
        const double dy = p.y - pivot.y();
        p.x = pivot.x() + c * dx - s * dy;
        p.y = pivot.y() + s * dx + c * dy;
    }
    return out;
}

PointCloud simulate(const Scene& scene, bool eight, double sigma = 0.0, std::uint64_t seed = 3)
{
    const PointCloud cloud = raycast_frame(scene, lidar16(sigma), 0.0, seed).cloud;
    return eight ? decimate_planes(cloud, ring_predicate(RingSelection::even)) : cloud;
}

double center_error(const Detection& d, const ObstacleTruth& truth)
{
    return (d.box.center.head<2>() - truth.box.center.head<2>()).norm();
}

bool same_box(const OrientedBox3& a, const OrientedBox3& b)
{
    return a.center == b.center && a.length == b.length && a.width == b.width && a.height == b.height &&
           a.yaw == b.yaw && a.heading_valid == b.heading_valid && a.height_is_lower_bound == b.height_is_lower_bound;
}

} // namespace

TEST_CASE("mode and provenance names")
{
    for (const auto m : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
    {
        CHECK(parse_detector_mode(to_string(m)) == m);
    }
    for (const auto p : {Provenance::plane_fit, Provenance::rectangle, Provenance::ransac_line, Provenance::no_heading})
    {
        CHECK(parse_provenance(to_string(p)) == p);
    }
    CHECK_THROWS_AS(parse_detector_mode("four_plane"), ConfigError);
}

TEST_CASE("pipeline defaults")
{
    const auto p16 = PipelineConfig::defaults(DetectorMode::sixteen_plane);
    const auto p8 = PipelineConfig::defaults(DetectorMode::eight_plane);
    CHECK(p16.grid.cell_size == 0.20);
    CHECK(p8.grid.cell_size == 0.05);
    CHECK(p8.grid.occupancy_threshold == 1);
    CHECK(p16.crop_margin == 0.10);
    CHECK(p8.crop_margin == 0.10);
    CHECK(p8.heading.visible_side_min == 1.2);
    p16.validate();
    p8.validate();
    auto bad = p16;
    bad.crop_margin = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("crop with zero margin returns exactly the binned points")
{
    GridConfig grid;
    PointCloud cloud;
    cloud.points = {{0.05, 0.05, 1.0}, {0.19, 0.01, 0.5}, {0.2, 0.05, 1.0}, {0.05, -0.01, 1.0}, {0.6, 0.05, 1.0}};
    Cluster cluster;
    cluster.cells = {{100, 150}};
    cluster.bbox = {100, 100, 150, 150};
    const PointCloud exact = crop_cloud(cloud, cluster, Plane3{}, grid, 0.0);
    REQUIRE(exact.size() == 2);
    CHECK(exact.points[0] == cloud.points[0]);
    CHECK(exact.points[1] == cloud.points[1]);

    const PointCloud wide = crop_cloud(cloud, cluster, Plane3{}, grid, 0.5);
    CHECK(wide.size() == 5);
    CHECK_THROWS_AS(crop_cloud(cloud, Cluster{}, Plane3{}, grid, 0.0), PreconditionError);
}

TEST_CASE("box from plane on a box shell")
{
    const PointCloud shell = box_shell({5.5, -1.0, 0.0}, {10.0, 1.0, 2.2});
    const Plane3 face{Eigen::Vector3d(-1.0, 0.0, 0.0), 10.0};
    const OrientedBox3 box = box_from_plane(shell, face, Plane3{}, 0.05);
    CHECK((box.center - Eigen::Vector3d(10.0 - 4.5 / 2.0, 0.0, 1.1)).norm() < 1e-6);
    CHECK(box.length == doctest::Approx(4.5).epsilon(1e-6));
    CHECK(box.width == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(box.height == doctest::Approx(2.2).epsilon(1e-6));
    CHECK(heading_difference(box.yaw, 0.0) < 1e-9);
    CHECK(box.heading_valid);
    CHECK_FALSE(box.height_is_lower_bound);

    const double yaw = deg2rad(20.0);
    const PointCloud turned = rotated(shell, yaw, {7.75, 0.0});
    const Eigen::Vector3d n(-std::cos(yaw), -std::sin(yaw), 0.0);
    const Eigen::Vector3d on_face(7.75 + 2.25 * std::cos(yaw), 2.25 * std::sin(yaw), 0.0);
    const OrientedBox3 t = box_from_plane(turned, Plane3{n, -n.dot(on_face)}, Plane3{}, 0.05);
    CHECK(rad2deg(heading_difference(t.yaw, yaw)) < 0.5);
    CHECK(t.length == doctest::Approx(4.5).epsilon(1e-6));

    PointCloud single;
    single.points = {{10.0, 0.0, 1.0, 0}};
    const OrientedBox3 s = box_from_plane(single, face, Plane3{}, 0.2);
    CHECK(s.length == doctest::Approx(0.2));
    CHECK(s.width == doctest::Approx(0.2));
    CHECK(s.height == doctest::Approx(0.2));
    CHECK_THROWS_AS(box_from_plane(PointCloud{}, face, Plane3{}, 0.2), PreconditionError);
}

TEST_CASE("box from heading")
{
    PointCloud ped;
    ped.points = {{6.0, 2.0, 0.3, 0}, {6.3, 2.2, 1.2, 1}, {6.1, 2.35, 1.6, 2}};
    const OrientedBox3 a = box_from_heading(ped, std::nullopt, Plane3{}, 0.05);
    CHECK_FALSE(a.heading_valid);
    CHECK(a.yaw == 0.0);
    CHECK(a.length == doctest::Approx(0.3));
    CHECK(a.width == doctest::Approx(0.35));
    CHECK(a.height == doctest::Approx(1.6));
    CHECK(a.height_is_lower_bound);

    // One ring crossing a van at 0.8 m.
    PointCloud ring;
    for (int i = 0; i <= 20; ++i)
    {
        ring.points.push_back({10.0, -1.0 + 0.1 * i, 0.8, 4});
    }
    const OrientedBox3 r = box_from_heading(ring, 0.0, Plane3{}, 0.05);
    CHECK(r.height == doctest::Approx(0.8));
    CHECK(r.height_is_lower_bound);
    CHECK(r.heading_valid);

    const OrientedBox3 f = box_from_heading(ring, kPi, Plane3{}, 0.05);
    auto fa = r.footprint();
    auto fb = f.footprint();
    for (const auto& p : fa)
    {
        const bool present = std::any_of(fb.begin(), fb.end(), [&](const auto& q) { return (p - q).norm() < 1e-9; });
        CHECK(present);
    }
    CHECK_THROWS_AS(box_from_heading(PointCloud{}, 0.0, Plane3{}, 0.05), PreconditionError);
}

TEST_CASE("sixteen-plane detector on simulated scenes")
{
    const auto cfg = PipelineConfig::defaults(DetectorMode::sixteen_plane);

    SUBCASE("van broadside at 10 m")
    {
        const Scene scene = single_obstacle(10.0, 0.0, kPi / 2.0);
        const DetectionFrame det = detect_16(simulate(scene, false), cfg);
        const auto truth = ground_truth_at(scene, 0.0);
        REQUIRE(det.detections.size() == 1);
        CHECK(center_error(det.detections[0], truth.obstacles[0]) < 0.30);
        CHECK(rad2deg(heading_difference(det.detections[0].box.yaw, truth.obstacles[0].rel_heading)) < 2.0);
        CHECK(det.detections[0].provenance == Provenance::plane_fit);
    }

    SUBCASE("ground only")
    {
        Scene scene = single_obstacle(10.0, 0.0, 0.0);
        scene.obstacles.clear();
        CHECK(detect_16(simulate(scene, false, 0.01), cfg).detections.empty());
        CHECK(detect_16(PointCloud{}, cfg).detections.empty());
    }

    SUBCASE("two vans 5 m apart")
    {
        Scene scene = single_obstacle(10.0, 3.5, 0.0);
        Scene other = single_obstacle(10.0, -3.5, 0.0);
        other.obstacles[0].id = 1;
        scene.obstacles.push_back(other.obstacles[0]);
        const DetectionFrame det = detect_16(simulate(scene, false, 0.01), cfg);
        CHECK(det.detections.size() == 2);
        const auto pairs = match_detections(ground_truth_at(scene, 0.0), det, 1.0);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].detection_index != pairs[1].detection_index);
    }
}

TEST_CASE("eight-plane detector on simulated scenes")
{
    const auto cfg = PipelineConfig::defaults(DetectorMode::eight_plane);

    SUBCASE("van at 45 deg shows two sides")
    {
        const Scene scene = single_obstacle(10.0, 0.0, kPi / 4.0);
        const DetectionFrame det = detect_8(simulate(scene, true, 0.01), cfg);
        REQUIRE(det.detections.size() == 1);
        CHECK(det.detections[0].provenance == Provenance::rectangle);
        CHECK(rad2deg(heading_difference(det.detections[0].box.yaw, kPi / 4.0)) < 3.0);
        CHECK(det.detections[0].box.height_is_lower_bound);
    }

    SUBCASE("van broadside shows one side")
    {
        const Scene scene = single_obstacle(10.0, 0.0, kPi / 2.0);
        const DetectionFrame det = detect_8(simulate(scene, true, 0.01), cfg);
        REQUIRE(det.detections.size() == 1);
        CHECK(det.detections[0].provenance == Provenance::ransac_line);
        CHECK(rad2deg(heading_difference(det.detections[0].box.yaw, kPi / 2.0)) < 4.0);
    }

    SUBCASE("pedestrian gets no heading")
    {
        const Scene scene = single_obstacle(6.0, 2.0, 0.0, 0.4, 0.4, 1.7, ObstacleClass::pedestrian);
        const DetectionFrame det = detect_8(simulate(scene, true, 0.01), cfg);
        REQUIRE(det.detections.size() == 1);
        CHECK_FALSE(det.detections[0].box.heading_valid);
        CHECK(det.detections[0].provenance == Provenance::no_heading);
        CHECK(det.detections[0].box.yaw == 0.0);
    }
}

TEST_SUITE("detector property")
{
    TEST_CASE("detection is deterministic")
    {
        const Scene scene = single_obstacle(12.0, -2.0, 0.4);
        const PointCloud cloud = simulate(scene, false, 0.01);
        for (const auto mode : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
        {
            const auto cfg = PipelineConfig::defaults(mode);
            const PointCloud input =
                mode == DetectorMode::eight_plane ? decimate_planes(cloud, ring_predicate(RingSelection::even)) : cloud;
            const DetectionFrame a = detect(input, cfg);
            const DetectionFrame b = detect(input, cfg);
            REQUIRE(a.detections.size() == b.detections.size());
            for (std::size_t i = 0; i < a.detections.size(); ++i)
            {
                CHECK(same_box(a.detections[i].box, b.detections[i].box));
                CHECK(a.detections[i].provenance == b.detections[i].provenance);
            }
        }
    }

    TEST_CASE("a degenerate extra cluster leaves other detections untouched")
    {
        Scene scene = single_obstacle(12.0, 4.0, 0.3);
        Scene other = single_obstacle(9.0, -5.0, 1.2);
        other.obstacles[0].id = 1;
        scene.obstacles.push_back(other.obstacles[0]);
        const PointCloud cloud = simulate(scene, false, 0.01);
        for (const auto mode : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
        {
            const auto cfg = PipelineConfig::defaults(mode);
            const PointCloud base =
                mode == DetectorMode::eight_plane ? decimate_planes(cloud, ring_predicate(RingSelection::even)) : cloud;
            PointCloud injected = base;
            injected.points.push_back({4.0, 10.0, 1.0, 0});
            const DetectionFrame a = detect(base, cfg);
            const DetectionFrame b = detect(injected, cfg);
            CHECK(a.detections.size() == 2);
            for (const auto& d : a.detections)
            {
                const bool kept = std::any_of(b.detections.begin(), b.detections.end(),
                                              [&](const Detection& e) { return same_box(d.box, e.box); });
                CHECK(kept);
            }
            CHECK(b.detections.size() <= a.detections.size() + 1);
        }
    }

    TEST_CASE("grid-aligned translation moves boxes by the same vector")
    {
        const Scene scene = single_obstacle(11.0, 1.5, 0.6);
        const PointCloud cloud = simulate(scene, false, 0.0);
        for (const auto mode : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
        {
            const auto cfg = PipelineConfig::defaults(mode);
            const PointCloud base =
                mode == DetectorMode::eight_plane ? decimate_planes(cloud, ring_predicate(RingSelection::even)) : cloud;
            const Eigen::Vector2d shift = 5.0 * 0.2 * Eigen::Vector2d(1.0, -1.0); // whole cells of either grid
            PointCloud moved = base;
            for (auto& p : moved.points)
            {
                p.x += shift.x();
                p.y += shift.y();
            }
            const DetectionFrame a = detect(base, cfg);
            const DetectionFrame b = detect(moved, cfg);
            REQUIRE(a.detections.size() == 1);
            REQUIRE(b.detections.size() == 1);
            const Eigen::Vector2d delta = b.detections[0].box.center.head<2>() - a.detections[0].box.center.head<2>();
            CHECK((delta - shift).norm() < 1e-6);
        }
    }
}
