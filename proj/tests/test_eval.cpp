#include <doctest.h>

#include <random>

#include "sparse_lidar/errors.hpp"
#include "sparse_lidar/eval.hpp"
#include "support/oracles.hpp"

using namespace sparse_lidar;

namespace
{

ObstacleTruth truth_at(int id, double x, double y, double yaw = 0.0)
{
    ObstacleTruth t;
    t.id = id;
    t.box.center = {x, y, 1.1};
    t.box.length = 4.5;
    t.box.width = 2.0;
    t.box.height = 2.2;
    t.box.yaw = yaw;
    t.box.heading_valid = true;
    t.rel_heading = yaw;
    t.dist_center = std::hypot(x, y);
    t.dist_nearest = footprint_distance(t.box);
    return t;
}

Detection detection_at(double x, double y, double yaw = 0.0)
{
    Detection d;
    d.box = truth_at(0, x, y, yaw).box;
    d.provenance = Provenance::plane_fit;
    return d;
}

} // namespace

TEST_CASE("matching examples")
{
    GroundTruthRecord truth{0.0, {truth_at(7, 10.0, 0.0)}};
    DetectionFrame frame{0.0, {detection_at(10.3, 0.0)}};
    const auto one = match_detections(truth, frame, 2.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].truth_id == 7);
    CHECK(one[0].detection_index == 0);
    CHECK(one[0].center_distance == doctest::Approx(0.3));

    CHECK(match_detections(truth, DetectionFrame{}, 2.0).empty());
    CHECK(match_detections(truth, frame, 0.2).empty());

    // Structures never take part.
    truth.obstacles[0].cls = ObstacleClass::structure;
    CHECK(match_detections(truth, frame, 2.0).empty());
}

TEST_CASE("matching ties break on truth id, then detection index")
{
    const GroundTruthRecord truth{0.0, {truth_at(5, 10.0, 1.0), truth_at(2, 10.0, -1.0)}};
    const DetectionFrame frame{0.0, {detection_at(10.0, 0.0), detection_at(10.0, 0.0)}};
    const auto pairs = match_detections(truth, frame, 3.0);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].truth_id == 2);
    CHECK(pairs[0].detection_index == 0);
    CHECK(pairs[1].truth_id == 5);
    CHECK(pairs[1].detection_index == 1);
}

TEST_SUITE("matching property")
{
    TEST_CASE("greedy matches the exhaustive 2x2 nearest-first oracle")
    {
        std::mt19937_64 rng(51);
        std::uniform_real_distribution<double> coord(0.0, 4.0);
        for (int trial = 0; trial < 500; ++trial)
        {
            GroundTruthRecord truth;
            DetectionFrame frame;
            std::array<Eigen::Vector2d, 2> t;
            std::array<Eigen::Vector2d, 2> d;
            for (int i = 0; i < 2; ++i)
            {
                t[i] = {coord(rng), coord(rng)};
                d[i] = {coord(rng), coord(rng)};
                truth.obstacles.push_back(truth_at(i, t[i].x(), t[i].y()));
                frame.detections.push_back(detection_at(d[i].x(), d[i].y()));
            }
            const double max_dist = 2.5;
            // Oracle: the globally nearest admissible pair first, then the complementary pair if admissible.
            double best = std::numeric_limits<double>::infinity();
            int bi = -1;
            int bj = -1;
            for (int i = 0; i < 2; ++i)
            {
                for (int j = 0; j < 2; ++j)
                {
                    const double dist = (t[i] - d[j]).norm();
                    if (dist <= max_dist && dist < best)
                    {
                        best = dist;
                        bi = i;
                        bj = j;
                    }
                }
            }
            const auto pairs = match_detections(truth, frame, max_dist);
            if (bi < 0)
            {
                CHECK(pairs.empty());
                continue;
            }
            REQUIRE_FALSE(pairs.empty());
            CHECK(pairs[0].truth_id == bi);
            CHECK(pairs[0].detection_index == static_cast<std::size_t>(bj));
            const bool second = (t[1 - bi] - d[1 - bj]).norm() <= max_dist;
            CHECK(pairs.size() == (second ? 2u : 1u));
        }
    }
}

TEST_CASE("error series examples")
{
    std::vector<GroundTruthRecord> truth;
    std::vector<GroundTruthRecord> straight;
    std::vector<DetectionFrame> perfect;
    std::vector<DetectionFrame> biased;
    std::vector<DetectionFrame> flipped;
    for (int k = 0; k < 10; ++k)
    {
        const double t = 0.1 * k;
        const double x = 20.0 - k;
        const double yaw = 0.05 * k;
        truth.push_back({t, {truth_at(0, x, 0.0, yaw)}});
        straight.push_back({t, {truth_at(0, x, 0.0)}});
        perfect.push_back({t, {detection_at(x, 0.0, yaw)}});
        flipped.push_back({t, {detection_at(x, 0.0, yaw + kPi)}});
        biased.push_back({t, {detection_at(x + 0.5, 0.0)}});
    }

    const auto p = compute_error_series(truth, perfect, 3.0);
    CHECK(p.summary.matched == 10);
    CHECK(p.summary.misses == 0);
    CHECK(p.summary.mean_abs_distance_error == doctest::Approx(0.0));
    CHECK(p.summary.mean_abs_heading_error == doctest::Approx(0.0));

    const auto f = compute_error_series(truth, flipped, 3.0);
    CHECK(f.summary.mean_abs_heading_error == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.summary.mean_signed_heading_error == doctest::Approx(0.0).epsilon(1e-9));

    const auto b = compute_error_series(straight, biased, 3.0);
    CHECK(b.summary.mean_abs_distance_error == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.summary.mean_signed_distance_error == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<DetectionFrame> empty(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k)
    {
        empty[k].timestamp = truth[k].timestamp;
    }
    const auto e = compute_error_series(truth, empty, 3.0);
    CHECK(e.summary.misses == 10);
    CHECK(e.summary.matched == 0);
    CHECK(e.summary.mean_abs_distance_error == 0.0);

    empty[3].timestamp += 0.01;
    CHECK_THROWS_AS(compute_error_series(truth, empty, 3.0), DomainError);
    empty.pop_back();
    CHECK_THROWS_AS(compute_error_series(truth, empty, 3.0), DomainError);
}

TEST_CASE("heading errors use the half-turn convention")
{
    ErrorRow row;
    row.heading_true = deg2rad(89.0);
    row.heading_est = deg2rad(-89.0);
    CHECK(row.heading_error_deg() == doctest::Approx(2.0));
    CHECK(row.heading_signed_error_deg() == doctest::Approx(2.0));
    row.heading_est = deg2rad(87.0);
    CHECK(row.heading_signed_error_deg() == doctest::Approx(-2.0));
}

TEST_SUITE("summary property")
{
    TEST_CASE("aggregates equal the mean of the rows")
    {
        std::mt19937_64 rng(52);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::bernoulli_distribution coin(0.8);
        for (int trial = 0; trial < 100; ++trial)
        {
            std::vector<ErrorRow> rows(1 + rng() % 50);
            for (auto& r : rows)
            {
                r.matched = coin(rng);
                r.heading_valid = coin(rng);
                r.distance_true = 10.0 + 5.0 * unit(rng);
                r.distance_est = r.distance_true + unit(rng);
                r.heading_true = 1.5 * unit(rng);
                r.heading_est = wrap_half_turn(r.heading_true + 0.1 * unit(rng));
                r.footprint_iou = 0.5 + 0.5 * unit(rng);
            }
            const ErrorSummary s = summarize(rows, rows.size());
            double dist = 0.0;
            double signed_dist = 0.0;
            double heading = 0.0;
            std::size_t matched = 0;
            std::size_t headed = 0;
            for (const auto& r : rows)
            {
                if (!r.matched)
                {
                    continue;
                }
                ++matched;
                dist += std::abs(r.distance_error());
                signed_dist += r.distance_error();
                if (r.heading_valid)
                {
                    ++headed;
                    heading += r.heading_error_deg();
                }
            }
            CHECK(s.matched == matched);
            CHECK(s.misses == rows.size() - matched);
            CHECK(s.heading_rows == headed);
            if (matched > 0)
            {
                CHECK(std::abs(s.mean_abs_distance_error - dist / matched) < 1e-12);
                CHECK(std::abs(s.mean_signed_distance_error - signed_dist / matched) < 1e-12);
            }
            if (headed > 0)
            {
                CHECK(std::abs(s.mean_abs_heading_error - heading / headed) < 1e-12);
            }
        }
    }
}

TEST_CASE("footprint IoU agrees with Monte Carlo")
{
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial)
    {
        OrientedBox3 a;
        a.center = {unit(rng), unit(rng), 0.0};
        a.length = 2.0 + 2.0 * unit(rng);
        a.width = 1.0 + unit(rng);
        a.yaw = kPi * unit(rng);
        OrientedBox3 b = a;
        b.center += Eigen::Vector3d(unit(rng), unit(rng), 0.0);
        b.yaw += 0.5 * unit(rng);
        b.length *= 0.8 + 0.4 * unit(rng);

        const auto fa = a.footprint();
        const auto fb = b.footprint();
        const std::vector<Eigen::Vector2d> pa(fa.begin(), fa.end());
        const std::vector<Eigen::Vector2d> pb(fb.begin(), fb.end());
        const int samples = 200000;
        int in_a = 0;
        int in_both = 0;
        for (int i = 0; i < samples; ++i)
        {
            // Sample inside a's footprint, so IoU = |A n B| / (|A| + |B| - |A n B|).
            const double s = unit(rng) - 0.5;
            const double t = unit(rng) - 0.5;
            const Eigen::Vector2d p = a.center.head<2>() + s * a.length * Eigen::Vector2d(std::cos(a.yaw), std::sin(a.yaw)) +
                                      t * a.width * Eigen::Vector2d(-std::sin(a.yaw), std::cos(a.yaw));
            ++in_a;
            in_both += oracle::inside_convex(pb, p) ? 1 : 0;
        }
        const double area_a = a.length * a.width;
        const double area_b = b.length * b.width;
        const double inter = area_a * in_both / in_a;
        const double expected = inter / (area_a + area_b - inter);
        CHECK(std::abs(footprint_iou(a, b) - expected) < 0.01);
        CHECK(footprint_iou(a, b) == doctest::Approx(footprint_iou(b, a)).epsilon(1e-12));
    }
    OrientedBox3 unit_box;
    unit_box.length = unit_box.width = 1.0;
    CHECK(footprint_iou(unit_box, unit_box) == doctest::Approx(1.0));
    OrientedBox3 far = unit_box;
    far.center.x() = 5.0;
    CHECK(footprint_iou(unit_box, far) == 0.0);
}

TEST_CASE("detections JSON lines golden")
{
    Detection d;
    d.box.center = {10.5, -2.0, 1.25};
    d.box.length = 4.5;
    d.box.width = 2.0;
    d.box.height = 0.75;
    d.box.yaw = 0.5;
    d.box.heading_valid = true;
    d.box.height_is_lower_bound = true;
    d.provenance = Provenance::rectangle;
    const std::vector<DetectionFrame> frames = {{0.25, {d}}, {0.5, {}}};
    const std::string text = format_detections(frames);
    CHECK(text ==
          "{\"timestamp\":0.25,\"detections\":[{\"cx\":10.5,\"cy\":-2.0,\"cz\":1.25,\"length\":4.5,\"width\":2.0,"
          "\"height\":0.75,\"yaw\":0.5,\"heading_valid\":true,\"height_is_lower_bound\":true,"
          "\"provenance\":\"rectangle\"}]}\n"
          "{\"timestamp\":0.5,\"detections\":[]}\n");

    const auto back = parse_detections(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].detections[0].box.center == d.box.center);
    CHECK(back[0].detections[0].provenance == Provenance::rectangle);
    CHECK(back[1].detections.empty());
    CHECK(format_detections(back) == text);

    CHECK_THROWS_AS(parse_detections("{\"timestamp\":0.5}\n"), ParseError);
    CHECK_THROWS_AS(parse_detections("not json\n"), ParseError);
    CHECK(parse_detections("").empty());
}

TEST_CASE("error series text formats")
{
    const std::vector<GroundTruthRecord> truth = {{0.0, {truth_at(0, 10.0, 0.0)}}, {0.1, {truth_at(0, 9.0, 0.0)}}};
    const std::vector<DetectionFrame> dets = {{0.0, {detection_at(10.0, 0.0)}}, {0.1, {}}};
    const auto series = compute_error_series(truth, dets, 3.0);
    const std::string csv = format_error_series(series);
    CHECK(csv.rfind(std::string(kErrorSeriesHeader) + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(format_gnuplot(series).find("NaN") != std::string::npos);
    const std::string summary = format_summary(series.summary);
    CHECK(summary.rfind("metric,value\n", 0) == 0);
    CHECK(summary.find("misses,1\n") != std::string::npos);
    CHECK(format_summary_table(series.summary, "t").find("misses") != std::string::npos);
}
