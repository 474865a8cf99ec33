#include "sparse_lidar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "detail/text.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

LidarModel LidarModel::uniform(int rings, double min_elevation, double max_elevation)
{
    LidarModel model;
    if (rings == 1)
    {
        model.elevation_angles = {min_elevation};
        return model;
    }
    for (int k = 0; k < rings; ++k)
    {
        model.elevation_angles.push_back(min_elevation + (max_elevation - min_elevation) * k / (rings - 1));
    }
    return model;
}

std::size_t LidarModel::azimuth_count() const
{
    return static_cast<std::size_t>(std::llround(2.0 * kPi / azimuth_step));
}

void LidarModel::validate() const
{
    if (elevation_angles.empty())
    {
        throw ConfigError("lidar: no rings");
    }
    for (std::size_t k = 1; k < elevation_angles.size(); ++k)
    {
        if (!(elevation_angles[k] > elevation_angles[k - 1]))
        {
            throw ConfigError("lidar: elevation angles must be strictly increasing");
        }
    }
    if (!(azimuth_step > 0.0) || azimuth_step > kPi)
    {
        throw ConfigError("lidar: azimuth_step must be in (0, pi]");
    }
    if (!(max_range > 0.0) || !(range_noise_sigma >= 0.0) || !(mount_height > 0.0))
    {
        throw ConfigError("lidar: max_range and mount_height must be positive, noise sigma non-negative");
    }
}

double Trajectory::start_time() const
{
    if (knots.empty())
    {
        throw PreconditionError("trajectory has no knots");
    }
    return knots.size() == 1 ? -std::numeric_limits<double>::infinity() : knots.front().t;
}

double Trajectory::end_time() const
{
    if (knots.empty())
    {
        throw PreconditionError("trajectory has no knots");
    }
    return knots.size() == 1 ? std::numeric_limits<double>::infinity() : knots.back().t;
}

bool Trajectory::covers(double t) const
{
    return !knots.empty() && t >= start_time() && t <= end_time();
}

Pose2 Trajectory::pose_at(double t) const
{
    if (!covers(t))
    {
        throw PreconditionError("time " + std::to_string(t) + " outside trajectory span");
    }
    if (knots.size() == 1)
    {
        return knots.front().pose;
    }
    auto hi = std::upper_bound(knots.begin(), knots.end(), t, [](double v, const TimedPose& k) { return v < k.t; });
    if (hi == knots.end())
    {
        return knots.back().pose;
    }
    const auto lo = std::prev(hi);
    const double span = hi->t - lo->t;
    const double a = span > 0.0 ? (t - lo->t) / span : 0.0;
    const Pose2& p = lo->pose;
    const Pose2& q = hi->pose;
    return Pose2{p.x + a * (q.x - p.x), p.y + a * (q.y - p.y), wrap_angle(p.yaw + a * wrap_angle(q.yaw - p.yaw))};
}

std::string to_string(ObstacleClass cls)
{
    switch (cls)
    {
    case ObstacleClass::pedestrian:
        return "pedestrian";
    case ObstacleClass::structure:
        return "structure";
    case ObstacleClass::vehicle:
        break;
    }
    return "vehicle";
}

ObstacleClass parse_obstacle_class(const std::string& text)
{
    if (text == "vehicle")
    {
        return ObstacleClass::vehicle;
    }
    if (text == "pedestrian")
    {
        return ObstacleClass::pedestrian;
    }
    if (text == "structure")
    {
        return ObstacleClass::structure;
    }
    throw DomainError("unknown obstacle class '" + text + "'");
}

namespace
{

// Counter-based noise: one independent stream per (seed, ring, azimuth index).
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double gaussian(std::uint64_t seed, std::uint64_t ring, std::uint64_t column)
{
    const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ ring) ^ column);
    const double u1 = unit_open(key);
    const double u2 = unit_open(splitmix64(key));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double ground_height(const Plane3& ground, double x, double y)
{
    if (!(std::abs(ground.normal.z()) > 1e-9))
    {
        throw PreconditionError("scene ground plane is vertical");
    }
    return -(ground.normal.x() * x + ground.normal.y() * y + ground.offset) / ground.normal.z();
}

// Obstacle at a fixed time: world-frame slab box.
struct PlacedBox
{
    Eigen::Vector2d center;
    double c = 1.0;
    double s = 0.0;
    double bottom = 0.0;
    Eigen::Vector3d half; ///< half extents; z measured from the bottom
};

// Ray parameter of the first entry into the box, or infinity. Rays starting inside miss.
double intersect_box(const PlacedBox& box, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir)
{
    const Eigen::Vector2d rel = origin.head<2>() - box.center;
    const Eigen::Vector3d o{box.c * rel.x() + box.s * rel.y(), -box.s * rel.x() + box.c * rel.y(),
                            origin.z() - box.bottom - box.half.z()};
    const Eigen::Vector3d d{box.c * dir.x() + box.s * dir.y(), -box.s * dir.x() + box.c * dir.y(), dir.z()};
    double enter = -std::numeric_limits<double>::infinity();
    double leave = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
    {
        if (std::abs(d[k]) < 1e-15)
        {
            if (std::abs(o[k]) > box.half[k])
            {
                return std::numeric_limits<double>::infinity();
            }
            continue;
        }
        double t0 = (-box.half[k] - o[k]) / d[k];
        double t1 = (box.half[k] - o[k]) / d[k];
        if (t0 > t1)
        {
            std::swap(t0, t1);
        }
        enter = std::max(enter, t0);
        leave = std::min(leave, t1);
    }
    if (enter > leave || !(enter > 0.0))
    {
        return std::numeric_limits<double>::infinity();
    }
    return enter;
}

std::vector<PlacedBox> place_obstacles(const Scene& scene, double t)
{
    std::vector<PlacedBox> boxes;
    boxes.reserve(scene.obstacles.size());
    for (const auto& obstacle : scene.obstacles)
    {
        const Pose2 pose = obstacle.trajectory.pose_at(t);
        PlacedBox box;
        box.center = {pose.x, pose.y};
        box.c = std::cos(pose.yaw);
        box.s = std::sin(pose.yaw);
        box.bottom = ground_height(scene.ground, pose.x, pose.y);
        box.half = {obstacle.length / 2.0, obstacle.width / 2.0, obstacle.height / 2.0};
        boxes.push_back(box);
    }
    return boxes;
}

struct Return
{
    Point3 point;
    ReturnInfo info;
};

} // namespace

FrameRecord raycast_frame(const Scene& scene, const LidarModel& lidar, double t, std::uint64_t seed,
                          std::vector<ReturnInfo>* info, int threads)
{
    lidar.validate();
    const Pose2 ego = scene.ego.pose_at(t);
    const auto boxes = place_obstacles(scene, t);
    const double ego_z = ground_height(scene.ground, ego.x, ego.y);
    const Eigen::Vector3d sensor{ego.x, ego.y, ego_z + lidar.mount_height};
    const double ce = std::cos(ego.yaw);
    const double se = std::sin(ego.yaw);

    const std::size_t columns = lidar.azimuth_count();
    const std::size_t rings = lidar.ring_count();

    const auto cast_columns = [&](std::size_t first, std::size_t last, std::vector<Return>& out) {
        for (std::size_t col = first; col < last; ++col)
        {
            const double az = static_cast<double>(col) * lidar.azimuth_step;
            for (std::size_t ring = 0; ring < rings; ++ring)
            {
                const double el = lidar.elevation_angles[ring];
                const Eigen::Vector3d local{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
                const Eigen::Vector3d dir{ce * local.x() - se * local.y(), se * local.x() + ce * local.y(), local.z()};

                double best = std::numeric_limits<double>::infinity();
                int surface = -1;
                const double denom = scene.ground.normal.dot(dir);
                if (denom < 0.0)
                {
                    const double tg = -scene.ground.signed_distance(sensor) / denom;
                    if (tg > 0.0)
                    {
                        best = tg;
                    }
                }
                for (std::size_t b = 0; b < boxes.size(); ++b)
                {
                    const double tb = intersect_box(boxes[b], sensor, dir);
                    if (tb < best)
                    {
                        best = tb;
                        surface = static_cast<int>(b);
                    }
                }
                if (!(best <= lidar.max_range))
                {
                    continue;
                }
                const double noise =
                    lidar.range_noise_sigma > 0.0 ? lidar.range_noise_sigma * gaussian(seed, ring, col) : 0.0;
                const Eigen::Vector3d hit = sensor + (best + noise) * dir;
                const Eigen::Vector2d rel = hit.head<2>() - sensor.head<2>();
                Point3 p;
                p.x = ce * rel.x() + se * rel.y();
                p.y = -se * rel.x() + ce * rel.y();
                p.z = hit.z() - ego_z;
                p.ring = static_cast<int>(ring);
                out.push_back({p, ReturnInfo{surface, noise}});
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), 1, columns);
    std::vector<std::vector<Return>> parts(workers);
    if (workers == 1)
    {
        cast_columns(0, columns, parts[0]);
    }
    else
    {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
        {
            pool.emplace_back(cast_columns, columns * w / workers, columns * (w + 1) / workers, std::ref(parts[w]));
        }
        for (auto& th : pool)
        {
            th.join();
        }
    }

    FrameRecord record;
    record.timestamp = t;
    record.truth_key = detail::format_number(t);
    record.cloud.frame_id = "ego";
    record.cloud.timestamp = t;
    if (info != nullptr)
    {
        info->clear();
    }
    for (const auto& part : parts)
    {
        for (const auto& r : part)
        {
            record.cloud.points.push_back(r.point);
            if (info != nullptr)
            {
                info->push_back(r.info);
            }
        }
    }
    return record;
}

GroundTruthRecord ground_truth_at(const Scene& scene, double t)
{
    const Pose2 ego = scene.ego.pose_at(t);
    const double ce = std::cos(ego.yaw);
    const double se = std::sin(ego.yaw);
    GroundTruthRecord record;
    record.timestamp = t;
    for (const auto& obstacle : scene.obstacles)
    {
        const Pose2 pose = obstacle.trajectory.pose_at(t);
        if (obstacle.cls == ObstacleClass::structure)
        {
            continue;
        }
        const double dx = pose.x - ego.x;
        const double dy = pose.y - ego.y;
        ObstacleTruth truth;
        truth.id = obstacle.id;
        truth.cls = obstacle.cls;
        truth.rel_heading = wrap_angle(pose.yaw - ego.yaw);
        truth.box.center = {ce * dx + se * dy, -se * dx + ce * dy, obstacle.height / 2.0};
        truth.box.length = obstacle.length;
        truth.box.width = obstacle.width;
        truth.box.height = obstacle.height;
        truth.box.yaw = truth.rel_heading;
        truth.box.heading_valid = true;
        truth.dist_center = truth.box.center.head<2>().norm();
        truth.dist_nearest = footprint_distance(truth.box);
        record.obstacles.push_back(truth);
    }
    return record;
}

std::string to_string(ScenarioKind kind)
{
    switch (kind)
    {
    case ScenarioKind::approach:
        return "approach";
    case ScenarioKind::chicane:
        return "chicane";
    case ScenarioKind::multi_obstacle:
        return "multi_obstacle";
    case ScenarioKind::lap:
        break;
    }
    return "lap";
}

ScenarioKind parse_scenario_kind(const std::string& text)
{
    for (const auto kind : {ScenarioKind::lap, ScenarioKind::approach, ScenarioKind::chicane, ScenarioKind::multi_obstacle})
    {
        if (text == to_string(kind))
        {
            return kind;
        }
    }
    throw ConfigError("unknown scenario '" + text + "' (expected lap|approach|chicane|multi_obstacle)");
}

void ScenarioParams::validate() const
{
    if (!(duration > 0.0) || frames < 1 || !(knot_step > 0.0) || !(chicane_period > 0.0))
    {
        throw ConfigError("scenario: duration, frames, knot_step and chicane_period must be positive");
    }
    if (!(van_length > 0.0) || !(van_width > 0.0) || !(van_height > 0.0))
    {
        throw ConfigError("scenario: van extents must be positive");
    }
    const double gap = std::abs(lateral_offset) - van_width / 2.0;
    if (gap < 0.0)
    {
        throw ConfigError("scenario: lateral_offset places the obstacle over the ego path");
    }
    if (!(start_distance >= end_distance) || end_distance < gap)
    {
        throw ConfigError("scenario: need start_distance >= end_distance >= lateral gap");
    }
    if (!(chicane_gap > 0.0) || !(std::abs(chicane_amplitude) < kPi / 2.0))
    {
        throw ConfigError("scenario: chicane_gap must be positive and amplitude below 90 deg");
    }
}

namespace
{

// Samples `pose_of` on [t0, t1] every `step`, always including both ends.
template <typename F>
void sample(Trajectory& out, double t0, double t1, double step, F pose_of)
{
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / step - 1e-9));
    for (std::size_t k = 0; k <= n; ++k)
    {
        const double t = k == n ? t1 : t0 + static_cast<double>(k) * step;
        if (!out.knots.empty() && t <= out.knots.back().t)
        {
            continue;
        }
        out.knots.push_back({t, pose_of(t)});
    }
}

Pose2 ego_pose(const ScenarioParams& params, double t)
{
    return {params.ego_speed * t, 0.0, 0.0};
}

// Van beside or ahead of the ego, nearest footprint point at distance `dist`.
Pose2 approach_pose(const ScenarioParams& params, double t, double dist)
{
    const double side = params.lateral_offset < 0.0 ? -1.0 : 1.0;
    const double gap = std::abs(params.lateral_offset) - params.van_width / 2.0;
    const double ahead = std::sqrt(std::max(dist * dist - gap * gap, 0.0));
    return {params.ego_speed * t + ahead + params.van_length / 2.0, side * std::abs(params.lateral_offset), 0.0};
}

Pose2 chicane_pose(const ScenarioParams& params, double t)
{
    return {params.ego_speed * t + params.chicane_gap + params.van_length / 2.0, params.lateral_offset,
            params.chicane_amplitude * std::sin(2.0 * kPi * t / params.chicane_period)};
}

double segment_duration(ScenarioKind kind, const ScenarioParams& params)
{
    return kind == ScenarioKind::lap ? 2.0 * params.duration : params.duration;
}

SceneObstacle make_van(const ScenarioParams& params, int id)
{
    SceneObstacle van;
    van.id = id;
    van.cls = ObstacleClass::vehicle;
    van.length = params.van_length;
    van.width = params.van_width;
    van.height = params.van_height;
    return van;
}

} // namespace

Scene generate_scenario(ScenarioKind kind, const ScenarioParams& params)
{
    params.validate();
    Scene scene;
    const double total = segment_duration(kind, params);
    const double step = params.knot_step;
    sample(scene.ego, 0.0, total, step, [&](double t) { return ego_pose(params, t); });

    const auto approach_between = [&](double t, double t0, double t1, double from) {
        const double dist = from + (params.end_distance - from) * (t - t0) / (t1 - t0);
        return approach_pose(params, t, dist);
    };

    SceneObstacle van = make_van(params, 0);
    switch (kind)
    {
    case ScenarioKind::approach:
    case ScenarioKind::multi_obstacle:
        sample(van.trajectory, 0.0, total, step,
               [&](double t) { return approach_between(t, 0.0, total, params.start_distance); });
        break;
    case ScenarioKind::chicane:
        sample(van.trajectory, 0.0, total, step, [&](double t) { return chicane_pose(params, t); });
        break;
    case ScenarioKind::lap: {
        // Chicane, then an approach starting where the chicane leaves the van.
        const double half = params.duration;
        sample(van.trajectory, 0.0, half, step, [&](double t) { return chicane_pose(params, t); });
        const Pose2 handover = chicane_pose(params, half);
        const double gap = std::abs(params.lateral_offset) - params.van_width / 2.0;
        const double from = std::hypot(handover.x - params.van_length / 2.0 - ego_pose(params, half).x, gap);
        sample(van.trajectory, half, total, step, [&](double t) { return approach_between(t, half, total, from); });
        break;
    }
    }
    scene.obstacles.push_back(van);

    if (kind == ScenarioKind::multi_obstacle)
    {
        SceneObstacle car;
        car.id = 1;
        car.cls = ObstacleClass::vehicle;
        car.length = 4.2;
        car.width = 1.8;
        car.height = 1.5;
        const double car_y = params.lateral_offset < 0.0 ? 3.5 : -3.5;
        sample(car.trajectory, 0.0, total, step,
               [&](double t) { return Pose2{params.ego_speed * t + 12.0 + car.length / 2.0, car_y, 0.0}; });
        scene.obstacles.push_back(car);

        SceneObstacle walker;
        walker.id = 2;
        walker.cls = ObstacleClass::pedestrian;
        walker.length = 0.5;
        walker.width = 0.5;
        walker.height = 1.75;
        sample(walker.trajectory, 0.0, total, step, [&](double t) {
            return Pose2{params.ego_speed * t + 8.0, 2.0 * car_y, kPi / 2.0};
        });
        scene.obstacles.push_back(walker);
    }
    return scene;
}

std::vector<double> scenario_frame_times(ScenarioKind kind, const ScenarioParams& params)
{
    params.validate();
    const double rate = params.frames / params.duration;
    const auto count = static_cast<std::size_t>(std::llround(segment_duration(kind, params) * rate));
    std::vector<double> times;
    times.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
    {
        times.push_back(static_cast<double>(k) / rate);
    }
    return times;
}

void add_enclosure(Scene& scene, double lateral, double longitudinal, double height)
{
    if (scene.ego.knots.empty())
    {
        throw PreconditionError("add_enclosure: scene has no ego trajectory");
    }
    constexpr double thickness = 0.5;
    struct Wall
    {
        double dx, dy, length, width;
    };
    const Wall walls[] = {
        {0.0, lateral + thickness / 2.0, 2.0 * longitudinal, thickness},
        {0.0, -lateral - thickness / 2.0, 2.0 * longitudinal, thickness},
        {longitudinal + thickness / 2.0, 0.0, thickness, 2.0 * lateral},
        {-longitudinal - thickness / 2.0, 0.0, thickness, 2.0 * lateral},
    };
    int next_id = 1000;
    for (const auto& wall : walls)
    {
        SceneObstacle obstacle;
        obstacle.id = next_id++;
        obstacle.cls = ObstacleClass::structure;
        obstacle.length = wall.length;
        obstacle.width = wall.width;
        obstacle.height = height;
        for (const auto& knot : scene.ego.knots)
        {
            const double c = std::cos(knot.pose.yaw);
            const double s = std::sin(knot.pose.yaw);
            obstacle.trajectory.knots.push_back(
                {knot.t, Pose2{knot.pose.x + c * wall.dx - s * wall.dy, knot.pose.y + s * wall.dx + c * wall.dy,
                               knot.pose.yaw}});
        }
        scene.obstacles.push_back(obstacle);
    }
}

std::vector<FrameRecord> simulate_sequence(const Scene& scene, const LidarModel& lidar,
                                           const std::vector<double>& times, std::uint64_t seed, int threads)
{
    std::vector<FrameRecord> frames(times.size());
    const auto frame_seed = [seed](std::size_t k) { return splitmix64(seed ^ splitmix64(k)); };
    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), 1,
                                                        std::max<std::size_t>(times.size(), 1));
    const auto run = [&](std::size_t w) {
        for (std::size_t k = w; k < times.size(); k += workers)
        {
            frames[k] = raycast_frame(scene, lidar, times[k], frame_seed(k));
        }
    };
    if (workers == 1)
    {
        run(0);
        return frames;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back(run, w);
    }
    for (auto& th : pool)
    {
        th.join();
    }
    return frames;
}

void write_ground_truth(const std::vector<GroundTruthRecord>& records, const std::filesystem::path& path)
{
    using detail::format_number;
    std::string out = std::string(kGroundTruthHeader) + "\n";
    for (const auto& record : records)
    {
        for (const auto& o : record.obstacles)
        {
            const double fields[] = {o.dist_nearest, o.dist_center, o.rel_heading, o.box.center.x(), o.box.center.y(),
                                     o.box.yaw,      o.box.length,  o.box.width,   o.box.height};
            out += format_number(record.timestamp) + "," + std::to_string(o.id) + "," + to_string(o.cls);
            for (const double v : fields)
            {
                out += "," + format_number(v);
            }
            out += "\n";
        }
    }
    detail::write_text_file(path, out);
}

std::vector<GroundTruthRecord> read_ground_truth(const std::filesystem::path& path)
{
    const auto lines = detail::read_lines(detail::read_text_file(path, "ground truth file"));
    if (lines.empty() || detail::trim(lines.front()) != kGroundTruthHeader)
    {
        throw ParseError("ground truth header must be '" + std::string(kGroundTruthHeader) + "'", 1);
    }
    std::map<double, GroundTruthRecord> by_time;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const std::size_t line_no = i + 1;
        if (detail::trim(lines[i]).empty())
        {
            continue;
        }
        const auto f = detail::split(lines[i], ',');
        if (f.size() != 12)
        {
            throw ParseError("expected 12 fields, got " + std::to_string(f.size()), line_no);
        }
        const double t = detail::parse_double(f[0], "t", line_no);
        ObstacleTruth o;
        o.id = detail::parse_int(f[1], "obstacle_id", line_no);
        try
        {
            o.cls = parse_obstacle_class(std::string(f[2]));
        }
        catch (const DomainError& e)
        {
            throw ParseError(e.what(), line_no);
        }
        o.dist_nearest = detail::parse_double(f[3], "dist_nearest", line_no);
        o.dist_center = detail::parse_double(f[4], "dist_center", line_no);
        o.rel_heading = detail::parse_double(f[5], "rel_heading", line_no);
        o.box.center.x() = detail::parse_double(f[6], "cx", line_no);
        o.box.center.y() = detail::parse_double(f[7], "cy", line_no);
        o.box.yaw = detail::parse_double(f[8], "yaw", line_no);
        o.box.length = detail::parse_double(f[9], "length", line_no);
        o.box.width = detail::parse_double(f[10], "width", line_no);
        o.box.height = detail::parse_double(f[11], "height", line_no);
        o.box.center.z() = o.box.height / 2.0;
        o.box.heading_valid = true;
        auto& record = by_time[t];
        record.timestamp = t;
        record.obstacles.push_back(o);
    }
    std::vector<GroundTruthRecord> records;
    records.reserve(by_time.size());
    for (auto& [t, record] : by_time)
    {
        records.push_back(std::move(record));
    }
    return records;
}

} // namespace sparse_lidar
