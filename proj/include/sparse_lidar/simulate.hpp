#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sparse_lidar/cloud_io.hpp"
#include "sparse_lidar/geometry.hpp"

namespace sparse_lidar
{

/// Spinning multi-beam lidar. Ring k fires at elevation_angles[k] (ascending).
struct LidarModel
{
    std::vector<double> elevation_angles;
    double azimuth_step = deg2rad(0.2);
    double max_range = 100.0;
    double range_noise_sigma = 0.01;
    double mount_height = 1.8;

    /// `rings` beams spread uniformly over [min_elevation, max_elevation] (radians).
    static LidarModel uniform(int rings, double min_elevation = deg2rad(-15.0), double max_elevation = deg2rad(15.0));

    std::size_t ring_count() const { return elevation_angles.size(); }
    std::size_t azimuth_count() const;
    void validate() const;
};

struct TimedPose
{
    double t = 0.0;
    Pose2 pose;
};

/// Piecewise-linear pose track; yaw interpolates along the shortest arc.
/// A single knot describes a static pose valid at any time.
struct Trajectory
{
    std::vector<TimedPose> knots;

    double start_time() const;
    double end_time() const;
    bool covers(double t) const;
    /// Throws PreconditionError outside [start_time, end_time].
    Pose2 pose_at(double t) const;
};

enum class ObstacleClass
{
    vehicle,
    pedestrian,
    structure ///< static scenery: raycast but not part of ground truth
};

std::string to_string(ObstacleClass cls);
ObstacleClass parse_obstacle_class(const std::string& text);

struct SceneObstacle
{
    int id = 0;
    ObstacleClass cls = ObstacleClass::vehicle;
    double length = 4.5; ///< along the obstacle heading
    double width = 2.0;
    double height = 2.2;
    Trajectory trajectory; ///< world-frame pose of the box center; the box stands on z = 0
};

struct Scene
{
    Plane3 ground;
    std::vector<SceneObstacle> obstacles;
    Trajectory ego;
};

struct ObstacleTruth
{
    int id = 0;
    ObstacleClass cls = ObstacleClass::vehicle;
    double dist_nearest = 0.0; ///< ego origin to the nearest footprint point
    double dist_center = 0.0;  ///< ego origin to the footprint center
    double rel_heading = 0.0;  ///< obstacle yaw minus ego yaw, wrapped to [-pi, pi)
    OrientedBox3 box;          ///< in the ego frame
};

struct GroundTruthRecord
{
    double timestamp = 0.0;
    std::vector<ObstacleTruth> obstacles;
};

/// Which surface produced a return: -1 is the ground, otherwise an index into Scene::obstacles.
struct ReturnInfo
{
    int surface = -1;
    double noise = 0.0; ///< range noise added along the ray
};

/// Casts one full revolution at time t. Points are in the ego frame, ordered by azimuth column then
/// ring. Noise is drawn from a stream keyed by (seed, ring, azimuth index). `info`, when given,
/// receives one entry per point.
FrameRecord raycast_frame(const Scene& scene, const LidarModel& lidar, double t, std::uint64_t seed,
                          std::vector<ReturnInfo>* info = nullptr, int threads = 1);

GroundTruthRecord ground_truth_at(const Scene& scene, double t);

enum class ScenarioKind
{
    lap,
    approach,
    chicane,
    multi_obstacle
};

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& text);

struct ScenarioParams
{
    double duration = 30.0;      ///< seconds per approach or chicane segment
    int frames = 300;            ///< frames per segment
    double ego_speed = 10.0;     ///< m/s along +x
    double lateral_offset = 3.0; ///< obstacle center y relative to ego (left positive)
    double start_distance = 20.0;
    double end_distance = 2.0;
    double chicane_gap = 10.0;   ///< ego origin to obstacle rear, longitudinal
    double chicane_amplitude = deg2rad(40.0);
    double chicane_period = 15.0;
    double van_length = 4.5;
    double van_width = 2.0;
    double van_height = 2.2;
    double knot_step = 0.05;     ///< trajectory sampling

    void validate() const;
};

Scene generate_scenario(ScenarioKind kind, const ScenarioParams& params);

/// Frame timestamps of a scenario: frames/duration rate over its whole span.
std::vector<double> scenario_frame_times(ScenarioKind kind, const ScenarioParams& params);

/// Adds static walls on both sides and at both ends, moving with the ego, so that nearly every
/// beam returns. Used to build dense benchmark frames.
void add_enclosure(Scene& scene, double lateral = 18.5, double longitudinal = 45.0, double height = 15.0);

/// Raycasts every time in `times`. Frame k uses seed (seed, k); output is independent of `threads`.
std::vector<FrameRecord> simulate_sequence(const Scene& scene, const LidarModel& lidar,
                                           const std::vector<double>& times, std::uint64_t seed, int threads = 1);

inline constexpr const char* kGroundTruthHeader =
    "t,obstacle_id,class,dist_nearest,dist_center,rel_heading,cx,cy,yaw,length,width,height";

void write_ground_truth(const std::vector<GroundTruthRecord>& records, const std::filesystem::path& path);
std::vector<GroundTruthRecord> read_ground_truth(const std::filesystem::path& path);

} // namespace sparse_lidar
