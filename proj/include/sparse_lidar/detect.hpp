#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparse_lidar/fit.hpp"
#include "sparse_lidar/geometry.hpp"
#include "sparse_lidar/grid.hpp"
#include "sparse_lidar/preprocess.hpp"

namespace sparse_lidar
{

enum class DetectorMode
{
    sixteen_plane,
    eight_plane
};

std::string to_string(DetectorMode mode);
DetectorMode parse_detector_mode(const std::string& text);

struct MorphologyParams
{
    int close_radius = 2; ///< cells; 0 skips closing
    int open_radius = 0;  ///< cells; 0 skips opening (applied after closing)
    int link_radius = 3;  ///< cells; clusters closer than twice this merge, 0 disables
    int connectivity = 8;
};

struct HeadingParams
{
    double grid_tolerance_cells = 1.5;  ///< RANSAC tolerance on cell centers, in cells
    double raw_tolerance = 0.05;        ///< RANSAC tolerance on projected raw points, meters
    bool use_raw_points = false;        ///< eight-plane: fit the heading line on raw projections
    double max_normal_angle = kPi / 4.0; ///< face preference around ego +x for the plane fit
    double visible_side_min = 1.2;      ///< both hull bbox sides above this: two sides visible
    double corner_angle_tolerance = deg2rad(35.0);
    double max_end_face_width = 2.6;    ///< a single face no longer than this is taken as a front/back face
    double min_side_depth = 1.8;        ///< a lone vehicle side is extended to this depth away from the sensor; 0 disables
};

struct PipelineConfig
{
    DetectorMode mode = DetectorMode::sixteen_plane;
    GroundParams ground;
    RoiParams roi;
    GridConfig grid;
    MorphologyParams morphology;
    ClusterFilterParams cluster;
    RansacParams ransac;
    HeadingParams heading;
    double crop_margin = 0.10;

    /// Defaults for the given detector.
    static PipelineConfig defaults(DetectorMode mode);
    void validate() const;
};

enum class Provenance
{
    plane_fit,
    rectangle,
    ransac_line,
    no_heading
};

std::string to_string(Provenance provenance);
Provenance parse_provenance(const std::string& text);

struct Detection
{
    OrientedBox3 box;
    Provenance provenance = Provenance::no_heading;
};

struct DetectionFrame
{
    double timestamp = 0.0;
    std::vector<Detection> detections;
};

/// Points whose ground projection falls inside the cluster's cell bounding box grown by `margin`.
PointCloud crop_cloud(const PointCloud& cloud, const Cluster& cluster, const Plane3& ground, const GridConfig& grid,
                      double margin);

/// Box with `face` as one of its faces. Heading follows the face normal, except when the face is
/// longer than both `max_end_face_width` and the observed depth: then it is a vehicle side, the
/// heading runs along the face and the depth grows to `side_depth` away from the sensor.
/// Extents are clamped to at least `min_extent`.
OrientedBox3 box_from_plane(const PointCloud& subcloud, const Plane3& face, const Plane3& ground, double min_extent,
                            double max_end_face_width = 2.6, double side_depth = 0.0);

/// Min/max box of the subcloud in the yaw-rotated ground frame (axis aligned without yaw). The
/// extent across the heading grows to `side_depth` away from the sensor. Height is the highest
/// return, so it is flagged as a lower bound.
OrientedBox3 box_from_heading(const PointCloud& subcloud, std::optional<double> yaw, const Plane3& ground,
                              double cell_size, double side_depth = 0.0);

/// Front end shared by both detectors: ground removal, ROI, grid, morphology, clustering, filtering.
struct FrontEnd
{
    Plane3 ground;
    PointCloud filtered;
    OccupancyGrid grid;
    std::vector<Cluster> clusters;
};

FrontEnd run_front_end(const PointCloud& cloud, const PipelineConfig& config);

DetectionFrame detect_16(const PointCloud& cloud, const PipelineConfig& config);
DetectionFrame detect_8(const PointCloud& cloud, const PipelineConfig& config);

/// Dispatches on config.mode.
DetectionFrame detect(const PointCloud& cloud, const PipelineConfig& config);

} // namespace sparse_lidar
