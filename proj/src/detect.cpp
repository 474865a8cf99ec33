#include "sparse_lidar/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

std::string to_string(DetectorMode mode)
{
    return mode == DetectorMode::sixteen_plane ? "sixteen_plane" : "eight_plane";
}

DetectorMode parse_detector_mode(const std::string& text)
{
    if (text == "sixteen_plane")
    {
        return DetectorMode::sixteen_plane;
    }
    if (text == "eight_plane")
    {
        return DetectorMode::eight_plane;
    }
    throw ConfigError("unknown mode '" + text + "' (expected sixteen_plane|eight_plane)");
}

std::string to_string(Provenance provenance)
{
    switch (provenance)
    {
    case Provenance::plane_fit:
        return "plane_fit";
    case Provenance::rectangle:
        return "rectangle";
    case Provenance::ransac_line:
        return "ransac_line";
    case Provenance::no_heading:
        break;
    }
    return "no_heading";
}

Provenance parse_provenance(const std::string& text)
{
    for (const auto p : {Provenance::plane_fit, Provenance::rectangle, Provenance::ransac_line, Provenance::no_heading})
    {
        if (to_string(p) == text)
        {
            return p;
        }
    }
    throw ParseError("unknown provenance '" + text + "'", 0);
}

PipelineConfig PipelineConfig::defaults(DetectorMode mode)
{
    PipelineConfig config;
    config.mode = mode;
    if (mode == DetectorMode::eight_plane)
    {
        config.grid.cell_size = 0.05;
        config.grid.occupancy_threshold = 1;
        config.morphology.close_radius = 8;
        config.morphology.link_radius = 8;
        config.cluster.min_area = 0.01;
        config.cluster.min_side = 0.2;
    }
    return config;
}

void PipelineConfig::validate() const
{
    ground.validate();
    roi.validate();
    grid.validate();
    cluster.validate();
    ransac.validate();
    if (morphology.close_radius < 0 || morphology.open_radius < 0 || morphology.link_radius < 0 ||
        (morphology.connectivity != 4 && morphology.connectivity != 8))
    {
        throw ConfigError("morphology: radii must be >= 0 and connectivity 4 or 8");
    }
    if (!(crop_margin >= 0.0))
    {
        throw ConfigError("crop_margin must be >= 0");
    }
    if (!(heading.grid_tolerance_cells > 0.0) || !(heading.raw_tolerance > 0.0) || !(heading.visible_side_min > 0.0) ||
        !(heading.max_end_face_width > 0.0) || !(heading.min_side_depth >= 0.0) || !(heading.max_normal_angle > 0.0) ||
        !(heading.corner_angle_tolerance > 0.0))
    {
        throw ConfigError("heading parameters must be positive");
    }
}

PointCloud crop_cloud(const PointCloud& cloud, const Cluster& cluster, const Plane3& ground, const GridConfig& grid,
                      double margin)
{
    if (cluster.cells.empty())
    {
        throw PreconditionError("crop_cloud: empty cluster");
    }
    // Compared in cell units with the same arithmetic as the binning, so a zero margin
    // returns exactly the points of the bbox cells.
    const double cs = grid.cell_size;
    const double m = margin / cs;
    const double c0 = cluster.bbox.min_col - m;
    const double c1 = cluster.bbox.max_col + 1 + m;
    const double r0 = cluster.bbox.min_row - m;
    const double r1 = cluster.bbox.max_row + 1 + m;

    const GroundFrame frame(ground);
    PointCloud out;
    out.frame_id = cloud.frame_id;
    out.timestamp = cloud.timestamp;
    for (const auto& p : cloud.points)
    {
        const Eigen::Vector2d uv = frame.project(p.position());
        const double c = (uv.x() - grid.x_min) / cs;
        const double r = (uv.y() - grid.y_min) / cs;
        if (c >= c0 && c < c1 && r >= r0 && r < r1)
        {
            out.points.push_back(p);
        }
    }
    return out;
}

namespace
{

struct Extent
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double size() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

// Grows the extent symmetrically to at least `min_size`.
void clamp_extent(Extent& e, double min_size)
{
    if (e.size() < min_size)
    {
        const double m = e.mid();
        e.lo = m - 0.5 * min_size;
        e.hi = m + 0.5 * min_size;
    }
}

// Grows the extent to `depth` on the side away from the origin.
void extend_away(Extent& e, double depth)
{
    if (e.size() >= depth)
    {
        return;
    }
    if (e.mid() >= 0.0)
    {
        e.hi = e.lo + depth;
    }
    else
    {
        e.lo = e.hi - depth;
    }
}

// Ego-frame yaw of a ground-frame direction.
double ego_yaw(const GroundFrame& frame, const Eigen::Vector2d& axis)
{
    const Eigen::Vector3d a = axis.x() * frame.u_axis() + axis.y() * frame.v_axis();
    return std::atan2(a.y(), a.x());
}

} // namespace

OrientedBox3 box_from_plane(const PointCloud& subcloud, const Plane3& face, const Plane3& ground, double min_extent,
                            double max_end_face_width, double side_depth)
{
    if (subcloud.empty())
    {
        throw PreconditionError("box_from_plane: empty subcloud");
    }
    const GroundFrame frame(ground);
    Eigen::Vector2d normal(face.normal.dot(frame.u_axis()), face.normal.dot(frame.v_axis()));
    if (!(normal.norm() > 1e-9))
    {
        throw PreconditionError("box_from_plane: face is not vertical");
    }
    normal.normalize();
    const Eigen::Vector2d along(-normal.y(), normal.x());
    const Eigen::Vector3d origin = frame.from_ground(0.0, 0.0, 0.0);
    // Face position along the normal, in ground-frame coordinates.
    const double face_s = -(face.offset + face.normal.dot(origin)) / (face.normal.dot(normal.x() * frame.u_axis() +
                                                                                      normal.y() * frame.v_axis()));

    Extent s;
    Extent t;
    Extent h;
    for (const auto& p : subcloud.points)
    {
        const Eigen::Vector3d g = frame.to_ground(p.position());
        const Eigen::Vector2d uv(g.x(), g.y());
        s.add(normal.dot(uv));
        t.add(along.dot(uv));
        h.add(g.z());
    }
    // The fitted face is one side of the box: snap the nearer bound onto it.
    if (std::abs(face_s - s.lo) <= std::abs(face_s - s.hi))
    {
        s.lo = face_s;
        s.hi = std::max(s.hi, face_s);
    }
    else
    {
        s.hi = face_s;
        s.lo = std::min(s.lo, face_s);
    }
    const bool side_face = t.size() > max_end_face_width && t.size() > s.size();
    if (side_face)
    {
        extend_away(s, side_depth);
    }
    clamp_extent(s, min_extent);
    clamp_extent(t, min_extent);
    clamp_extent(h, min_extent);

    const Eigen::Vector2d c = s.mid() * normal + t.mid() * along;
    OrientedBox3 box;
    box.center = frame.from_ground(c.x(), c.y(), h.mid());
    box.height = h.size();
    box.heading_valid = true;
    box.height_is_lower_bound = false;
    if (side_face)
    {
        box.yaw = wrap_half_turn(ego_yaw(frame, along));
        box.length = t.size();
        box.width = s.size();
    }
    else
    {
        box.yaw = wrap_half_turn(ego_yaw(frame, normal));
        box.length = s.size();
        box.width = t.size();
    }
    return box;
}

OrientedBox3 box_from_heading(const PointCloud& subcloud, std::optional<double> yaw, const Plane3& ground,
                              double cell_size, double side_depth)
{
    if (subcloud.empty())
    {
        throw PreconditionError("box_from_heading: empty subcloud");
    }
    const GroundFrame frame(ground);
    const double angle = yaw ? *yaw : 0.0;
    const Eigen::Vector2d along(std::cos(angle), std::sin(angle));
    const Eigen::Vector2d across(-along.y(), along.x());

    Extent a;
    Extent b;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : subcloud.points)
    {
        const Eigen::Vector3d g = frame.to_ground(p.position());
        const Eigen::Vector2d uv(g.x(), g.y());
        a.add(along.dot(uv));
        b.add(across.dot(uv));
        top = std::max(top, g.z());
    }
    extend_away(b, side_depth);
    clamp_extent(a, cell_size);
    clamp_extent(b, cell_size);
    const double height = std::max(top, cell_size);

    const Eigen::Vector2d c = a.mid() * along + b.mid() * across;
    OrientedBox3 box;
    box.center = frame.from_ground(c.x(), c.y(), 0.5 * height);
    box.length = a.size();
    box.width = b.size();
    box.height = height;
    box.heading_valid = yaw.has_value();
    box.yaw = yaw ? wrap_half_turn(ego_yaw(frame, along)) : 0.0;
    box.height_is_lower_bound = true;
    return box;
}

FrontEnd run_front_end(const PointCloud& cloud, const PipelineConfig& config)
{
    FrontEnd out;
    const auto segmentation = remove_ground(cloud, config.ground);
    out.ground = segmentation.ground;
    out.filtered = filter_by_roi(segmentation.nonground, out.ground, config.roi);
    OccupancyGrid grid = project_to_grid(out.filtered, out.ground, config.grid);
    if (config.morphology.close_radius > 0)
    {
        grid = morphology(grid, MorphOp::close, config.morphology.close_radius);
    }
    if (config.morphology.open_radius > 0)
    {
        grid = morphology(grid, MorphOp::open, config.morphology.open_radius);
    }
    out.clusters = filter_clusters(linked_components(grid, config.morphology.link_radius, config.morphology.connectivity),
                                   config.cluster,
                                   config.grid.cell_size);
    out.grid = std::move(grid);
    return out;
}

namespace
{

std::vector<Eigen::Vector3d> positions(const PointCloud& cloud)
{
    std::vector<Eigen::Vector3d> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud.points)
    {
        out.push_back(p.position());
    }
    return out;
}

struct FaceHeading
{
    double yaw = 0.0;
    bool vehicle_side = false;
};

// Heading of a single visible face traced by `line`: along the face when the face is long enough
// to be a vehicle side, otherwise across it.
FaceHeading heading_from_face(const Line2& line, const std::vector<Eigen::Vector2d>& points,
                              double max_end_face_width)
{
    Extent along;
    Extent across;
    for (const auto& p : points)
    {
        along.add(line.direction.dot(p));
        across.add(line.normal().dot(p));
    }
    const double angle = line.angle();
    if (along.size() > max_end_face_width && along.size() > across.size())
    {
        return {angle, true};
    }
    return {angle + kPi / 2.0, false};
}

} // namespace

DetectionFrame detect_16(const PointCloud& cloud, const PipelineConfig& config)
{
    config.validate();
    DetectionFrame frame;
    frame.timestamp = cloud.timestamp;
    if (cloud.empty())
    {
        return frame;
    }
    const FrontEnd front = run_front_end(cloud, config);
    RansacParams ransac = config.ransac;
    ransac.inlier_tolerance = config.heading.raw_tolerance;

    for (const auto& cluster : front.clusters)
    {
        const PointCloud crop = crop_cloud(front.filtered, cluster, front.ground, config.grid, config.crop_margin);
        if (crop.empty())
        {
            continue;
        }
        Detection det;
        try
        {
            const auto fit = fit_vertical_plane(positions(crop), front.ground, ransac, config.heading.max_normal_angle);
            det.box = box_from_plane(crop, fit.plane, front.ground, config.grid.cell_size,
                                     config.heading.max_end_face_width, config.heading.min_side_depth);
            det.provenance = Provenance::plane_fit;
        }
        catch (const Error&)
        {
            det.box = box_from_heading(crop, std::nullopt, front.ground, config.grid.cell_size);
            det.provenance = Provenance::no_heading;
        }
        frame.detections.push_back(det);
    }
    return frame;
}

DetectionFrame detect_8(const PointCloud& cloud, const PipelineConfig& config)
{
    config.validate();
    DetectionFrame frame;
    frame.timestamp = cloud.timestamp;
    if (cloud.empty())
    {
        return frame;
    }
    const FrontEnd front = run_front_end(cloud, config);
    const double cs = config.grid.cell_size;
    const GroundFrame ground_frame(front.ground);

    for (const auto& cluster : front.clusters)
    {
        const PointCloud crop = crop_cloud(front.filtered, cluster, front.ground, config.grid, config.crop_margin);
        if (crop.empty())
        {
            continue;
        }
        std::optional<double> yaw;
        double side_depth = 0.0;
        Provenance provenance = Provenance::no_heading;
        if (classify_cluster_size(cluster, config.cluster, cs) == SizeClass::vehicle_like)
        {
            try
            {
                const Eigen::Vector2d sides = cluster.bbox_sides(cs);
                if (sides.minCoeff() > config.heading.visible_side_min)
                {
                    // Hull vertices are cell centers, so their span is one cell shorter than the cell bbox.
                    const auto rect = rectangle_from_hull(convex_hull(cluster.metric_points),
                                                          config.heading.visible_side_min - cs,
                                                          config.heading.corner_angle_tolerance);
                    if (rect)
                    {
                        yaw = rect->yaw;
                        provenance = Provenance::rectangle;
                    }
                }
                if (!yaw)
                {
                    RansacParams ransac = config.ransac;
                    std::vector<Eigen::Vector2d> samples;
                    if (config.heading.use_raw_points)
                    {
                        ransac.inlier_tolerance = config.heading.raw_tolerance;
                        for (const auto& p : crop.points)
                        {
                            samples.push_back(ground_frame.project(p.position()));
                        }
                    }
                    else
                    {
                        ransac.inlier_tolerance = config.heading.grid_tolerance_cells * cs;
                        samples = cluster.metric_points;
                    }
                    const auto fit = ransac_line(samples, ransac);
                    const auto face = heading_from_face(fit.line, samples, config.heading.max_end_face_width);
                    yaw = face.yaw;
                    if (face.vehicle_side)
                    {
                        side_depth = config.heading.min_side_depth;
                    }
                    provenance = Provenance::ransac_line;
                }
            }
            catch (const Error&)
            {
                yaw.reset();
                side_depth = 0.0;
                provenance = Provenance::no_heading;
            }
        }
        Detection det;
        det.box = box_from_heading(crop, yaw, front.ground, cs, side_depth);
        det.provenance = provenance;
        frame.detections.push_back(det);
    }
    return frame;
}

DetectionFrame detect(const PointCloud& cloud, const PipelineConfig& config)
{
    return config.mode == DetectorMode::sixteen_plane ? detect_16(cloud, config) : detect_8(cloud, config);
}

} // namespace sparse_lidar
