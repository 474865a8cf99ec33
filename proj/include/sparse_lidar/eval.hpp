#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sparse_lidar/detect.hpp"
#include "sparse_lidar/simulate.hpp"

namespace sparse_lidar
{

struct MatchedPair
{
    int truth_id = 0;
    std::size_t detection_index = 0;
    double center_distance = 0.0; ///< footprint centers, meters
};

/// Greedy matching on footprint center distance, nearest pair first. Ties break on (truth id,
/// detection index). Pairs farther apart than max_dist stay unmatched. Structure entries are skipped.
std::vector<MatchedPair> match_detections(const GroundTruthRecord& truth, const DetectionFrame& frame,
                                          double max_dist);

struct ErrorRow
{
    double timestamp = 0.0;
    int obstacle_id = 0;
    bool matched = false;
    double distance_true = 0.0;
    double distance_est = 0.0;   ///< nearest footprint point of the matched box
    double center_true = 0.0;
    double center_est = 0.0;
    double heading_true = 0.0;   ///< radians, relative yaw wrapped to [-pi/2, pi/2)
    double heading_est = 0.0;    ///< radians, wrapped to [-pi/2, pi/2)
    bool heading_valid = false;
    Provenance provenance = Provenance::no_heading;
    double footprint_iou = 0.0;  ///< detected vs true footprint

    double distance_error() const { return distance_est - distance_true; }
    /// Degrees, modulo 180, in [0, 90].
    double heading_error_deg() const;
    /// Degrees, wrapped to [-90, 90).
    double heading_signed_error_deg() const;
};

struct ErrorSummary
{
    std::size_t frames = 0;
    std::size_t rows = 0;
    std::size_t matched = 0;
    std::size_t misses = 0;
    std::size_t heading_rows = 0;             ///< matched rows with a valid heading
    double mean_abs_distance_error = 0.0;     ///< m
    double mean_signed_distance_error = 0.0;  ///< m
    double mean_abs_center_error = 0.0;       ///< m, center-distance definition
    double mean_abs_heading_error = 0.0;      ///< degrees
    double mean_signed_heading_error = 0.0;   ///< degrees
    double max_abs_heading_error = 0.0;       ///< degrees
    double mean_footprint_iou = 0.0;
};

struct ErrorSeries
{
    std::vector<ErrorRow> rows;
    ErrorSummary summary;
};

/// Aggregates over matched rows; means are 0 when nothing qualifies.
ErrorSummary summarize(const std::vector<ErrorRow>& rows, std::size_t frames);

/// Pairs truth and detection frames by index. Throws DomainError when lengths differ or a
/// timestamp pair differs by more than `time_tolerance`.
ErrorSeries compute_error_series(const std::vector<GroundTruthRecord>& truth,
                                 const std::vector<DetectionFrame>& detections, double max_dist,
                                 double time_tolerance = 1e-6);

/// Intersection over union of two box footprints on the ground plane.
double footprint_iou(const OrientedBox3& a, const OrientedBox3& b);

struct CrossPipelineRow
{
    double timestamp = 0.0;
    int obstacle_id = 0;
    double iou = 0.0;
};

/// For each truth obstacle matched in both frames, the IoU of the two detected footprints.
std::vector<CrossPipelineRow> cross_pipeline_iou(const GroundTruthRecord& truth, const DetectionFrame& a,
                                                 const DetectionFrame& b, double max_dist);

inline constexpr const char* kErrorSeriesHeader =
    "t,obstacle_id,matched,distance_true,distance_est,distance_error,center_true,center_est,heading_true_deg,"
    "heading_est_deg,heading_error_deg,heading_signed_error_deg,heading_valid,provenance,footprint_iou";

std::string format_error_series(const ErrorSeries& series);
std::string format_summary(const ErrorSummary& summary);
/// Whitespace-separated columns for gnuplot, one block per obstacle id; NaN marks misses.
std::string format_gnuplot(const ErrorSeries& series);
/// Human-readable aggregate table.
std::string format_summary_table(const ErrorSummary& summary, const std::string& title);

/// One JSON object per line: {"timestamp": t, "detections": [{cx, cy, cz, length, width, height,
/// yaw, heading_valid, height_is_lower_bound, provenance}, ...]}.
std::string format_detections(const std::vector<DetectionFrame>& frames);
std::vector<DetectionFrame> parse_detections(const std::string& text, const std::string& source = "<memory>");

void write_detections(const std::vector<DetectionFrame>& frames, const std::filesystem::path& path);
std::vector<DetectionFrame> read_detections(const std::filesystem::path& path);

} // namespace sparse_lidar
