#include "sparse_lidar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <json.hpp>

#include "detail/text.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

using detail::format_number;

std::vector<MatchedPair> match_detections(const GroundTruthRecord& truth, const DetectionFrame& frame,
                                          double max_dist)
{
    struct Candidate
    {
        double dist;
        int truth_id;
        std::size_t truth_index;
        std::size_t det_index;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < truth.obstacles.size(); ++i)
    {
        const auto& o = truth.obstacles[i];
        if (o.cls == ObstacleClass::structure)
        {
            continue;
        }
        for (std::size_t j = 0; j < frame.detections.size(); ++j)
        {
            const double d = (frame.detections[j].box.center.head<2>() - o.box.center.head<2>()).norm();
            if (d <= max_dist)
            {
                candidates.push_back({d, o.id, i, j});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist, a.truth_id, a.det_index) < std::tie(b.dist, b.truth_id, b.det_index);
    });

    std::vector<bool> truth_used(truth.obstacles.size(), false);
    std::vector<bool> det_used(frame.detections.size(), false);
    std::vector<MatchedPair> pairs;
    for (const auto& c : candidates)
    {
        if (truth_used[c.truth_index] || det_used[c.det_index])
        {
            continue;
        }
        truth_used[c.truth_index] = true;
        det_used[c.det_index] = true;
        pairs.push_back({c.truth_id, c.det_index, c.dist});
    }
    return pairs;
}

double ErrorRow::heading_error_deg() const
{
    return rad2deg(heading_difference(heading_est, heading_true));
}

double ErrorRow::heading_signed_error_deg() const
{
    return rad2deg(wrap_half_turn(heading_est - heading_true));
}

namespace
{

using Polygon = std::vector<Eigen::Vector2d>;

double polygon_area(const Polygon& poly)
{
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
    {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        twice += a.x() * b.y() - a.y() * b.x();
    }
    return 0.5 * std::abs(twice);
}

// Sutherland-Hodgman: `subject` clipped by the convex CCW polygon `clip`.
Polygon clip_convex(Polygon subject, const Polygon& clip)
{
    for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i)
    {
        const Eigen::Vector2d a = clip[i];
        const Eigen::Vector2d b = clip[(i + 1) % clip.size()];
        const auto side = [&](const Eigen::Vector2d& p) {
            return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        };
        Polygon out;
        for (std::size_t k = 0; k < subject.size(); ++k)
        {
            const Eigen::Vector2d p = subject[k];
            const Eigen::Vector2d q = subject[(k + 1) % subject.size()];
            const double sp = side(p);
            const double sq = side(q);
            if (sp >= 0.0)
            {
                out.push_back(p);
            }
            if ((sp >= 0.0) != (sq >= 0.0))
            {
                out.push_back(p + (q - p) * (sp / (sp - sq)));
            }
        }
        subject = std::move(out);
    }
    return subject;
}

} // namespace

double footprint_iou(const OrientedBox3& a, const OrientedBox3& b)
{
    const auto fa = a.footprint();
    const auto fb = b.footprint();
    const Polygon pa(fa.begin(), fa.end());
    const Polygon pb(fb.begin(), fb.end());
    const double area_a = polygon_area(pa);
    const double area_b = polygon_area(pb);
    const Polygon inter = clip_convex(pa, pb);
    const double overlap = inter.size() >= 3 ? polygon_area(inter) : 0.0;
    const double uni = area_a + area_b - overlap;
    return uni > 0.0 ? overlap / uni : 0.0;
}

ErrorSummary summarize(const std::vector<ErrorRow>& rows, std::size_t frames)
{
    ErrorSummary s;
    s.frames = frames;
    s.rows = rows.size();
    for (const auto& row : rows)
    {
        if (!row.matched)
        {
            ++s.misses;
            continue;
        }
        ++s.matched;
        s.mean_abs_distance_error += std::abs(row.distance_error());
        s.mean_signed_distance_error += row.distance_error();
        s.mean_abs_center_error += std::abs(row.center_est - row.center_true);
        s.mean_footprint_iou += row.footprint_iou;
        if (row.heading_valid)
        {
            ++s.heading_rows;
            s.mean_abs_heading_error += row.heading_error_deg();
            s.mean_signed_heading_error += row.heading_signed_error_deg();
            s.max_abs_heading_error = std::max(s.max_abs_heading_error, row.heading_error_deg());
        }
    }
    if (s.matched > 0)
    {
        const auto n = static_cast<double>(s.matched);
        s.mean_abs_distance_error /= n;
        s.mean_signed_distance_error /= n;
        s.mean_abs_center_error /= n;
        s.mean_footprint_iou /= n;
    }
    if (s.heading_rows > 0)
    {
        s.mean_abs_heading_error /= static_cast<double>(s.heading_rows);
        s.mean_signed_heading_error /= static_cast<double>(s.heading_rows);
    }
    return s;
}

ErrorSeries compute_error_series(const std::vector<GroundTruthRecord>& truth,
                                 const std::vector<DetectionFrame>& detections, double max_dist,
                                 double time_tolerance)
{
    if (truth.size() != detections.size())
    {
        throw DomainError("eval: " + std::to_string(truth.size()) + " truth frames but " +
                          std::to_string(detections.size()) + " detection frames");
    }
    ErrorSeries series;
    for (std::size_t k = 0; k < truth.size(); ++k)
    {
        const auto& gt = truth[k];
        const auto& frame = detections[k];
        if (!(std::abs(gt.timestamp - frame.timestamp) <= time_tolerance))
        {
            throw DomainError("eval: timestamp mismatch at frame " + std::to_string(k) + ": truth " +
                              format_number(gt.timestamp) + ", detections " + format_number(frame.timestamp));
        }
        const auto pairs = match_detections(gt, frame, max_dist);
        std::vector<const ObstacleTruth*> ordered;
        for (const auto& o : gt.obstacles)
        {
            if (o.cls != ObstacleClass::structure)
            {
                ordered.push_back(&o);
            }
        }
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const ObstacleTruth* a, const ObstacleTruth* b) { return a->id < b->id; });
        for (const auto* o : ordered)
        {
            ErrorRow row;
            row.timestamp = gt.timestamp;
            row.obstacle_id = o->id;
            row.distance_true = o->dist_nearest;
            row.center_true = o->dist_center;
            row.heading_true = wrap_half_turn(o->rel_heading);
            const auto it = std::find_if(pairs.begin(), pairs.end(),
                                         [&](const MatchedPair& p) { return p.truth_id == o->id; });
            if (it != pairs.end())
            {
                const Detection& det = frame.detections[it->detection_index];
                row.matched = true;
                row.distance_est = footprint_distance(det.box);
                row.center_est = det.box.center.head<2>().norm();
                row.heading_est = wrap_half_turn(det.box.yaw);
                row.heading_valid = det.box.heading_valid;
                row.provenance = det.provenance;
                row.footprint_iou = footprint_iou(det.box, o->box);
            }
            series.rows.push_back(row);
        }
    }
    series.summary = summarize(series.rows, truth.size());
    return series;
}

std::vector<CrossPipelineRow> cross_pipeline_iou(const GroundTruthRecord& truth, const DetectionFrame& a,
                                                 const DetectionFrame& b, double max_dist)
{
    const auto pa = match_detections(truth, a, max_dist);
    const auto pb = match_detections(truth, b, max_dist);
    std::vector<CrossPipelineRow> rows;
    for (const auto& x : pa)
    {
        for (const auto& y : pb)
        {
            if (x.truth_id == y.truth_id)
            {
                rows.push_back({truth.timestamp, x.truth_id,
                                footprint_iou(a.detections[x.detection_index].box, b.detections[y.detection_index].box)});
            }
        }
    }
    std::sort(rows.begin(), rows.end(),
              [](const CrossPipelineRow& l, const CrossPipelineRow& r) { return l.obstacle_id < r.obstacle_id; });
    return rows;
}

std::string format_error_series(const ErrorSeries& series)
{
    std::string out = std::string(kErrorSeriesHeader) + "\n";
    for (const auto& r : series.rows)
    {
        out += format_number(r.timestamp) + "," + std::to_string(r.obstacle_id) + "," + (r.matched ? "1" : "0") + "," +
               format_number(r.distance_true) + ",";
        if (r.matched)
        {
            out += format_number(r.distance_est) + "," + format_number(r.distance_error()) + "," +
                   format_number(r.center_true) + "," + format_number(r.center_est) + "," +
                   format_number(rad2deg(r.heading_true)) + ",";
            if (r.heading_valid)
            {
                out += format_number(rad2deg(r.heading_est)) + "," + format_number(r.heading_error_deg()) + "," +
                       format_number(r.heading_signed_error_deg());
            }
            else
            {
                out += ",,";
            }
            out += std::string(",") + (r.heading_valid ? "1" : "0") + "," + to_string(r.provenance) + "," +
                   format_number(r.footprint_iou);
        }
        else
        {
            out += ",," + format_number(r.center_true) + ",," + format_number(rad2deg(r.heading_true)) + ",,,,0,,";
        }
        out += "\n";
    }
    return out;
}

std::string format_summary(const ErrorSummary& s)
{
    std::string out = "metric,value\n";
    const auto line = [&](const char* name, const std::string& value) { out += std::string(name) + "," + value + "\n"; };
    line("frames", std::to_string(s.frames));
    line("rows", std::to_string(s.rows));
    line("matched", std::to_string(s.matched));
    line("misses", std::to_string(s.misses));
    line("heading_rows", std::to_string(s.heading_rows));
    line("mean_abs_distance_error_m", format_number(s.mean_abs_distance_error));
    line("mean_signed_distance_error_m", format_number(s.mean_signed_distance_error));
    line("mean_abs_center_error_m", format_number(s.mean_abs_center_error));
    line("mean_abs_heading_error_deg", format_number(s.mean_abs_heading_error));
    line("mean_signed_heading_error_deg", format_number(s.mean_signed_heading_error));
    line("max_abs_heading_error_deg", format_number(s.max_abs_heading_error));
    line("mean_footprint_iou", format_number(s.mean_footprint_iou));
    return out;
}

std::string format_gnuplot(const ErrorSeries& series)
{
    std::map<int, std::vector<const ErrorRow*>> blocks;
    for (const auto& r : series.rows)
    {
        blocks[r.obstacle_id].push_back(&r);
    }
    std::string out;
    for (const auto& [id, rows] : blocks)
    {
        if (!out.empty())
        {
            out += "\n\n";
        }
        out += "# obstacle " + std::to_string(id) + "\n";
        out += "# t distance_true distance_est heading_true_deg heading_est_deg heading_error_deg\n";
        for (const auto* r : rows)
        {
            const bool heading = r->matched && r->heading_valid;
            out += format_number(r->timestamp) + " " + format_number(r->distance_true) + " " +
                   (r->matched ? format_number(r->distance_est) : "NaN") + " " + format_number(rad2deg(r->heading_true)) +
                   " " + (heading ? format_number(rad2deg(r->heading_est)) : "NaN") + " " +
                   (heading ? format_number(r->heading_error_deg()) : "NaN") + "\n";
        }
    }
    return out;
}

std::string format_summary_table(const ErrorSummary& s, const std::string& title)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s\n"
                  "  frames                      %zu\n"
                  "  matched / misses            %zu / %zu\n"
                  "  mean |distance error|       %.3f m\n"
                  "  mean signed distance error  %+.3f m\n"
                  "  mean |center error|         %.3f m\n"
                  "  mean |heading error|        %.3f deg (%zu rows)\n"
                  "  mean signed heading error   %+.3f deg\n"
                  "  max |heading error|         %.3f deg\n",
                  title.c_str(), s.frames, s.matched, s.misses, s.mean_abs_distance_error, s.mean_signed_distance_error,
                  s.mean_abs_center_error, s.mean_abs_heading_error, s.heading_rows, s.mean_signed_heading_error,
                  s.max_abs_heading_error);
    return buf;
}

std::string format_detections(const std::vector<DetectionFrame>& frames)
{
    std::string out;
    for (const auto& frame : frames)
    {
        nlohmann::ordered_json record;
        record["timestamp"] = frame.timestamp;
        auto boxes = nlohmann::ordered_json::array();
        for (const auto& det : frame.detections)
        {
            const auto& b = det.box;
            nlohmann::ordered_json j;
            j["cx"] = b.center.x();
            j["cy"] = b.center.y();
            j["cz"] = b.center.z();
            j["length"] = b.length;
            j["width"] = b.width;
            j["height"] = b.height;
            j["yaw"] = b.yaw;
            j["heading_valid"] = b.heading_valid;
            j["height_is_lower_bound"] = b.height_is_lower_bound;
            j["provenance"] = to_string(det.provenance);
            boxes.push_back(std::move(j));
        }
        record["detections"] = std::move(boxes);
        out += record.dump() + "\n";
    }
    return out;
}

std::vector<DetectionFrame> parse_detections(const std::string& text, const std::string& source)
{
    std::vector<DetectionFrame> frames;
    const auto lines = detail::read_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i)
    {
        const std::size_t line_no = i + 1;
        if (detail::trim(lines[i]).empty())
        {
            continue;
        }
        try
        {
            const auto record = nlohmann::json::parse(lines[i]);
            DetectionFrame frame;
            frame.timestamp = record.at("timestamp").get<double>();
            for (const auto& j : record.at("detections"))
            {
                Detection det;
                det.box.center = {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("cz").get<double>()};
                det.box.length = j.at("length").get<double>();
                det.box.width = j.at("width").get<double>();
                det.box.height = j.at("height").get<double>();
                det.box.yaw = j.at("yaw").get<double>();
                det.box.heading_valid = j.at("heading_valid").get<bool>();
                det.box.height_is_lower_bound = j.at("height_is_lower_bound").get<bool>();
                det.provenance = parse_provenance(j.at("provenance").get<std::string>());
                frame.detections.push_back(det);
            }
            frames.push_back(std::move(frame));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ParseError(source + ": " + e.what(), line_no);
        }
        catch (const Error& e)
        {
            throw ParseError(source + ": " + e.what(), line_no);
        }
    }
    return frames;
}

void write_detections(const std::vector<DetectionFrame>& frames, const std::filesystem::path& path)
{
    detail::write_text_file(path, format_detections(frames));
}

std::vector<DetectionFrame> read_detections(const std::filesystem::path& path)
{
    return parse_detections(detail::read_text_file(path, "detections file"), path.string());
}

} // namespace sparse_lidar
