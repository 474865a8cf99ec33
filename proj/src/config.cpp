#include "sparse_lidar/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "detail/text.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

LidarModel LidarConfig::model() const
{
    LidarModel m = LidarModel::uniform(rings, deg2rad(min_elevation_deg), deg2rad(max_elevation_deg));
    m.azimuth_step = deg2rad(azimuth_step_deg);
    m.max_range = max_range;
    m.range_noise_sigma = noise_sigma;
    m.mount_height = mount_height;
    return m;
}

const PipelineConfig& AppConfig::pipeline(DetectorMode mode) const
{
    return mode == DetectorMode::eight_plane ? eight_plane : sixteen_plane;
}

void AppConfig::validate() const
{
    sixteen_plane.validate();
    eight_plane.validate();
    if (lidar.rings != 4 && lidar.rings != 8 && lidar.rings != 16 && lidar.rings != 32)
    {
        throw ConfigError("lidar.rings must be 4, 8, 16 or 32");
    }
    if (!(lidar.max_elevation_deg > lidar.min_elevation_deg))
    {
        throw ConfigError("lidar: max_elevation_deg must exceed min_elevation_deg");
    }
    lidar.model().validate();
    scenario.validate();
    if (!(eval.max_match_distance > 0.0) || !(eval.time_tolerance >= 0.0))
    {
        throw ConfigError("eval: max_match_distance must be positive, time_tolerance non-negative");
    }
}

namespace
{

std::string shortest(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

// Degrees are stored as radians; 12 digits hide the conversion round-off.
std::string degrees(double rad)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", rad2deg(rad));
    return buf;
}

struct Binding
{
    std::string section;
    std::string key;
    std::function<void(AppConfig&, const std::string&)> set;
    std::function<std::string(const AppConfig&)> get;
};

double to_double(const std::string& text)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    {
        throw ConfigError("expected a number, got '" + text + "'");
    }
    return v;
}

template <typename Int>
Int to_integer(const std::string& text)
{
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
    {
        throw ConfigError("expected an integer, got '" + text + "'");
    }
    return v;
}

bool to_bool(const std::string& text)
{
    if (text == "true")
    {
        return true;
    }
    if (text == "false")
    {
        return false;
    }
    throw ConfigError("expected true or false, got '" + text + "'");
}

class Table
{
  public:
    std::vector<Binding> bindings;

    // A pipeline value: the shared form writes both detectors, the per-mode form one.
    template <typename Access>
    void shared(const std::string& section, const std::string& key, Access access)
    {
        add_pipeline(section, key, access, {DetectorMode::sixteen_plane, DetectorMode::eight_plane});
    }

    template <typename Access>
    void per_mode(const std::string& section, const std::string& key, Access access)
    {
        for (const auto mode : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
        {
            add_pipeline(section + "." + to_string(mode), key, access, {mode});
        }
    }

    template <typename Access>
    void shared_degrees(const std::string& section, const std::string& key, Access access)
    {
        bindings.push_back(Binding{
            section, key,
            [access](AppConfig& c, const std::string& v) {
                access(c.sixteen_plane) = deg2rad(to_double(v));
                access(c.eight_plane) = deg2rad(to_double(v));
            },
            [access](const AppConfig& c) { return degrees(access(c.sixteen_plane)); }});
    }

  private:
    template <typename Access>
    void add_pipeline(const std::string& section, const std::string& key, Access access,
                      std::vector<DetectorMode> modes)
    {
        const auto pick = [](auto& c, DetectorMode m) -> auto& {
            return m == DetectorMode::eight_plane ? c.eight_plane : c.sixteen_plane;
        };
        bindings.push_back(Binding{
            section, key,
            [access, modes, pick](AppConfig& c, const std::string& v) {
                for (const auto m : modes)
                {
                    assign(access(pick(c, m)), v);
                }
            },
            [access, modes, pick](const AppConfig& c) {
                return render(access(pick(c, modes.front())));
            }});
    }

    static void assign(double& dst, const std::string& v) { dst = to_double(v); }
    static void assign(int& dst, const std::string& v) { dst = to_integer<int>(v); }
    static void assign(std::uint64_t& dst, const std::string& v) { dst = to_integer<std::uint64_t>(v); }
    static void assign(bool& dst, const std::string& v) { dst = to_bool(v); }

    static std::string render(double v) { return shortest(v); }
    static std::string render(int v) { return std::to_string(v); }
    static std::string render(std::uint64_t v) { return std::to_string(v); }
    static std::string render(bool v) { return v ? "true" : "false"; }
};

const Table& table()
{
    static const Table t = [] {
        Table t;
        t.shared("ground", "num_lpr", [](auto& p) -> auto& { return p.ground.num_lpr; });
        t.shared("ground", "seed_margin", [](auto& p) -> auto& { return p.ground.seed_margin; });
        t.shared("ground", "dist_threshold", [](auto& p) -> auto& { return p.ground.dist_threshold; });
        t.shared("ground", "num_iterations", [](auto& p) -> auto& { return p.ground.num_iterations; });
        t.shared("ground", "seed_range", [](auto& p) -> auto& { return p.ground.seed_range; });

        t.shared("roi", "max_height", [](auto& p) -> auto& { return p.roi.max_height; });
        t.shared("roi", "lateral_half_width", [](auto& p) -> auto& { return p.roi.lateral_half_width; });
        t.shared("roi", "forward_min", [](auto& p) -> auto& { return p.roi.forward_min; });
        t.shared("roi", "forward_max", [](auto& p) -> auto& { return p.roi.forward_max; });

        t.per_mode("grid", "cell_size", [](auto& p) -> auto& { return p.grid.cell_size; });
        t.per_mode("grid", "x_min", [](auto& p) -> auto& { return p.grid.x_min; });
        t.per_mode("grid", "x_max", [](auto& p) -> auto& { return p.grid.x_max; });
        t.per_mode("grid", "y_min", [](auto& p) -> auto& { return p.grid.y_min; });
        t.per_mode("grid", "y_max", [](auto& p) -> auto& { return p.grid.y_max; });
        t.per_mode("grid", "occupancy_threshold",
                   [](auto& p) -> auto& { return p.grid.occupancy_threshold; });

        t.per_mode("morphology", "close_radius", [](auto& p) -> auto& { return p.morphology.close_radius; });
        t.per_mode("morphology", "open_radius", [](auto& p) -> auto& { return p.morphology.open_radius; });
        t.per_mode("morphology", "link_radius", [](auto& p) -> auto& { return p.morphology.link_radius; });
        t.per_mode("morphology", "connectivity", [](auto& p) -> auto& { return p.morphology.connectivity; });

        t.per_mode("cluster", "min_area", [](auto& p) -> auto& { return p.cluster.min_area; });
        t.per_mode("cluster", "max_area", [](auto& p) -> auto& { return p.cluster.max_area; });
        t.per_mode("cluster", "min_side", [](auto& p) -> auto& { return p.cluster.min_side; });
        t.per_mode("cluster", "max_side", [](auto& p) -> auto& { return p.cluster.max_side; });
        t.per_mode("cluster", "pedestrian_max_side",
                   [](auto& p) -> auto& { return p.cluster.pedestrian_max_side; });

        t.per_mode("detect", "crop_margin", [](auto& p) -> auto& { return p.crop_margin; });

        t.shared("ransac", "max_iterations", [](auto& p) -> auto& { return p.ransac.max_iterations; });
        t.shared("ransac", "inlier_tolerance", [](auto& p) -> auto& { return p.ransac.inlier_tolerance; });
        t.shared("ransac", "min_inliers", [](auto& p) -> auto& { return p.ransac.min_inliers; });
        t.shared("ransac", "seed", [](auto& p) -> auto& { return p.ransac.rng_seed; });

        t.shared("heading", "grid_tolerance_cells",
                 [](auto& p) -> auto& { return p.heading.grid_tolerance_cells; });
        t.shared("heading", "raw_tolerance", [](auto& p) -> auto& { return p.heading.raw_tolerance; });
        t.shared("heading", "use_raw_points", [](auto& p) -> auto& { return p.heading.use_raw_points; });
        t.shared_degrees("heading", "max_normal_angle_deg",
                         [](auto& p) -> auto& { return p.heading.max_normal_angle; });
        t.shared("heading", "visible_side_min", [](auto& p) -> auto& { return p.heading.visible_side_min; });
        t.shared_degrees("heading", "corner_angle_tolerance_deg",
                         [](auto& p) -> auto& { return p.heading.corner_angle_tolerance; });
        t.shared("heading", "max_end_face_width",
                 [](auto& p) -> auto& { return p.heading.max_end_face_width; });
        t.shared("heading", "min_side_depth", [](auto& p) -> auto& { return p.heading.min_side_depth; });

        t.bindings.push_back(Binding{
            "decimation", "keep",
            [](AppConfig& c, const std::string& v) { c.decimation_keep = parse_ring_selection(v); },
            [](const AppConfig& c) { return to_string(c.decimation_keep); }});

        const auto lidar = [&t](const std::string& key, auto member) {
            t.bindings.push_back(Binding{
                "lidar", key,
                [member](AppConfig& c, const std::string& v) {
                    if constexpr (std::is_same_v<decltype(c.lidar.*member), int&>)
                    {
                        c.lidar.*member = to_integer<int>(v);
                    }
                    else
                    {
                        c.lidar.*member = to_double(v);
                    }
                },
                [member](const AppConfig& c) {
                    if constexpr (std::is_same_v<decltype(c.lidar.*member), const int&>)
                    {
                        return std::to_string(c.lidar.*member);
                    }
                    else
                    {
                        return shortest(c.lidar.*member);
                    }
                }});
        };
        lidar("rings", &LidarConfig::rings);
        lidar("min_elevation_deg", &LidarConfig::min_elevation_deg);
        lidar("max_elevation_deg", &LidarConfig::max_elevation_deg);
        lidar("azimuth_step_deg", &LidarConfig::azimuth_step_deg);
        lidar("max_range", &LidarConfig::max_range);
        lidar("noise_sigma", &LidarConfig::noise_sigma);
        lidar("mount_height", &LidarConfig::mount_height);

        const auto scenario = [&t](const std::string& key, auto member, bool in_degrees = false) {
            t.bindings.push_back(Binding{
                "scenario", key,
                [member, in_degrees](AppConfig& c, const std::string& v) {
                    if constexpr (std::is_same_v<decltype(c.scenario.*member), int&>)
                    {
                        c.scenario.*member = to_integer<int>(v);
                    }
                    else
                    {
                        c.scenario.*member = in_degrees ? deg2rad(to_double(v)) : to_double(v);
                    }
                },
                [member, in_degrees](const AppConfig& c) {
                    if constexpr (std::is_same_v<decltype(c.scenario.*member), const int&>)
                    {
                        return std::to_string(c.scenario.*member);
                    }
                    else
                    {
                        return in_degrees ? degrees(c.scenario.*member) : shortest(c.scenario.*member);
                    }
                }});
        };
        scenario("duration", &ScenarioParams::duration);
        scenario("frames", &ScenarioParams::frames);
        scenario("ego_speed", &ScenarioParams::ego_speed);
        scenario("lateral_offset", &ScenarioParams::lateral_offset);
        scenario("start_distance", &ScenarioParams::start_distance);
        scenario("end_distance", &ScenarioParams::end_distance);
        scenario("chicane_gap", &ScenarioParams::chicane_gap);
        scenario("chicane_amplitude_deg", &ScenarioParams::chicane_amplitude, true);
        scenario("chicane_period", &ScenarioParams::chicane_period);
        scenario("van_length", &ScenarioParams::van_length);
        scenario("van_width", &ScenarioParams::van_width);
        scenario("van_height", &ScenarioParams::van_height);
        scenario("knot_step", &ScenarioParams::knot_step);

        t.bindings.push_back(Binding{
            "eval", "max_match_distance",
            [](AppConfig& c, const std::string& v) { c.eval.max_match_distance = to_double(v); },
            [](const AppConfig& c) { return shortest(c.eval.max_match_distance); }});
        t.bindings.push_back(Binding{
            "eval", "time_tolerance", [](AppConfig& c, const std::string& v) { c.eval.time_tolerance = to_double(v); },
            [](const AppConfig& c) { return shortest(c.eval.time_tolerance); }});
        t.bindings.push_back(Binding{
            "simulate", "seed", [](AppConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); },
            [](const AppConfig& c) { return std::to_string(c.seed); }});
        return t;
    }();
    return t;
}

} // namespace

AppConfig parse_config(const std::string& text, const std::string& source)
{
    std::map<std::pair<std::string, std::string>, const Binding*> index;
    std::set<std::string> sections;
    for (const auto& b : table().bindings)
    {
        index[{b.section, b.key}] = &b;
        sections.insert(b.section);
    }

    AppConfig config;
    std::set<std::pair<std::string, std::string>> seen;
    std::string section;
    const auto lines = detail::read_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i)
    {
        const auto where = source + ":" + std::to_string(i + 1) + ": ";
        std::string_view line = lines[i];
        if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos)
        {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty())
        {
            continue;
        }
        if (line.front() == '[')
        {
            if (line.back() != ']')
            {
                throw ConfigError(where + "malformed section header");
            }
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!sections.contains(section))
            {
                throw ConfigError(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
        {
            throw ConfigError(where + "expected 'key = value'");
        }
        if (section.empty())
        {
            throw ConfigError(where + "key outside any section");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        const auto it = index.find({section, key});
        if (it == index.end())
        {
            throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        }
        if (!seen.insert({section, key}).second)
        {
            throw ConfigError(where + "duplicate key '" + key + "'");
        }
        try
        {
            it->second->set(config, value);
        }
        catch (const Error& e)
        {
            throw ConfigError(where + section + "." + key + ": " + e.what());
        }
    }
    try
    {
        config.validate();
    }
    catch (const Error& e)
    {
        throw ConfigError(source + ": " + e.what());
    }
    return config;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::string text;
    try
    {
        text = detail::read_text_file(path, "config file");
    }
    catch (const IoError& e)
    {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

std::string format_config(const AppConfig& config)
{
    std::vector<std::string> order;
    for (const auto& b : table().bindings)
    {
        if (std::find(order.begin(), order.end(), b.section) == order.end())
        {
            order.push_back(b.section);
        }
    }
    std::string out;
    for (const auto& section : order)
    {
        out += (out.empty() ? "[" : "\n[") + section + "]\n";
        for (const auto& b : table().bindings)
        {
            if (b.section == section)
            {
                out += b.key + " = " + b.get(config) + "\n";
            }
        }
    }
    return out;
}

} // namespace sparse_lidar
