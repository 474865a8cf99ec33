#include "sparse_lidar/cloud_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "detail/text.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{
using detail::format_number;
using detail::parse_double;
using detail::parse_int;
using detail::split;
using detail::trim;

FrameRecord parse_frame(const std::string& text, const std::string& source)
{
    FrameRecord record;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    bool have_header = false;
    bool have_ring = false;

    while (std::getline(in, raw))
    {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty())
        {
            continue;
        }
        if (line.front() == '#')
        {
            const auto body = trim(line.substr(1));
            for (const auto& item : split(body, ' '))
            {
                const auto eq = item.find('=');
                if (eq == std::string_view::npos)
                {
                    continue;
                }
                const auto key = item.substr(0, eq);
                const auto value = item.substr(eq + 1);
                if (key == "timestamp")
                {
                    record.timestamp = parse_double(value, "timestamp", line_no);
                }
                else if (key == "truth")
                {
                    record.truth_key = std::string(value);
                }
                else if (key == "frame_id")
                {
                    record.cloud.frame_id = std::string(value);
                }
            }
            continue;
        }
        const auto fields = split(line, ',');
        if (!have_header)
        {
            if (fields.size() < 3 || fields[0] != "x" || fields[1] != "y" || fields[2] != "z" ||
                fields.size() > 4 || (fields.size() == 4 && fields[3] != "ring"))
            {
                throw ParseError(source + ": expected header 'x,y,z[,ring]'", line_no);
            }
            have_header = true;
            have_ring = fields.size() == 4;
            continue;
        }
        const std::size_t expected = have_ring ? 4 : 3;
        if (fields.size() != expected && !(have_ring && fields.size() == 3))
        {
            throw ParseError(source + ": expected " + std::to_string(expected) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        Point3 p;
        try
        {
            p.x = parse_double(fields[0], "x", line_no);
            p.y = parse_double(fields[1], "y", line_no);
            p.z = parse_double(fields[2], "z", line_no);
            if (fields.size() == 4 && !fields[3].empty())
            {
                p.ring = parse_int(fields[3], "ring", line_no);
            }
        }
        catch (const ParseError& e)
        {
            throw e.with_source(source);
        }
        record.cloud.points.push_back(p);
    }
    if (!have_header)
    {
        throw ParseError(source + ": missing header", 0);
    }
    record.cloud.timestamp = record.timestamp;
    return record;
}

std::string format_frame(const FrameRecord& record)
{
    std::string out;
    out.reserve(32 + record.cloud.points.size() * 40);
    out += "# timestamp=" + format_number(record.timestamp);
    if (record.truth_key)
    {
        out += " truth=" + *record.truth_key;
    }
    out += " frame_id=" + record.cloud.frame_id + "\n";
    out += "x,y,z,ring\n";
    for (const auto& p : record.cloud.points)
    {
        out += format_number(p.x);
        out += ',';
        out += format_number(p.y);
        out += ',';
        out += format_number(p.z);
        out += ',';
        if (p.ring)
        {
            out += std::to_string(*p.ring);
        }
        out += '\n';
    }
    return out;
}

FrameRecord read_frame(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open frame file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_frame(buffer.str(), path.string());
}

void write_frame(const FrameRecord& record, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << format_frame(record);
    if (!out)
    {
        throw IoError("write failed for " + path.string());
    }
}

PointCloud decimate_planes(const PointCloud& cloud, const std::function<bool(int)>& keep)
{
    // Kept ring r becomes the number of kept sensor rings below it, whether or not they returned points.
    std::map<int, std::optional<int>> renumber;
    const auto new_index = [&](int ring) {
        const auto [it, inserted] = renumber.try_emplace(ring);
        if (inserted && keep(ring))
        {
            int below = 0;
            for (int k = 0; k < ring; ++k)
            {
                below += keep(k) ? 1 : 0;
            }
            it->second = below;
        }
        return it->second;
    };

    PointCloud out;
    out.frame_id = cloud.frame_id;
    out.timestamp = cloud.timestamp;
    for (const auto& p : cloud.points)
    {
        if (!p.ring || *p.ring < 0)
        {
            throw PreconditionError("decimate_planes: point without a valid ring index");
        }
        if (const auto index = new_index(*p.ring))
        {
            Point3 q = p;
            q.ring = *index;
            out.points.push_back(q);
        }
    }
    return out;
}

std::function<bool(int)> ring_predicate(RingSelection selection)
{
    switch (selection)
    {
    case RingSelection::even:
        return [](int ring) { return ring % 2 == 0; };
    case RingSelection::odd:
        return [](int ring) { return ring % 2 == 1; };
    case RingSelection::all:
        break;
    }
    return [](int) { return true; };
}

RingSelection parse_ring_selection(const std::string& text)
{
    if (text == "all")
    {
        return RingSelection::all;
    }
    if (text == "even")
    {
        return RingSelection::even;
    }
    if (text == "odd")
    {
        return RingSelection::odd;
    }
    throw ConfigError("unknown ring selection '" + text + "' (expected all|even|odd)");
}

std::string to_string(RingSelection selection)
{
    switch (selection)
    {
    case RingSelection::even:
        return "even";
    case RingSelection::odd:
        return "odd";
    case RingSelection::all:
        break;
    }
    return "all";
}

std::string frame_file_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06zu.csv", index);
    return buf;
}

void write_sequence(const std::vector<FrameRecord>& frames, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < frames.size(); ++i)
    {
        write_frame(frames[i], dir / frame_file_name(i));
    }
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
    {
        throw IoError("not a sequence directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
    {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 && entry.path().extension() == ".csv")
        {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<FrameRecord> read_sequence(const std::filesystem::path& dir)
{
    std::vector<FrameRecord> frames;
    for (const auto& file : list_frame_files(dir))
    {
        frames.push_back(read_frame(file));
    }
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameRecord& a, const FrameRecord& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < frames.size(); ++i)
    {
        if (!(frames[i].timestamp > frames[i - 1].timestamp))
        {
            throw ParseError("duplicate frame timestamp " + std::to_string(frames[i].timestamp) + " in " +
                                 dir.string(),
                             0);
        }
    }
    return frames;
}

} // namespace sparse_lidar
