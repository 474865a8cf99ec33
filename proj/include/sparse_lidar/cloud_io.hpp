#pragma once

// Frame files are UTF-8 CSV:
//
//   # timestamp=12.5
//   x,y,z,ring
//   1.25,-0.5,0.75,3
//
// The comment line is optional (timestamp defaults to 0) and the ring column
// may be omitted from the header or left empty per row. A sequence is a
// directory of frame_NNNNNN.csv files plus an optional ground_truth.csv.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparse_lidar/geometry.hpp"

namespace sparse_lidar
{

struct FrameRecord
{
    double timestamp = 0.0;
    PointCloud cloud;
    std::optional<std::string> truth_key; ///< links the frame to a ground-truth timestamp
};

FrameRecord read_frame(const std::filesystem::path& path);
void write_frame(const FrameRecord& record, const std::filesystem::path& path);

/// Parses the frame format from an in-memory string. `source` names the input in errors.
FrameRecord parse_frame(const std::string& text, const std::string& source = "<memory>");
std::string format_frame(const FrameRecord& record);

/// Keeps points whose ring satisfies `keep`. Kept ring r is renumbered to the count of kept
/// rings in [0, r), so even rings of a 16-ring sensor map to 0..7. Throws PreconditionError
/// if a point has no ring.
PointCloud decimate_planes(const PointCloud& cloud, const std::function<bool(int)>& keep);

enum class RingSelection
{
    all,
    even,
    odd
};

std::function<bool(int)> ring_predicate(RingSelection selection);
RingSelection parse_ring_selection(const std::string& text);
std::string to_string(RingSelection selection);

std::string frame_file_name(std::size_t index);

/// Writes frames as frame_000000.csv, frame_000001.csv, ... creating `dir` if needed.
void write_sequence(const std::vector<FrameRecord>& frames, const std::filesystem::path& dir);

/// Lists frame files of a sequence directory (frame_*.csv), in lexical order.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

/// Reads every frame of a sequence directory, sorted by timestamp.
std::vector<FrameRecord> read_sequence(const std::filesystem::path& dir);

} // namespace sparse_lidar
