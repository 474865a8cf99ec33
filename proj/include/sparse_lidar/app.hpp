#pragma once

// File-level workflows behind the command-line tool. Each step reads and writes the on-disk
// formats so that steps can be chained or run separately.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparse_lidar/config.hpp"
#include "sparse_lidar/eval.hpp"

namespace sparse_lidar
{

inline constexpr const char* kGroundTruthFile = "ground_truth.csv";
inline constexpr const char* kDetectionsFile = "detections.jsonl";
inline constexpr const char* kErrorsFile = "errors.csv";
inline constexpr const char* kGnuplotFile = "errors.dat";
inline constexpr const char* kSummaryFile = "summary.csv";

/// Simulates a scenario into `out_dir`: frame files plus ground_truth.csv. Returns the frame count.
std::size_t run_simulate(const AppConfig& config, ScenarioKind scenario, std::uint64_t seed,
                         const std::filesystem::path& out_dir, int threads = 1);

/// Detects on every frame of a sequence. The eight-plane detector first applies
/// config.decimation_keep. Output order follows frame timestamps for any thread count.
std::vector<DetectionFrame> detect_sequence(const AppConfig& config, DetectorMode mode,
                                            const std::vector<FrameRecord>& frames, int threads = 1);

void run_detect(const AppConfig& config, DetectorMode mode, const std::filesystem::path& input_dir,
                const std::filesystem::path& output_file, int threads = 1);

/// Reads truth and detections, writes errors.csv, errors.dat and summary.csv into `out_dir`.
/// A detections file with no records counts as empty detections for every truth frame.
ErrorSeries run_eval(const AppConfig& config, const std::filesystem::path& truth_file,
                     const std::filesystem::path& detections_file, const std::filesystem::path& out_dir);

/// simulate -> detect -> eval under `out_dir` (frames in out_dir/sequence). Prints the summary table.
ErrorSeries run_pipeline(const AppConfig& config, ScenarioKind scenario, DetectorMode mode, std::uint64_t seed,
                         const std::filesystem::path& out_dir, std::ostream& log, int threads = 1);

struct BenchResult
{
    std::size_t points_full = 0;
    std::size_t points_decimated = 0;
    double detect16_median_ms = 0.0;
    double detect8_median_ms = 0.0;
};

/// Median single-thread latency of both detectors on a dense enclosed frame.
BenchResult run_bench(const AppConfig& config, int repetitions);
std::string format_bench(const BenchResult& result);

/// Command-line entry point. Exit codes: 0 success, 1 usage or configuration error, 2 data error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sparse_lidar
