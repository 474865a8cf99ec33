#include "sparse_lidar/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <thread>

#include "detail/text.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

namespace fs = std::filesystem;

std::size_t run_simulate(const AppConfig& config, ScenarioKind scenario, std::uint64_t seed, const fs::path& out_dir,
                         int threads)
{
    const Scene scene = generate_scenario(scenario, config.scenario);
    const auto times = scenario_frame_times(scenario, config.scenario);
    const auto frames = simulate_sequence(scene, config.lidar.model(), times, seed, threads);
    std::vector<GroundTruthRecord> truth;
    truth.reserve(times.size());
    for (const double t : times)
    {
        truth.push_back(ground_truth_at(scene, t));
    }
    write_sequence(frames, out_dir);
    write_ground_truth(truth, out_dir / kGroundTruthFile);
    return frames.size();
}

std::vector<DetectionFrame> detect_sequence(const AppConfig& config, DetectorMode mode,
                                            const std::vector<FrameRecord>& frames, int threads)
{
    const PipelineConfig& pipeline = config.pipeline(mode);
    pipeline.validate();
    const auto keep = ring_predicate(config.decimation_keep);
    std::vector<DetectionFrame> out(frames.size());
    const auto run_one = [&](std::size_t k) {
        const bool decimate = mode == DetectorMode::eight_plane && config.decimation_keep != RingSelection::all;
        DetectionFrame frame =
            detect(decimate ? decimate_planes(frames[k].cloud, keep) : frames[k].cloud, pipeline);
        frame.timestamp = frames[k].timestamp;
        out[k] = std::move(frame);
    };

    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), 1,
                                                        std::max<std::size_t>(frames.size(), 1));
    if (workers == 1)
    {
        for (std::size_t k = 0; k < frames.size(); ++k)
        {
            run_one(k);
        }
        return out;
    }
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            try
            {
                for (std::size_t k = w; k < frames.size(); k += workers)
                {
                    run_one(k);
                }
            }
            catch (...)
            {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
    {
        th.join();
    }
    for (const auto& failure : failures)
    {
        if (failure)
        {
            std::rethrow_exception(failure);
        }
    }
    return out;
}

void run_detect(const AppConfig& config, DetectorMode mode, const fs::path& input_dir, const fs::path& output_file,
                int threads)
{
    const auto frames = read_sequence(input_dir);
    const auto detections = detect_sequence(config, mode, frames, threads);
    if (output_file.has_parent_path())
    {
        fs::create_directories(output_file.parent_path());
    }
    write_detections(detections, output_file);
}

ErrorSeries run_eval(const AppConfig& config, const fs::path& truth_file, const fs::path& detections_file,
                     const fs::path& out_dir)
{
    const auto truth = read_ground_truth(truth_file);
    auto detections = read_detections(detections_file);
    if (detections.empty())
    {
        for (const auto& record : truth)
        {
            detections.push_back(DetectionFrame{record.timestamp, {}});
        }
    }
    std::stable_sort(detections.begin(), detections.end(),
                     [](const DetectionFrame& a, const DetectionFrame& b) { return a.timestamp < b.timestamp; });
    const auto series = compute_error_series(truth, detections, config.eval.max_match_distance,
                                             config.eval.time_tolerance);
    fs::create_directories(out_dir);
    detail::write_text_file(out_dir / kErrorsFile, format_error_series(series));
    detail::write_text_file(out_dir / kGnuplotFile, format_gnuplot(series));
    detail::write_text_file(out_dir / kSummaryFile, format_summary(series.summary));
    return series;
}

ErrorSeries run_pipeline(const AppConfig& config, ScenarioKind scenario, DetectorMode mode, std::uint64_t seed,
                         const fs::path& out_dir, std::ostream& log, int threads)
{
    const fs::path sequence = out_dir / "sequence";
    const std::size_t frames = run_simulate(config, scenario, seed, sequence, threads);
    run_detect(config, mode, sequence, out_dir / kDetectionsFile, threads);
    const auto series = run_eval(config, sequence / kGroundTruthFile, out_dir / kDetectionsFile, out_dir);
    log << format_summary_table(series.summary, to_string(scenario) + " / " + to_string(mode) + " (" +
                                                    std::to_string(frames) + " frames, seed " +
                                                    std::to_string(seed) + ")");
    return series;
}

namespace
{

template <typename F>
double median_ms(int repetitions, F&& work)
{
    std::vector<double> samples;
    for (int r = 0; r < repetitions; ++r)
    {
        const auto start = std::chrono::steady_clock::now();
        work();
        const auto stop = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

} // namespace

BenchResult run_bench(const AppConfig& config, int repetitions)
{
    if (repetitions < 1)
    {
        throw ConfigError("bench: repetitions must be positive");
    }
    Scene scene = generate_scenario(ScenarioKind::multi_obstacle, config.scenario);
    add_enclosure(scene);
    const double t = 0.5 * config.scenario.duration;
    const PointCloud full = raycast_frame(scene, config.lidar.model(), t, config.seed).cloud;
    const PointCloud decimated = decimate_planes(full, ring_predicate(config.decimation_keep));

    BenchResult result;
    result.points_full = full.size();
    result.points_decimated = decimated.size();
    std::size_t sink = 0;
    result.detect16_median_ms =
        median_ms(repetitions, [&] { sink += detect_16(full, config.sixteen_plane).detections.size(); });
    result.detect8_median_ms =
        median_ms(repetitions, [&] { sink += detect_8(decimated, config.eight_plane).detections.size(); });
    if (sink == 0)
    {
        throw DomainError("bench: no detections on the benchmark frame");
    }
    return result;
}

std::string format_bench(const BenchResult& r)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "points_full=%zu points_decimated=%zu detect16_median_ms=%.3f detect8_median_ms=%.3f\n",
                  r.points_full, r.points_decimated, r.detect16_median_ms, r.detect8_median_ms);
    return buf;
}

} // namespace sparse_lidar
