#include <ostream>

#include <CLI11.hpp>

#include "sparse_lidar/app.hpp"
#include "sparse_lidar/errors.hpp"

namespace sparse_lidar
{

namespace
{

struct Options
{
    std::string config;
    std::string input;
    std::string output;
    std::string scenario = "approach";
    std::string mode = "sixteen_plane";
    std::string detections;
    std::optional<std::uint64_t> seed;
    int parallel = 1;
    int repeat = 15;
};

AppConfig load(const Options& options)
{
    return options.config.empty() ? AppConfig{} : load_config(options.config);
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Obstacle boxes from sparse lidar: simulate, detect, evaluate", "sparse-lidar"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "configuration file (defaults when omitted)");
        sub->add_option("--parallel", o.parallel, "worker threads; output does not depend on it")
            ->check(CLI::PositiveNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "write frames and ground_truth.csv for a scenario");
    common(simulate);
    simulate->add_option("--scenario", o.scenario, "lap | approach | chicane | multi_obstacle");
    simulate->add_option("--seed", o.seed, "noise seed (overrides [simulate] seed)");
    simulate->add_option("--output", o.output, "sequence directory")->required();

    CLI::App* detect_cmds[2];
    for (const auto mode : {DetectorMode::sixteen_plane, DetectorMode::eight_plane})
    {
        const bool eight = mode == DetectorMode::eight_plane;
        auto* sub = app.add_subcommand(eight ? "detect8" : "detect16",
                                       eight ? "eight-plane detector on a (decimated) sequence"
                                             : "sixteen-plane detector on a sequence");
        common(sub);
        sub->add_option("--input", o.input, "sequence directory")->required();
        sub->add_option("--output", o.output, "detections file (JSON lines)")->required();
        detect_cmds[eight ? 1 : 0] = sub;
    }

    auto* eval = app.add_subcommand("eval", "compare detections with ground truth");
    common(eval);
    eval->add_option("--input", o.input, "sequence directory holding ground_truth.csv")->required();
    eval->add_option("--detections", o.detections, "detections file")->required();
    eval->add_option("--output", o.output, "directory for errors.csv, errors.dat, summary.csv")->required();

    auto* pipeline = app.add_subcommand("pipeline", "simulate, detect and evaluate in one go");
    common(pipeline);
    pipeline->add_option("--scenario", o.scenario, "lap | approach | chicane | multi_obstacle");
    pipeline->add_option("--mode", o.mode, "sixteen_plane | eight_plane");
    pipeline->add_option("--seed", o.seed, "noise seed (overrides [simulate] seed)");
    pipeline->add_option("--output", o.output, "output directory")->required();

    auto* bench = app.add_subcommand("bench", "median single-thread detector latency on a dense frame");
    bench->add_option("--config", o.config, "configuration file (defaults when omitted)");
    bench->add_option("--repeat", o.repeat, "repetitions per detector")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try
    {
        AppConfig config = load(o);
        if (o.seed)
        {
            config.seed = *o.seed;
        }
        if (simulate->parsed())
        {
            const auto frames = run_simulate(config, parse_scenario_kind(o.scenario), config.seed, o.output, o.parallel);
            out << "wrote " << frames << " frames to " << o.output << "\n";
        }
        else if (detect_cmds[0]->parsed() || detect_cmds[1]->parsed())
        {
            const auto mode = detect_cmds[1]->parsed() ? DetectorMode::eight_plane : DetectorMode::sixteen_plane;
            run_detect(config, mode, o.input, o.output, o.parallel);
        }
        else if (eval->parsed())
        {
            const auto series =
                run_eval(config, std::filesystem::path(o.input) / kGroundTruthFile, o.detections, o.output);
            out << format_summary_table(series.summary, "eval");
        }
        else if (pipeline->parsed())
        {
            run_pipeline(config, parse_scenario_kind(o.scenario), parse_detector_mode(o.mode), config.seed, o.output,
                         out, o.parallel);
        }
        else if (bench->parsed())
        {
            out << format_bench(run_bench(config, o.repeat));
        }
    }
    catch (const ConfigError& e)
    {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace sparse_lidar
