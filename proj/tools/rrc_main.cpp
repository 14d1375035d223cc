#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rrc/features.hpp"
#include "rrc/pipeline.hpp"

namespace {

constexpr const char* kVersion = "rrc 1.0";

int run(const std::string& stage_arg, const std::string& config_path,
        const std::string& out_dir, long long seed, int jobs, bool force) {
    rrc::RunConfig cfg;
    if (!config_path.empty()) cfg = rrc::load_run_config(config_path);
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
    } else if (config_path.empty() || cfg.out_dir.empty()) {
        if (const char* env = std::getenv("RRC_OUT_DIR")) cfg.out_dir = env;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (jobs > 0) cfg.jobs = jobs;

    if (stage_arg == "all") {
        rrc::run_all(cfg, force);
        return 0;
    }
    const auto stage = rrc::stage_from_name(stage_arg);
    if (!stage) {
        std::cerr << "error: unknown stage: " << stage_arg << '\n';
        return 2;
    }
    const bool ran = rrc::run_stage(cfg, *stage, force);
    if (!ran) std::cerr << stage_arg << ": up to date, skipped\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radar road-user classification pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global options after the subcommand

    std::string config_path, out_dir;
    long long seed = -1;
    int jobs = 0;
    bool force = false;
    app.add_option("-c,--config", config_path, "JSON run configuration file");
    app.add_option("-o,--out", out_dir,
                   "output directory (default: config value or $RRC_OUT_DIR)");
    app.add_option("-s,--seed", seed, "override the run seed everywhere");
    app.add_option("-j,--jobs", jobs, "intra-stage parallelism");
    app.add_flag("-f,--force", force, "re-run stages even when up to date");
    app.set_version_flag("--version",
                         std::string(kVersion) + " (catalog " +
                             rrc::kFeatureCatalogVersion + ")");

    const char* stages[] = {"gen",   "cluster", "extract", "rank",   "select",
                            "train", "sweep",   "eval",    "report", "all"};
    const char* help[] = {"generate the synthetic scenario logs",
                          "cluster, window, and augment the detections",
                          "extract the 98-feature matrix",
                          "global feature rankings (diagnostics)",
                          "per-classifier feature selection",
                          "train the 21-member ensemble",
                          "hidden-detector threshold sweep",
                          "cross-validated evaluation",
                          "assemble the final report",
                          "run every stage in order"};
    for (std::size_t i = 0; i < std::size(stages); ++i) app.add_subcommand(stages[i], help[i]);

    CLI11_PARSE(app, argc, argv);

    try {
        return run(app.get_subcommands().front()->get_name(), config_path, out_dir, seed,
                   jobs, force);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
