#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rrc/ensemble.hpp"
#include "rrc/selection.hpp"
#include "rrc/synthgen.hpp"

namespace rrc {

struct EvalConfig {
    int folds = 10;
    bool compare_baseline = true;
    double target_tpr = 0.5;  // tuning picks the best micro-F1 point at or
                              // above this hidden TPR
};

// Fully resolved run configuration: one JSON file drives every stage.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "run";
    int jobs = 1;
    GeneratorConfig generator;
    DbscanParams clustering;
    SelectionConfig selection;
    ClassifierConfig training;
    HiddenConfig hidden;
    double grid_step = 0.01;
    EvalConfig eval;
};

// Strict parse: unknown keys and type mismatches are rejected with a
// field-path diagnostic ("training.epochs: expected integer").
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical JSON echo of the resolved config; also the fingerprint input.
std::string config_to_json(const RunConfig& cfg);

enum class Stage { gen, cluster, extract, rank, select, train, sweep, eval, report };
constexpr int kNumStages = 9;
const char* stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

// Runs one stage against the artifacts in cfg.out_dir. Stage outputs are
// fingerprinted by (stage config, seed, upstream fingerprints); a re-run with
// an unchanged fingerprint is skipped unless `force`. Returns true if the
// stage actually executed.
bool run_stage(const RunConfig& cfg, Stage stage, bool force = false);

// Chains all stages in order.
void run_all(const RunConfig& cfg, bool force = false);

}  // namespace rrc
