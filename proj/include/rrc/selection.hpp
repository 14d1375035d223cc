#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <map>
#include <string>
#include <vector>

#include "rrc/classifier.hpp"
#include "rrc/features.hpp"
#include "rrc/ranking.hpp"

namespace rrc {

enum class FeatureProvenance : char { fixed = 'F', kept = 'K', dropped = 'D' };

// Per-classifier feature subset with provenance bookkeeping.
struct FeatureMask {
    std::string owner;
    std::array<bool, kNumFeatures> active{};
    std::array<FeatureProvenance, kNumFeatures> provenance{};

    int count() const;
};

struct SelectionTraceEntry {
    int feature = -1;
    double score_with = 0.0;
    double score_without = 0.0;
    bool dropped = false;
};

struct SelectionTrace {
    double start_score = 0.0;  // all features active
    double final_score = 0.0;
    std::vector<SelectionTraceEntry> entries;
};

// Thrown when the scorer fails mid-elimination; carries the partial trace.
class SelectionError : public std::runtime_error {
public:
    SelectionError(const std::string& what, SelectionTrace trace)
        : std::runtime_error(what), trace(std::move(trace)) {}
    SelectionTrace trace;
};

// Scores a candidate feature subset (active indices, ascending).
using SubsetScorer = std::function<double(const std::vector<int>&)>;

// One binary subproblem of the ensemble.
struct BinaryTask {
    bool ovo = true;
    int class_a = 0;  // OVO: first class / OVA: the "one" class
    int class_b = 1;  // OVO only, class_a < class_b

    std::string id() const;
};

// 15 OVO pairs followed by K OVA tasks (K(K+1)/2 = 21 for K = 6).
std::vector<BinaryTask> enumerate_tasks(int k = kNumTrainedClasses);

// Candidate-at-a-time backward elimination over the fused elimination order:
// a feature is dropped iff score_without >= score_with - tol. Fixed-set
// features are never candidates. passes <= 0 repeats sweeps to fixpoint.
std::pair<FeatureMask, SelectionTrace> guided_backward_elimination(
    const FusedRanking& fused, const SubsetScorer& scorer, double tol = 0.0,
    int passes = 1);

struct SelectionConfig {
    int folds = 5;
    double tol = 0.0;
    int passes = 1;
    int top = 50;
    int bins = 10;
    int max_rank_samples = 1200;  // deterministic stride cap for the rankers
    ClassifierConfig classifier;  // scorer backend (logistic by default)
    std::uint64_t seed = 1;
};

struct SelectionResult {
    FeatureMask mask;
    SelectionTrace trace;
    FusedRanking fused;
    Ranking jmi;
    Ranking multisurf;
};

// Binary dataset for one task: sequences with labels mapped to {0, 1}
// (1 = class_a), plus a task-local 5-fold CV scorer over instance-grouped
// folds. Augmented samples train only.
SelectionResult select_for_task(const BinaryTask& task,
                                const std::vector<SequenceSample>& sequences,
                                const std::vector<FeatureVector>& window_features,
                                const SelectionConfig& cfg);

// Runs select_for_task for all 21 tasks; `jobs` > 1 parallelizes across
// tasks with a deterministic merge by task id.
std::map<std::string, SelectionResult> select_all(
    const std::vector<SequenceSample>& sequences,
    const std::vector<FeatureVector>& window_features, const SelectionConfig& cfg,
    int jobs = 1);

// Mask/trace export: feature name, provenance, and scores per candidate.
void write_mask(std::ostream& os, const FeatureMask& mask);
void write_trace(std::ostream& os, const SelectionTrace& trace);

}  // namespace rrc
