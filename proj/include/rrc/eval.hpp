#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rrc/features.hpp"

namespace rrc {

// (K+1)x(K+1) counts; rows = truth, cols = prediction; index K is the hidden
// class.
struct ConfusionMatrix {
    int k = kNumTrainedClasses;
    std::vector<std::vector<std::int64_t>> counts;

    explicit ConfusionMatrix(int num_classes = kNumTrainedClasses)
        : k(num_classes),
          counts(num_classes + 1, std::vector<std::int64_t>(num_classes + 1, 0)) {}

    void add(int truth, int prediction) { ++counts[truth][prediction]; }
    std::int64_t row_sum(int row) const;
    std::int64_t total() const;
};

struct InstanceInfo {
    std::int64_t id = 0;
    Label label = Label::garbage;
};

// Instance-grouped, class-stratified fold assignment; deterministic under
// seed. Augmented samples must inherit their source instance's fold.
std::map<std::int64_t, int> kfold_split(const std::vector<InstanceInfo>& instances,
                                        int k, std::uint64_t seed);

// Macro-averaged F1 over the first `cm.k` classes (hidden row/col excluded);
// per-class 0/0 -> 0.
double macro_f1(const ConfusionMatrix& cm);

// Micro-averaged F1 = overall accuracy over all samples, hidden counted as
// its own label.
double micro_f1(const ConfusionMatrix& cm);

// Instance-disjoint halves of the hidden-class instances; sizes differ by at
// most one (the tuning half gets the extra instance).
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> hidden_split(
    const std::vector<InstanceInfo>& other_instances, std::uint64_t seed);

// Per-classifier active-feature counts per category plus the median mask
// size across classifiers.
struct FeatureDistributionReport {
    struct Row {
        std::string classifier;
        std::array<int, kNumCategories> per_category{};
        int total = 0;
    };
    std::vector<Row> rows;
    double median_mask_size = 0.0;
};

FeatureDistributionReport feature_distribution_report(
    const std::map<std::string, std::array<bool, kNumFeatures>>& masks);

void write_confusion(std::ostream& os, const ConfusionMatrix& cm);

}  // namespace rrc
