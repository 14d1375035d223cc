#pragma once

#include <iosfwd>
#include <vector>

namespace rrc {

// Column-major view of a feature matrix used by the rankers: data[f] holds
// the values of feature f over all samples.
struct FeatureColumns {
    std::vector<std::vector<double>> columns;
    std::vector<int> labels;  // one per sample

    int num_features() const { return static_cast<int>(columns.size()); }
    int num_samples() const { return static_cast<int>(labels.size()); }
};

// Full ordering over the feature indices, best first. `scores` holds the
// ranking criterion per position (the criterion scale depends on the ranker).
struct Ranking {
    std::vector<int> order;
    std::vector<double> scores;
};

// Heuristic product of combining two rankings: features common to both
// top lists are fixed; the remainder is ordered for elimination, worst first.
struct FusedRanking {
    std::vector<int> fixed_set;          // ascending index order
    std::vector<int> elimination_order;  // worst first
};

// Equal-frequency binning; ties go to the lower bin, constant columns
// collapse to a single bin.
std::vector<int> discretize(const std::vector<double>& column, int bins = 10);

// Greedy JMI: first feature maximizes I(f;Y), every further feature
// maximizes sum over selected g of I((f,g);Y). Ties break to the lower
// feature index. Features are discretized internally.
Ranking jmi_rank(const FeatureColumns& data, int bins = 10);

// MultiSURF weights with per-instance threshold T_i = meanDist_i - std_i/2
// and range-normalized Manhattan distances; ranking by descending weight.
Ranking multisurf_rank(const FeatureColumns& data);

// fixed_set = top-`top` of r1 intersected with top-`top` of r2; the rest
// ordered by average rank position, worst (highest average) first.
FusedRanking fuse(const Ranking& r1, const Ranking& r2, int top = 50);

// Export: ordered (position, index, name, score) rows, comma-separated.
// Names come from the feature catalog when the ranking covers 98 features.
void write_ranking(std::ostream& os, const Ranking& r);

}  // namespace rrc
