#include "rrc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "rrc/rng.hpp"

namespace rrc {

std::int64_t ConfusionMatrix::row_sum(int row) const {
    std::int64_t s = 0;
    for (std::int64_t v : counts[row]) s += v;
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (int r = 0; r <= k; ++r) s += row_sum(r);
    return s;
}

std::map<std::int64_t, int> kfold_split(const std::vector<InstanceInfo>& instances,
                                        int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
    if (instances.empty()) throw std::invalid_argument("kfold_split: no instances");

    // stratify: per-class shuffled round robin, offset per class so small
    // classes don't pile into fold 0
    std::map<int, std::vector<std::int64_t>> per_class;
    for (const auto& inst : instances)
        per_class[static_cast<int>(inst.label)].push_back(inst.id);

    std::map<std::int64_t, int> fold;
    int offset = 0;
    for (auto& [cls, ids] : per_class) {
        std::sort(ids.begin(), ids.end());
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(cls) + 0x666f6c64ULL));
        rng.shuffle(ids);
        for (std::size_t i = 0; i < ids.size(); ++i)
            fold[ids[i]] = static_cast<int>((i + offset) % k);
        offset = static_cast<int>((offset + ids.size()) % k);
    }
    return fold;
}

double macro_f1(const ConfusionMatrix& cm) {
    double sum = 0.0;
    for (int c = 0; c < cm.k; ++c) {
        std::int64_t tp = cm.counts[c][c], fp = 0, fn = 0;
        for (int r = 0; r <= cm.k; ++r) {
            if (r != c) fp += cm.counts[r][c];
        }
        for (int p = 0; p <= cm.k; ++p) {
            if (p != c) fn += cm.counts[c][p];
        }
        const double denom = 2.0 * tp + fp + fn;
        sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;  // 0/0 -> 0
    }
    return sum / cm.k;
}

double micro_f1(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw std::invalid_argument("micro_f1: empty confusion matrix");
    std::int64_t correct = 0;
    for (int c = 0; c <= cm.k; ++c) correct += cm.counts[c][c];
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> hidden_split(
    const std::vector<InstanceInfo>& other_instances, std::uint64_t seed) {
    if (other_instances.size() < 2)
        throw std::invalid_argument("hidden_split: need at least 2 instances");
    std::vector<std::int64_t> ids;
    for (const auto& inst : other_instances) ids.push_back(inst.id);
    std::sort(ids.begin(), ids.end());
    Rng rng(Rng::mix(seed, 0x68696464656eULL));
    rng.shuffle(ids);
    const std::size_t tuning_size = (ids.size() + 1) / 2;
    std::vector<std::int64_t> tuning(ids.begin(), ids.begin() + tuning_size);
    std::vector<std::int64_t> test(ids.begin() + tuning_size, ids.end());
    std::sort(tuning.begin(), tuning.end());
    std::sort(test.begin(), test.end());
    return {tuning, test};
}

FeatureDistributionReport feature_distribution_report(
    const std::map<std::string, std::array<bool, kNumFeatures>>& masks) {
    const auto& cat = FeatureCatalog::instance();
    FeatureDistributionReport rep;
    std::vector<int> sizes;
    for (const auto& [name, mask] : masks) {
        FeatureDistributionReport::Row row;
        row.classifier = name;
        for (int f = 0; f < kNumFeatures; ++f) {
            if (mask[f]) {
                ++row.per_category[static_cast<int>(cat.entry(f).category)];
                ++row.total;
            }
        }
        sizes.push_back(row.total);
        rep.rows.push_back(std::move(row));
    }
    if (!sizes.empty()) {
        std::sort(sizes.begin(), sizes.end());
        const std::size_t n = sizes.size();
        rep.median_mask_size = n % 2 == 1
                                   ? sizes[n / 2]
                                   : 0.5 * (sizes[n / 2 - 1] + sizes[n / 2]);
    }
    return rep;
}

void write_confusion(std::ostream& os, const ConfusionMatrix& cm) {
    os << "confusion raw (rows=truth, cols=prediction, last=hidden)\n";
    for (int r = 0; r <= cm.k; ++r) {
        for (int c = 0; c <= cm.k; ++c) os << (c ? " " : "") << cm.counts[r][c];
        os << '\n';
    }
    os << "confusion row-normalized %\n";
    char buf[32];
    for (int r = 0; r <= cm.k; ++r) {
        const std::int64_t rs = cm.row_sum(r);
        for (int c = 0; c <= cm.k; ++c) {
            const double pct = rs > 0 ? 100.0 * cm.counts[r][c] / rs : 0.0;
            std::snprintf(buf, sizeof(buf), "%s%.2f", c ? " " : "", pct);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace rrc
