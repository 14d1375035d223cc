#include "rrc/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include "rrc/features.hpp"

namespace rrc {

namespace {

int count_classes(const std::vector<int>& labels) {
    std::set<int> s(labels.begin(), labels.end());
    return static_cast<int>(s.size());
}

// relabels arbitrary class ids to 0..C-1
std::vector<int> compact_labels(const std::vector<int>& labels, int* num_classes) {
    std::vector<int> uniq(labels.begin(), labels.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    *num_classes = static_cast<int>(uniq.size());
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), labels[i]) -
                                  uniq.begin());
    }
    return out;
}

double entropy_term(double joint, double pa, double pb) {
    if (joint <= 0.0) return 0.0;  // 0 log 0 = 0
    return joint * std::log(joint / (pa * pb));
}

// I(F;Y) from discrete columns.
double mutual_information(const std::vector<int>& f, int fb, const std::vector<int>& y,
                          int yb) {
    const int n = static_cast<int>(f.size());
    std::vector<double> joint(static_cast<std::size_t>(fb) * yb, 0.0);
    std::vector<double> pf(fb, 0.0), py(yb, 0.0);
    const double w = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(f[i]) * yb + y[i]] += w;
        pf[f[i]] += w;
        py[y[i]] += w;
    }
    double mi = 0.0;
    for (int a = 0; a < fb; ++a) {
        for (int b = 0; b < yb; ++b) {
            mi += entropy_term(joint[static_cast<std::size_t>(a) * yb + b], pf[a], py[b]);
        }
    }
    return mi;
}

}  // namespace

std::vector<int> discretize(const std::vector<double>& column, int bins) {
    const int n = static_cast<int>(column.size());
    if (n == 0) throw std::invalid_argument("discretize: empty column");
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (column[a] != column[b]) return column[a] < column[b];
        return a < b;
    });
    std::vector<int> out(n);
    int run_start = 0;
    for (int k = 0; k < n; ++k) {
        if (k > 0 && column[order[k]] != column[order[k - 1]]) run_start = k;
        // equal values share the bin of the run's first (lowest) position
        out[order[k]] = static_cast<int>(static_cast<std::int64_t>(run_start) * bins / n);
    }
    return out;
}

Ranking jmi_rank(const FeatureColumns& data, int bins) {
    const int d = data.num_features();
    const int n = data.num_samples();
    if (n == 0 || d == 0) throw std::invalid_argument("jmi_rank: empty data");
    if (count_classes(data.labels) < 2)
        throw std::invalid_argument("jmi_rank: fewer than 2 classes");

    int num_classes = 0;
    const std::vector<int> y = compact_labels(data.labels, &num_classes);

    std::vector<std::vector<int>> disc(d);
    for (int f = 0; f < d; ++f) disc[f] = discretize(data.columns[f], bins);

    // marginal relevance
    std::vector<double> rel(d);
    for (int f = 0; f < d; ++f) rel[f] = mutual_information(disc[f], bins, y, num_classes);

    // memoized pairwise joint MI I((f,g);Y); joint variable has bins^2 states
    std::vector<double> pair_mi(static_cast<std::size_t>(d) * d,
                                std::numeric_limits<double>::quiet_NaN());
    auto pair_score = [&](int f, int g) {
        auto& slot = pair_mi[static_cast<std::size_t>(std::min(f, g)) * d + std::max(f, g)];
        if (std::isnan(slot)) {
            std::vector<int> fg(n);
            for (int i = 0; i < n; ++i) fg[i] = disc[f][i] * bins + disc[g][i];
            slot = mutual_information(fg, bins * bins, y, num_classes);
        }
        return slot;
    };

    Ranking r;
    std::vector<bool> selected(d, false);
    for (int step = 0; step < d; ++step) {
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int f = 0; f < d; ++f) {
            if (selected[f]) continue;
            double score;
            if (step == 0) {
                score = rel[f];
            } else {
                score = 0.0;
                for (int g : r.order) score += pair_score(f, g);
            }
            if (score > best_score) {  // ties keep the lower index
                best_score = score;
                best = f;
            }
        }
        selected[best] = true;
        r.order.push_back(best);
        r.scores.push_back(best_score);
    }
    return r;
}

Ranking multisurf_rank(const FeatureColumns& data) {
    const int d = data.num_features();
    const int n = data.num_samples();
    if (n == 0 || d == 0) throw std::invalid_argument("multisurf_rank: empty data");

    int num_classes = 0;
    const std::vector<int> y = compact_labels(data.labels, &num_classes);
    std::vector<double> prior(num_classes, 0.0);
    for (int c : y) prior[c] += 1.0 / n;

    // range normalizers; zero-range features contribute no distance
    std::vector<double> inv_range(d, 0.0);
    for (int f = 0; f < d; ++f) {
        const auto [mn, mx] = std::minmax_element(data.columns[f].begin(),
                                                  data.columns[f].end());
        const double r = *mx - *mn;
        if (r > 0.0) inv_range[f] = 1.0 / r;
    }

    // full pairwise distance matrix (range-normalized Manhattan)
    std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
    for (int f = 0; f < d; ++f) {
        const auto& col = data.columns[f];
        const double ir = inv_range[f];
        if (ir == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double df = std::abs(col[i] - col[j]) * ir;
                dist[static_cast<std::size_t>(i) * n + j] += df;
                dist[static_cast<std::size_t>(j) * n + i] += df;
            }
        }
    }

    std::vector<double> weights(d, 0.0);
    for (int i = 0; i < n; ++i) {
        // adaptive dead-band threshold around instance i
        double mean = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != i) mean += dist[static_cast<std::size_t>(i) * n + j];
        }
        if (n < 2) break;
        mean /= (n - 1);
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dd = dist[static_cast<std::size_t>(i) * n + j] - mean;
            var += dd * dd;
        }
        var /= (n - 1);
        const double threshold = mean - 0.5 * std::sqrt(var);

        for (int j = 0; j < n; ++j) {
            if (j == i || dist[static_cast<std::size_t>(i) * n + j] >= threshold) continue;
            const bool hit = y[j] == y[i];
            double scale;
            if (hit) {
                scale = -1.0;
            } else {
                const double denom = 1.0 - prior[y[i]];
                if (denom <= 0.0) continue;
                scale = prior[y[j]] / denom;
            }
            for (int f = 0; f < d; ++f) {
                const double df = std::abs(data.columns[f][i] - data.columns[f][j]) *
                                  inv_range[f];
                weights[f] += scale * df;
            }
        }
    }
    for (double& w : weights) w /= n;

    Ranking r;
    r.order.resize(d);
    for (int f = 0; f < d; ++f) r.order[f] = f;
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    r.scores.resize(d);
    for (int k = 0; k < d; ++k) r.scores[k] = weights[r.order[k]];
    return r;
}

FusedRanking fuse(const Ranking& r1, const Ranking& r2, int top) {
    const int d = static_cast<int>(r1.order.size());
    if (r2.order.size() != r1.order.size())
        throw std::invalid_argument("fuse: rankings cover different feature counts");
    std::vector<int> pos1(d), pos2(d);
    for (int k = 0; k < d; ++k) {
        pos1[r1.order[k]] = k;
        pos2[r2.order[k]] = k;
    }
    FusedRanking out;
    std::vector<bool> fixed(d, false);
    for (int f = 0; f < d; ++f) {
        if (pos1[f] < top && pos2[f] < top) {
            fixed[f] = true;
            out.fixed_set.push_back(f);
        }
    }
    std::vector<int> rest;
    for (int f = 0; f < d; ++f) {
        if (!fixed[f]) rest.push_back(f);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
        const int sa = pos1[a] + pos2[a];
        const int sb = pos1[b] + pos2[b];
        if (sa != sb) return sa > sb;  // worst (highest average rank) first
        return a < b;
    });
    out.elimination_order = std::move(rest);
    return out;
}

void write_ranking(std::ostream& os, const Ranking& r) {
    const bool catalog = static_cast<int>(r.order.size()) == kNumFeatures;
    os << "position,index,name,score\n";
    char buf[64];
    for (std::size_t k = 0; k < r.order.size(); ++k) {
        const int idx = r.order[k];
        std::snprintf(buf, sizeof(buf), "%.12g", r.scores[k]);
        os << k << ',' << idx << ','
           << (catalog ? FeatureCatalog::instance().entry(idx).name : "f")
           << ',' << buf << '\n';
    }
}

}  // namespace rrc
