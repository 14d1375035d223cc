#include "rrc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>

#include "rrc/eval.hpp"
#include "rrc/rng.hpp"

namespace rrc {

namespace {

std::uint64_t task_key(const BinaryTask& t) {
    return Rng::mix(t.ovo ? 0x6f766fULL : 0x6f7661ULL,
                    static_cast<std::uint64_t>(t.class_a * 16 + t.class_b + 1));
}

// label 1 = class_a ("one"/first class), 0 = the other side
int binary_label(Label l, const BinaryTask& t) {
    return static_cast<int>(l) == t.class_a ? 1 : 0;
}

bool task_accepts(Label l, const BinaryTask& t) {
    if (l == Label::other) return false;  // hidden class never trains
    if (!t.ovo) return true;
    const int li = static_cast<int>(l);
    return li == t.class_a || li == t.class_b;
}

}  // namespace

int FeatureMask::count() const {
    return static_cast<int>(std::count(active.begin(), active.end(), true));
}

std::string BinaryTask::id() const {
    if (ovo)
        return std::string("ovo_") + label_name(static_cast<Label>(class_a)) + "_" +
               label_name(static_cast<Label>(class_b));
    return std::string("ova_") + label_name(static_cast<Label>(class_a));
}

std::vector<BinaryTask> enumerate_tasks(int k) {
    std::vector<BinaryTask> tasks;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) tasks.push_back({true, i, j});
    }
    for (int i = 0; i < k; ++i) tasks.push_back({false, i, -1});
    return tasks;
}

std::pair<FeatureMask, SelectionTrace> guided_backward_elimination(
    const FusedRanking& fused, const SubsetScorer& scorer, double tol, int passes) {
    FeatureMask mask;
    SelectionTrace trace;

    std::set<int> active(fused.fixed_set.begin(), fused.fixed_set.end());
    active.insert(fused.elimination_order.begin(), fused.elimination_order.end());
    const std::set<int> fixed(fused.fixed_set.begin(), fused.fixed_set.end());

    auto as_vector = [](const std::set<int>& s) {
        return std::vector<int>(s.begin(), s.end());
    };

    double score_with = 0.0;
    try {
        score_with = scorer(as_vector(active));
        trace.start_score = score_with;

        const int max_sweeps = passes > 0 ? passes : 1000;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            int drops = 0;
            for (int f : fused.elimination_order) {
                if (!active.count(f)) continue;  // dropped in an earlier sweep
                if (active.size() == 1) break;   // never empty the mask
                std::set<int> cand = active;
                cand.erase(f);
                const double score_without = scorer(as_vector(cand));
                const bool drop = score_without >= score_with - tol;
                trace.entries.push_back({f, score_with, score_without, drop});
                if (drop) {
                    active = std::move(cand);
                    score_with = score_without;
                    ++drops;
                }
            }
            if (drops == 0) break;
        }
    } catch (const SelectionError&) {
        throw;
    } catch (const std::exception& e) {
        throw SelectionError(std::string("selection scorer failed: ") + e.what(), trace);
    }
    trace.final_score = score_with;

    for (int f = 0; f < kNumFeatures; ++f) mask.provenance[f] = FeatureProvenance::dropped;
    for (int f : active) {
        mask.active[f] = true;
        mask.provenance[f] = fixed.count(f) ? FeatureProvenance::fixed
                                            : FeatureProvenance::kept;
    }
    for (int f : fixed) mask.provenance[f] = FeatureProvenance::fixed;
    return {std::move(mask), std::move(trace)};
}

SelectionResult select_for_task(const BinaryTask& task,
                                const std::vector<SequenceSample>& sequences,
                                const std::vector<FeatureVector>& window_features,
                                const SelectionConfig& cfg) {
    // task dataset
    std::vector<const SequenceSample*> data;
    std::vector<int> labels;
    std::set<std::int64_t> pos_instances, neg_instances;
    for (const auto& s : sequences) {
        if (!task_accepts(s.label, task)) continue;
        data.push_back(&s);
        labels.push_back(binary_label(s.label, task));
        if (!s.augmented) {
            (labels.back() == 1 ? pos_instances : neg_instances).insert(s.instance_id);
        }
    }
    if (pos_instances.empty() || neg_instances.empty())
        throw std::runtime_error("select_for_task: empty class for task " + task.id());

    // rankings on the task's original (non-augmented) window features, with a
    // deterministic stride cap
    std::vector<const FeatureVector*> rank_rows;
    for (const auto& fv : window_features) {
        if (!fv.augmented && task_accepts(fv.label, task)) rank_rows.push_back(&fv);
    }
    if (static_cast<int>(rank_rows.size()) > cfg.max_rank_samples && cfg.max_rank_samples > 0) {
        std::vector<const FeatureVector*> kept;
        const std::size_t n = rank_rows.size();
        for (int i = 0; i < cfg.max_rank_samples; ++i)
            kept.push_back(rank_rows[i * n / cfg.max_rank_samples]);
        rank_rows = std::move(kept);
    }
    FeatureColumns cols;
    cols.columns.assign(kNumFeatures, {});
    for (const auto* fv : rank_rows) {
        cols.labels.push_back(binary_label(fv->label, task));
        for (int f = 0; f < kNumFeatures; ++f) cols.columns[f].push_back(fv->values[f]);
    }

    SelectionResult res;
    res.jmi = jmi_rank(cols, cfg.bins);
    res.multisurf = multisurf_rank(cols);
    res.fused = fuse(res.jmi, res.multisurf, cfg.top);

    // instance-grouped stratified folds; stratification by the true class
    // label is at least as strict as by binary label
    std::vector<InstanceInfo> instances;
    {
        std::set<std::int64_t> seen;
        for (const auto* s : data) {
            if (!s->augmented && seen.insert(s->instance_id).second)
                instances.push_back({s->instance_id, s->label});
        }
    }
    const auto folds = kfold_split(instances, cfg.folds,
                                   Rng::mix(cfg.seed, task_key(task)));

    SubsetScorer scorer = [&](const std::vector<int>& active) {
        double total = 0.0;
        for (int fold = 0; fold < cfg.folds; ++fold) {
            std::vector<TrainSequence> train_set;
            std::vector<std::pair<const SequenceSample*, int>> test_set;
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto* s = data[i];
                const int f = folds.at(s->instance_id);
                if (f == fold) {
                    if (!s->augmented) test_set.emplace_back(s, labels[i]);
                    continue;
                }
                TrainSequence ts;
                ts.label = labels[i];
                for (const auto& fv : s->feature_vectors) {
                    std::vector<double> step(active.size());
                    for (std::size_t k = 0; k < active.size(); ++k)
                        step[k] = fv.values[active[k]];
                    ts.steps.push_back(std::move(step));
                }
                train_set.push_back(std::move(ts));
            }
            ClassifierConfig ccfg = cfg.classifier;
            ccfg.num_classes = 2;
            ccfg.seed = Rng::mix(Rng::mix(cfg.seed, task_key(task)),
                                 static_cast<std::uint64_t>(fold));
            const TrainedClassifier model = train(train_set, ccfg);

            ConfusionMatrix cm(2);
            for (const auto& [s, y] : test_set) {
                std::vector<std::vector<double>> steps;
                for (const auto& fv : s->feature_vectors) {
                    std::vector<double> step(active.size());
                    for (std::size_t k = 0; k < active.size(); ++k)
                        step[k] = fv.values[active[k]];
                    steps.push_back(std::move(step));
                }
                const auto p = model.predict(steps);
                cm.add(y, p[1] > p[0] ? 1 : 0);
            }
            total += macro_f1(cm);
        }
        return total / cfg.folds;
    };

    auto [mask, trace] = guided_backward_elimination(res.fused, scorer, cfg.tol, cfg.passes);
    mask.owner = task.id();
    res.mask = std::move(mask);
    res.trace = std::move(trace);
    return res;
}

std::map<std::string, SelectionResult> select_all(
    const std::vector<SequenceSample>& sequences,
    const std::vector<FeatureVector>& window_features, const SelectionConfig& cfg,
    int jobs) {
    const auto tasks = enumerate_tasks(kNumTrainedClasses);
    std::vector<SelectionResult> results(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());

    auto run_range = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < tasks.size(); i += stride) {
            try {
                results[i] = select_for_task(tasks[i], sequences, window_features, cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (jobs <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        const std::size_t n = std::min<std::size_t>(jobs, tasks.size());
        for (std::size_t w = 0; w < n; ++w) pool.emplace_back(run_range, w, n);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::map<std::string, SelectionResult> out;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        out[tasks[i].id()] = std::move(results[i]);
    return out;
}

void write_mask(std::ostream& os, const FeatureMask& mask) {
    os << "classifier,index,name,active,provenance\n";
    const auto& cat = FeatureCatalog::instance();
    for (int f = 0; f < kNumFeatures; ++f) {
        os << mask.owner << ',' << f << ',' << cat.entry(f).name << ','
           << (mask.active[f] ? 1 : 0) << ','
           << static_cast<char>(mask.provenance[f]) << '\n';
    }
}

void write_trace(std::ostream& os, const SelectionTrace& trace) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "# start %.12g final %.12g\n", trace.start_score,
                  trace.final_score);
    os << buf;
    os << "feature,name,score_with,score_without,decision\n";
    const auto& cat = FeatureCatalog::instance();
    for (const auto& e : trace.entries) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g", e.score_with, e.score_without);
        os << e.feature << ',' << cat.entry(e.feature).name << ',' << buf << ','
           << (e.dropped ? "drop" : "keep") << '\n';
    }
}

}  // namespace rrc
