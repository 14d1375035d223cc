#include "rrc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rrc/rng.hpp"

namespace rrc {

namespace {

// sequence restricted to a member's feature mask
std::vector<std::vector<double>> masked_steps(const SequenceSample& seq,
                                              const FeatureMask& mask) {
    std::vector<int> active;
    for (int f = 0; f < kNumFeatures; ++f) {
        if (mask.active[f]) active.push_back(f);
    }
    std::vector<std::vector<double>> steps;
    steps.reserve(seq.feature_vectors.size());
    for (const auto& fv : seq.feature_vectors) {
        std::vector<double> step(active.size());
        for (std::size_t k = 0; k < active.size(); ++k) step[k] = fv.values[active[k]];
        steps.push_back(std::move(step));
    }
    return steps;
}

FeatureMask full_mask(const std::string& owner) {
    FeatureMask m;
    m.owner = owner;
    m.active.fill(true);
    m.provenance.fill(FeatureProvenance::kept);
    return m;
}

}  // namespace

PosteriorBundle PosteriorBundle::zero(int k) {
    PosteriorBundle b;
    b.k = k;
    b.pairwise.assign(static_cast<std::size_t>(k) * k, 0.0);
    b.ova.assign(k, 0.0);
    return b;
}

std::vector<double> score_classes(const PosteriorBundle& b) {
    std::vector<double> s(b.k, 0.0);
    for (int i = 0; i < b.k; ++i) {
        for (int j = 0; j < b.k; ++j) {
            if (j == i) continue;
            s[i] += b.pij(i, j) * (b.ova[i] + b.ova[j]);
        }
    }
    return s;
}

int argmax_class(const std::vector<double>& scores) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

bool detect_hidden_ova(const PosteriorBundle& b, double thr) {
    for (double p : b.ova) {
        if (p >= thr) return false;
    }
    return true;
}

bool detect_hidden_voting(const PosteriorBundle& b, int thr) {
    for (int i = 0; i < b.k; ++i) {
        int votes = b.ova[i] > 0.5 ? 1 : 0;
        for (int j = 0; j < b.k; ++j) {
            if (j != i && b.pij(i, j) > 0.5) ++votes;
        }
        if (votes >= thr) return false;
    }
    return true;
}

bool detect_hidden_ovoova(const PosteriorBundle& b, double thr) {
    const std::vector<double> s = score_classes(b);
    double c = 0.0;
    for (double v : s) c += v;
    if (c <= 0.0) return true;
    for (double v : s) {
        if (v / c >= thr) return false;
    }
    return true;
}

const char* hidden_method_name(HiddenMethod m) {
    switch (m) {
        case HiddenMethod::none: return "none";
        case HiddenMethod::ova_threshold: return "ova_threshold";
        case HiddenMethod::voting: return "voting";
        case HiddenMethod::ovoova_threshold: return "ovoova_threshold";
    }
    return "none";
}

HiddenMethod hidden_method_from_name(const std::string& name) {
    if (name == "none") return HiddenMethod::none;
    if (name == "ova_threshold") return HiddenMethod::ova_threshold;
    if (name == "voting") return HiddenMethod::voting;
    if (name == "ovoova_threshold") return HiddenMethod::ovoova_threshold;
    throw std::invalid_argument("unknown hidden method: " + name);
}

PosteriorBundle EnsembleModel::posteriors(const SequenceSample& seq) const {
    PosteriorBundle b = PosteriorBundle::zero(k_);
    for (const auto& [id, m] : members_) {
        const auto p = m.model.predict(masked_steps(seq, m.mask));
        if (m.task.ovo) {
            b.set_pij(m.task.class_a, m.task.class_b, p[1]);
        } else {
            b.ova[m.task.class_a] = p[1];
        }
    }
    return b;
}

int EnsembleModel::classify(const SequenceSample& seq) const {
    if (members_.empty()) throw std::runtime_error("classify: untrained ensemble");
    const PosteriorBundle b = posteriors(seq);
    switch (hidden_.method) {
        case HiddenMethod::ova_threshold:
            if (detect_hidden_ova(b, hidden_.thr)) return kHiddenClassId;
            break;
        case HiddenMethod::voting:
            if (detect_hidden_voting(b, hidden_.vote_thr)) return kHiddenClassId;
            break;
        case HiddenMethod::ovoova_threshold:
            if (detect_hidden_ovoova(b, hidden_.thr)) return kHiddenClassId;
            break;
        case HiddenMethod::none:
            break;
    }
    return argmax_class(score_classes(b));
}

EnsembleModel train_ensemble(const std::vector<SequenceSample>& sequences,
                             const std::map<std::string, FeatureMask>& masks,
                             const ClassifierConfig& base_cfg, std::uint64_t seed,
                             int jobs) {
    for (const auto& s : sequences) {
        if (s.label == Label::other)
            throw std::invalid_argument("train_ensemble: hidden-class sample in training data");
    }
    EnsembleModel model;
    const auto tasks = enumerate_tasks(kNumTrainedClasses);
    std::vector<EnsembleModel::Member> members(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());

    auto train_one = [&](std::size_t i) {
        const BinaryTask& task = tasks[i];
        EnsembleModel::Member m;
        m.task = task;
        const auto it = masks.find(task.id());
        m.mask = it != masks.end() ? it->second : full_mask(task.id());

        std::vector<TrainSequence> data;
        for (const auto& s : sequences) {
            const int li = static_cast<int>(s.label);
            if (task.ovo && li != task.class_a && li != task.class_b) continue;
            TrainSequence ts;
            ts.label = li == task.class_a ? 1 : 0;
            ts.steps = masked_steps(s, m.mask);
            data.push_back(std::move(ts));
        }
        ClassifierConfig cfg = base_cfg;
        cfg.num_classes = 2;
        cfg.seed = Rng::mix(seed, Rng::mix(0x656e73ULL, i));
        m.model = train(data, cfg);
        members[i] = std::move(m);
    };

    auto run_range = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < tasks.size(); i += stride) {
            try {
                train_one(i);
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
    for (auto& m : members) model.members_[m.task.id()] = std::move(m);
    return model;
}

std::vector<SweepPoint> sweep_thresholds(const EnsembleModel& model,
                                         const std::vector<SequenceSample>& tuning_regular,
                                         const std::vector<SequenceSample>& tuning_hidden,
                                         double grid_step) {
    if (tuning_hidden.empty())
        throw std::invalid_argument("sweep_thresholds: no hidden samples in tuning half");

    struct Labeled {
        PosteriorBundle bundle;
        int truth;
        int base_pred;
    };
    std::vector<Labeled> points;
    for (const auto& s : tuning_regular) {
        PosteriorBundle b = model.posteriors(s);
        const int pred = argmax_class(score_classes(b));
        points.push_back({std::move(b), static_cast<int>(s.label), pred});
    }
    for (const auto& s : tuning_hidden) {
        PosteriorBundle b = model.posteriors(s);
        const int pred = argmax_class(score_classes(b));
        points.push_back({std::move(b), kHiddenClassId, pred});
    }
    const double num_hidden = static_cast<double>(tuning_hidden.size());
    const double num_total = static_cast<double>(points.size());

    std::vector<SweepPoint> series;
    auto emit = [&](HiddenMethod method, double thr, auto&& is_hidden) {
        double flagged_hidden = 0.0, correct = 0.0;
        for (const auto& p : points) {
            const bool flagged = is_hidden(p.bundle);
            const int pred = flagged ? kHiddenClassId : p.base_pred;
            if (p.truth == kHiddenClassId && flagged) flagged_hidden += 1.0;
            if (pred == p.truth) correct += 1.0;
        }
        series.push_back({method, thr, flagged_hidden / num_hidden, correct / num_total});
    };

    const int steps = static_cast<int>(std::round(1.0 / grid_step));
    for (int g = 0; g <= steps; ++g) {
        const double thr = g * grid_step;
        emit(HiddenMethod::ova_threshold, thr,
             [&](const PosteriorBundle& b) { return detect_hidden_ova(b, thr); });
    }
    for (int v = 1; v <= model.num_classes(); ++v) {
        emit(HiddenMethod::voting, static_cast<double>(v),
             [&](const PosteriorBundle& b) { return detect_hidden_voting(b, v); });
    }
    for (int g = 0; g <= steps; ++g) {
        const double thr = g * grid_step;
        emit(HiddenMethod::ovoova_threshold, thr,
             [&](const PosteriorBundle& b) { return detect_hidden_ovoova(b, thr); });
    }
    return series;
}

void write_sweep(std::ostream& os, const std::vector<SweepPoint>& series) {
    os << "method,thr,tpr_hidden,micro_f1\n";
    char buf[96];
    for (const auto& p : series) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6f,%.6f\n",
                      hidden_method_name(p.method), p.thr, p.tpr_hidden, p.micro_f1);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Serialization: one versioned container bundling members, masks, and the
// hidden config.

void EnsembleModel::save(std::ostream& os) const {
    os << "rrc-ensemble-1\n";
    os << "classes " << k_ << '\n';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", hidden_.thr);
    os << "hidden " << hidden_method_name(hidden_.method) << ' ' << buf << ' '
       << hidden_.vote_thr << '\n';
    os << "members " << members_.size() << '\n';
    for (const auto& [id, m] : members_) {
        os << "member " << id << ' ' << (m.task.ovo ? "ovo" : "ova") << ' '
           << m.task.class_a << ' ' << m.task.class_b << '\n';
        os << "mask ";
        for (int f = 0; f < kNumFeatures; ++f) os << (m.mask.active[f] ? '1' : '0');
        os << '\n';
        os << "provenance ";
        for (int f = 0; f < kNumFeatures; ++f)
            os << static_cast<char>(m.mask.provenance[f]);
        os << '\n';
        m.model.save(os);
    }
}

EnsembleModel EnsembleModel::load(std::istream& is) {
    std::string magic;
    is >> magic;
    if (magic != "rrc-ensemble-1")
        throw std::runtime_error("ensemble load: bad magic '" + magic + "'");
    EnsembleModel model;
    std::string key, method;
    std::size_t count = 0;
    is >> key >> model.k_;
    if (key != "classes") throw std::runtime_error("ensemble load: expected classes");
    std::string thr_tok;
    is >> key >> method >> thr_tok >> model.hidden_.vote_thr;
    if (key != "hidden") throw std::runtime_error("ensemble load: expected hidden");
    model.hidden_.method = hidden_method_from_name(method);
    model.hidden_.thr = std::strtod(thr_tok.c_str(), nullptr);
    is >> key >> count;
    if (key != "members") throw std::runtime_error("ensemble load: expected members");
    for (std::size_t i = 0; i < count; ++i) {
        Member m;
        std::string id, kind;
        is >> key >> id >> kind >> m.task.class_a >> m.task.class_b;
        if (key != "member") throw std::runtime_error("ensemble load: expected member");
        m.task.ovo = kind == "ovo";
        std::string bits;
        is >> key >> bits;
        if (key != "mask" || bits.size() != kNumFeatures)
            throw std::runtime_error("ensemble load: bad mask");
        for (int f = 0; f < kNumFeatures; ++f) m.mask.active[f] = bits[f] == '1';
        is >> key >> bits;
        if (key != "provenance" || bits.size() != kNumFeatures)
            throw std::runtime_error("ensemble load: bad provenance");
        for (int f = 0; f < kNumFeatures; ++f)
            m.mask.provenance[f] = static_cast<FeatureProvenance>(bits[f]);
        m.mask.owner = id;
        m.model = TrainedClassifier::load(is);
        model.members_[id] = std::move(m);
    }
    return model;
}

}  // namespace rrc
