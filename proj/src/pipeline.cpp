#include "rrc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rrc/eval.hpp"
#include "rrc/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace rrc {

namespace {

// ---------------------------------------------------------------------------
// Strict JSON helpers: every object is checked against its known key set so
// a typoed key fails with a field path instead of being silently ignored.

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("config schema violation at " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> keys) {
    if (!obj.is_object()) schema_error(path, "expected object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
                return key == k;
            }) == keys.end())
            schema_error(path + "." + key, "unknown key");
    }
}

void get_num(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number()) schema_error(path + "." + key, "expected number");
    out = obj[key].get<double>();
}

void get_int(const json& obj, const std::string& path, const char* key, int& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number_integer()) schema_error(path + "." + key, "expected integer");
    out = obj[key].get<int>();
}

void get_u64(const json& obj, const std::string& path, const char* key,
             std::uint64_t& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer())
        schema_error(path + "." + key, "expected integer");
    out = obj[key].get<std::uint64_t>();
}

void get_bool(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_boolean()) schema_error(path + "." + key, "expected boolean");
    out = obj[key].get<bool>();
}

void get_str(const json& obj, const std::string& path, const char* key,
             std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_string()) schema_error(path + "." + key, "expected string");
    out = obj[key].get<std::string>();
}

Backend backend_from_name(const std::string& name, const std::string& path) {
    if (name == "logistic") return Backend::logistic;
    if (name == "recurrent") return Backend::recurrent;
    schema_error(path, "expected \"logistic\" or \"recurrent\"");
}

const char* backend_name(Backend b) {
    return b == Backend::logistic ? "logistic" : "recurrent";
}

void parse_classifier(const json& obj, const std::string& path, ClassifierConfig& cfg,
                      bool with_training_knobs) {
    if (with_training_knobs) {
        check_keys(obj, path,
                   {"backend", "hidden_units", "epochs", "learning_rate", "batch_size",
                    "grad_clip", "max_class_ratio"});
        get_num(obj, path, "grad_clip", cfg.grad_clip);
        get_num(obj, path, "max_class_ratio", cfg.max_class_ratio);
    }
    std::string backend;
    get_str(obj, path, "backend", backend);
    if (!backend.empty()) cfg.backend = backend_from_name(backend, path + ".backend");
    get_int(obj, path, "hidden_units", cfg.hidden_units);
    get_int(obj, path, "epochs", cfg.epochs);
    get_num(obj, path, "learning_rate", cfg.learning_rate);
    get_int(obj, path, "batch_size", cfg.batch_size);
}

// ---------------------------------------------------------------------------
// Fingerprinting: FNV-1a over canonical per-stage config strings chained
// with the upstream stage fingerprints.

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fs::path stamp_path(const RunConfig& cfg, Stage s) {
    return fs::path(cfg.out_dir) / "stamps" / (std::string(stage_name(s)) + ".stamp");
}

void write_stamp(const RunConfig& cfg, Stage s, std::uint64_t fp) {
    fs::create_directories(fs::path(cfg.out_dir) / "stamps");
    std::ofstream os(stamp_path(cfg, s));
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    os << buf << '\n';
}

std::optional<std::uint64_t> read_stamp(const RunConfig& cfg, Stage s) {
    std::ifstream is(stamp_path(cfg, s));
    std::string hex;
    if (!(is >> hex)) return std::nullopt;
    return std::strtoull(hex.c_str(), nullptr, 16);
}

// ---------------------------------------------------------------------------
// Artifact paths and dependency checks

fs::path art(const RunConfig& cfg, const char* name) {
    return fs::path(cfg.out_dir) / name;
}

std::ifstream open_dep(const RunConfig& cfg, const char* name, Stage producer) {
    std::ifstream is(art(cfg, name));
    if (!is)
        throw std::runtime_error(std::string("stage dependency missing: ") +
                                 stage_name(producer));
    return is;
}

std::ofstream open_out(const RunConfig& cfg, const char* name) {
    fs::create_directories(cfg.out_dir);
    std::ofstream os(art(cfg, name));
    if (!os)
        throw std::runtime_error(std::string("cannot write artifact: ") + name);
    return os;
}

// ---------------------------------------------------------------------------
// Samples artifact (clustered, windowed, possibly augmented cluster samples)

void write_samples(std::ostream& os, const std::vector<ClusterSample>& samples) {
    os << "rrc-samples-1\n";
    char buf[40];
    for (const auto& s : samples) {
        os << "sample " << s.instance_id << ' ' << label_name(s.label) << ' '
           << g(s.window_start) << ' ' << g(s.window_len) << ' ' << s.core_count << ' '
           << (s.augmented ? 1 : 0) << ' ' << s.detections.size() << '\n';
        for (const auto& d : s.detections) {
            std::snprintf(buf, sizeof(buf), "%.17g", d.t);
            os << d.sensor_id << ' ' << buf << ' ' << g(d.range) << ' ' << g(d.azimuth)
               << ' ' << g(d.doppler_raw) << ' ' << g(d.doppler_comp) << ' '
               << g(d.amplitude) << ' ' << g(d.x) << ' ' << g(d.y) << ' '
               << (d.core ? 1 : 0) << '\n';
        }
    }
}

std::vector<ClusterSample> read_samples(std::istream& is) {
    std::string magic;
    if (!(is >> magic) || magic != "rrc-samples-1")
        throw std::runtime_error("samples artifact: bad magic");
    std::vector<ClusterSample> out;
    std::string key;
    while (is >> key) {
        if (key != "sample") throw std::runtime_error("samples artifact: expected sample");
        ClusterSample s;
        std::string label;
        std::size_t n = 0;
        int augmented = 0;
        is >> s.instance_id >> label >> s.window_start >> s.window_len >> s.core_count >>
            augmented >> n;
        const auto l = label_from_name(label);
        if (!l) throw std::runtime_error("samples artifact: unknown label " + label);
        s.label = *l;
        s.augmented = augmented != 0;
        s.detections.resize(n);
        for (auto& d : s.detections) {
            int core = 0;
            is >> d.sensor_id >> d.t >> d.range >> d.azimuth >> d.doppler_raw >>
                d.doppler_comp >> d.amplitude >> d.x >> d.y >> core;
            d.core = core != 0;
        }
        if (!is) throw std::runtime_error("samples artifact: truncated record");
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Combined masks artifact (machine-readable; per-task CSVs are for humans)

void write_masks_file(std::ostream& os, const std::map<std::string, SelectionResult>& res) {
    os << "rrc-masks-1\n";
    for (const auto& [id, r] : res) {
        os << id << ' ';
        for (int f = 0; f < kNumFeatures; ++f) os << (r.mask.active[f] ? '1' : '0');
        os << ' ';
        for (int f = 0; f < kNumFeatures; ++f)
            os << static_cast<char>(r.mask.provenance[f]);
        os << ' ' << g(r.trace.start_score) << ' ' << g(r.trace.final_score) << '\n';
    }
}

std::map<std::string, FeatureMask> read_masks_file(std::istream& is) {
    std::string magic;
    if (!(is >> magic) || magic != "rrc-masks-1")
        throw std::runtime_error("masks artifact: bad magic");
    std::map<std::string, FeatureMask> out;
    std::string id, bits, prov;
    double s0 = 0.0, s1 = 0.0;
    while (is >> id >> bits >> prov >> s0 >> s1) {
        if (bits.size() != kNumFeatures || prov.size() != kNumFeatures)
            throw std::runtime_error("masks artifact: bad mask for " + id);
        FeatureMask m;
        m.owner = id;
        for (int f = 0; f < kNumFeatures; ++f) {
            m.active[f] = bits[f] == '1';
            m.provenance[f] = static_cast<FeatureProvenance>(prov[f]);
        }
        out[id] = std::move(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sequence reconstruction from the feature matrix. Regular windows group per
// instance; augmented windows arrive in contiguous per-copy blocks, so a
// non-increasing window_start marks a copy boundary.

std::vector<SequenceSample> sequences_from_features(const std::vector<FeatureVector>& rows) {
    std::map<std::int64_t, std::vector<FeatureVector>> regular;
    std::map<std::int64_t, std::vector<std::vector<FeatureVector>>> augmented;
    for (const auto& fv : rows) {
        if (!fv.augmented) {
            regular[fv.instance_id].push_back(fv);
            continue;
        }
        auto& blocks = augmented[fv.instance_id];
        if (blocks.empty() || blocks.back().back().window_start >= fv.window_start)
            blocks.emplace_back();
        blocks.back().push_back(fv);
    }
    std::vector<SequenceSample> out;
    for (auto& [id, windows] : regular) {
        auto seqs = build_sequences(windows);
        out.insert(out.end(), seqs.begin(), seqs.end());
    }
    for (auto& [id, blocks] : augmented) {
        for (auto& windows : blocks) {
            auto seqs = build_sequences(windows);
            out.insert(out.end(), seqs.begin(), seqs.end());
        }
    }
    return out;
}

std::vector<FeatureVector> load_features(const RunConfig& cfg) {
    auto is = open_dep(cfg, "features.csv", Stage::extract);
    return read_feature_matrix(is);
}

// non-augmented instance list for a label predicate
template <typename Pred>
std::vector<InstanceInfo> instances_where(const std::vector<SequenceSample>& seqs,
                                          Pred pred) {
    std::map<std::int64_t, Label> seen;
    for (const auto& s : seqs) {
        if (!s.augmented && pred(s.label)) seen.emplace(s.instance_id, s.label);
    }
    std::vector<InstanceInfo> out;
    for (const auto& [id, label] : seen) out.push_back({id, label});
    return out;
}

struct EvalOutcome {
    std::vector<double> fold_macro;
    std::vector<double> fold_baseline;
    double mean_macro = 0.0;
    double mean_baseline = 0.0;
    ConfusionMatrix pooled{kNumTrainedClasses};
    struct HiddenRow {
        HiddenMethod method = HiddenMethod::ova_threshold;
        double thr = 0.0;
        double tuning_tpr = 0.0;
        double tuning_micro = 0.0;
        double test_tpr = 0.0;
        double fold0_macro_off = 0.0;
        double fold0_macro_on = 0.0;
    };
    std::vector<HiddenRow> hidden_rows;
    std::vector<SweepPoint> fold0_sweep;
};

// stage-scoped seeds so adding a stage never perturbs another stage's stream
std::uint64_t stage_seed(const RunConfig& cfg, const char* tag) {
    return Rng::mix(cfg.seed, fnv1a(tag));
}

// ---------------------------------------------------------------------------
// Per-stage config strings for fingerprinting. `jobs` is deliberately
// excluded: parallelism must not change any artifact byte.

std::string generator_cfg_string(const RunConfig& cfg) {
    const auto& gc = cfg.generator;
    std::ostringstream ss;
    ss << "gen1|";
    for (int c : gc.counts) ss << c << ',';
    ss << '|' << g(gc.duration_min) << '|' << g(gc.duration_max) << '|'
       << g(gc.ego_speed) << '|' << g(gc.ego_yaw_rate) << '|' << g(gc.fov_half_angle)
       << '|' << g(gc.range_min) << '|' << g(gc.range_max) << '|';
    for (const auto& s : gc.sensors)
        ss << g(s.mount_x) << ',' << g(s.mount_y) << ',' << g(s.yaw) << ';';
    for (const auto& p : gc.profiles)
        ss << g(p.extent_x) << ',' << g(p.extent_y) << ',' << g(p.speed_min) << ','
           << g(p.speed_max) << ',' << g(p.micro_doppler_std) << ','
           << g(p.detection_rate) << ',' << g(p.amplitude_mean) << ','
           << g(p.amplitude_std) << ',' << p.incoherent << ';';
    return ss.str();
}

std::string augment_cfg_string(const AugmentConfig& a) {
    std::ostringstream ss;
    ss << "aug1|" << a.copies << '|' << g(a.drop_prob) << '|' << g(a.jitter_range) << '|'
       << g(a.jitter_azimuth) << '|' << g(a.jitter_doppler) << '|'
       << g(a.jitter_amplitude);
    return ss.str();
}

std::string clustering_cfg_string(const DbscanParams& p) {
    std::ostringstream ss;
    ss << "dbs1|" << g(p.eps_xy) << '|' << g(p.eps_t) << '|' << g(p.eps_v) << '|'
       << p.min_pts;
    return ss.str();
}

std::string selection_cfg_string(const SelectionConfig& s) {
    std::ostringstream ss;
    ss << "sel1|" << s.folds << '|' << g(s.tol) << '|' << s.passes << '|' << s.top << '|'
       << s.bins << '|' << s.max_rank_samples << '|' << backend_name(s.classifier.backend)
       << '|' << s.classifier.hidden_units << '|' << s.classifier.epochs << '|'
       << g(s.classifier.learning_rate) << '|' << s.classifier.batch_size;
    return ss.str();
}

std::string training_cfg_string(const ClassifierConfig& c) {
    std::ostringstream ss;
    ss << "trn1|" << backend_name(c.backend) << '|' << c.hidden_units << '|' << c.epochs
       << '|' << g(c.learning_rate) << '|' << c.batch_size << '|' << g(c.grad_clip) << '|'
       << g(c.max_class_ratio);
    return ss.str();
}

std::string hidden_cfg_string(const RunConfig& cfg) {
    std::ostringstream ss;
    ss << "hid1|" << hidden_method_name(cfg.hidden.method) << '|' << g(cfg.hidden.thr)
       << '|' << cfg.hidden.vote_thr << '|' << g(cfg.grid_step);
    return ss.str();
}

std::string eval_cfg_string(const EvalConfig& e) {
    std::ostringstream ss;
    ss << "evl1|" << e.folds << '|' << e.compare_baseline << '|' << g(e.target_tpr);
    return ss.str();
}

std::uint64_t stage_fingerprint(const RunConfig& cfg, Stage s);

std::uint64_t dep_fp(const RunConfig& cfg, Stage s) {
    return stage_fingerprint(cfg, s);
}

std::uint64_t stage_fingerprint(const RunConfig& cfg, Stage s) {
    std::uint64_t h = fnv1a(std::to_string(cfg.seed));
    h = fnv1a(stage_name(s), h);
    switch (s) {
        case Stage::gen:
            h = fnv1a(generator_cfg_string(cfg), h);
            break;
        case Stage::cluster:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::gen)), h);
            h = fnv1a(clustering_cfg_string(cfg.clustering), h);
            h = fnv1a(augment_cfg_string(cfg.generator.augment), h);
            break;
        case Stage::extract:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::cluster)), h);
            break;
        case Stage::rank:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::extract)), h);
            h = fnv1a(std::to_string(cfg.selection.bins), h);
            h = fnv1a(std::to_string(cfg.selection.max_rank_samples), h);
            break;
        case Stage::select:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::extract)), h);
            h = fnv1a(selection_cfg_string(cfg.selection), h);
            break;
        case Stage::train:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::extract)), h);
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::select)), h);
            h = fnv1a(training_cfg_string(cfg.training), h);
            h = fnv1a(hidden_cfg_string(cfg), h);
            break;
        case Stage::sweep:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::train)), h);
            h = fnv1a(eval_cfg_string(cfg.eval), h);
            break;
        case Stage::eval:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::extract)), h);
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::select)), h);
            h = fnv1a(training_cfg_string(cfg.training), h);
            h = fnv1a(hidden_cfg_string(cfg), h);
            h = fnv1a(eval_cfg_string(cfg.eval), h);
            break;
        case Stage::report:
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::select)), h);
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::sweep)), h);
            h = fnv1a(std::to_string(dep_fp(cfg, Stage::eval)), h);
            break;
    }
    return h;
}

std::vector<const char*> stage_artifacts(Stage s) {
    switch (s) {
        case Stage::gen:
            return {"detections.txt", "ego.txt", "truth.txt", "assoc.txt"};
        case Stage::cluster:
            return {"samples.txt"};
        case Stage::extract:
            return {"features.csv"};
        case Stage::rank:
            return {"rank_jmi.csv", "rank_multisurf.csv"};
        case Stage::select:
            return {"masks.txt"};
        case Stage::train:
            return {"ensemble.model"};
        case Stage::sweep:
            return {"sweep.csv"};
        case Stage::eval:
            return {"eval.txt", "confusion.txt", "eval_sweep.csv"};
        case Stage::report:
            return {"report.txt"};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Stage bodies

void stage_gen(const RunConfig& cfg) {
    GeneratorConfig gc = cfg.generator;
    gc.seed = stage_seed(cfg, "gen");
    const Scenario scenario = gen_scenario(gc);

    {
        auto os = open_out(cfg, "detections.txt");
        write_detection_log(os, scenario.detections);
    }
    {
        auto os = open_out(cfg, "ego.txt");
        write_ego_log(os, scenario.ego);
    }
    {
        auto os = open_out(cfg, "truth.txt");
        write_truth_table(os, scenario.truth);
    }
    {
        auto os = open_out(cfg, "assoc.txt");
        for (std::int64_t id : scenario.detection_instance) os << id << '\n';
    }
}

void stage_cluster(const RunConfig& cfg) {
    std::vector<PolarDetection> polar;
    std::vector<EgoState> ego;
    std::vector<TruthRecord> truth;
    std::vector<std::int64_t> assoc;
    {
        auto is = open_dep(cfg, "detections.txt", Stage::gen);
        polar = read_detection_log(is);
    }
    {
        auto is = open_dep(cfg, "ego.txt", Stage::gen);
        ego = read_ego_log(is);
    }
    {
        auto is = open_dep(cfg, "truth.txt", Stage::gen);
        truth = read_truth_table(is);
    }
    {
        auto is = open_dep(cfg, "assoc.txt", Stage::gen);
        std::int64_t id;
        while (is >> id) assoc.push_back(id);
    }
    if (assoc.size() != polar.size())
        throw std::runtime_error("cluster: association table does not match detections");

    const auto& sensors = cfg.generator.sensors;
    std::vector<RadarDetection> dets;
    std::vector<std::int64_t> det_instance;
    for (std::size_t i = 0; i < polar.size(); ++i) {
        const auto& p = polar[i];
        if (p.sensor_id < 0 || p.sensor_id >= static_cast<int>(sensors.size()))
            throw std::runtime_error("cluster: unknown sensor id " +
                                     std::to_string(p.sensor_id));
        const SensorPose& pose = sensors[p.sensor_id];
        auto d = to_vehicle_frame(p, pose);
        if (!d) continue;  // malformed line: dropped (read stage collects diags)
        const auto e = ego_at(ego, d->t);
        if (!e) throw std::runtime_error("cluster: ego gap at t=" + g(d->t));
        d->doppler_comp = compensate_doppler(*d, *e, pose);
        dets.push_back(*d);
        det_instance.push_back(assoc[i]);
    }

    const DbscanResult db = dbscan_cluster(dets, cfg.clustering);

    std::map<std::int64_t, std::vector<RadarDetection>> by_instance;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (db.cluster[i] == DbscanResult::kNoise) continue;
        RadarDetection d = dets[i];
        d.core = db.core[i];
        by_instance[det_instance[i]].push_back(d);
    }

    std::map<std::int64_t, Label> labels;
    for (const auto& t : truth) labels[t.instance_id] = t.label;

    std::vector<ClusterSample> samples;
    for (auto& [id, group] : by_instance) {
        const auto it = labels.find(id);
        if (it == labels.end())
            throw std::runtime_error("cluster: instance " + std::to_string(id) +
                                     " missing from truth table");
        auto windows = window_samples(id, it->second, group);
        samples.insert(samples.end(), windows.begin(), windows.end());
    }

    const auto& aug = cfg.generator.augment;
    std::vector<ClusterSample> augmented;
    for (int c = 0; c < aug.copies; ++c) {
        auto copies = perturb(samples, aug, sensors,
                              Rng::mix(stage_seed(cfg, "aug"), c));
        augmented.insert(augmented.end(), copies.begin(), copies.end());
    }
    samples.insert(samples.end(), augmented.begin(), augmented.end());

    auto os = open_out(cfg, "samples.txt");
    write_samples(os, samples);
}

void stage_extract(const RunConfig& cfg) {
    std::vector<ClusterSample> samples;
    {
        auto is = open_dep(cfg, "samples.txt", Stage::cluster);
        samples = read_samples(is);
    }
    std::vector<FeatureVector> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(extract_all(s));
    auto os = open_out(cfg, "features.csv");
    write_feature_matrix(os, rows);
}

void stage_rank(const RunConfig& cfg) {
    const auto rows = load_features(cfg);
    std::vector<const FeatureVector*> keep;
    for (const auto& fv : rows) {
        if (!fv.augmented && fv.label != Label::other) keep.push_back(&fv);
    }
    const int cap = cfg.selection.max_rank_samples;
    if (cap > 0 && static_cast<int>(keep.size()) > cap) {
        std::vector<const FeatureVector*> strided;
        const std::size_t n = keep.size();
        for (int i = 0; i < cap; ++i) strided.push_back(keep[i * n / cap]);
        keep = std::move(strided);
    }
    FeatureColumns cols;
    cols.columns.assign(kNumFeatures, {});
    for (const auto* fv : keep) {
        cols.labels.push_back(static_cast<int>(fv->label));
        for (int f = 0; f < kNumFeatures; ++f) cols.columns[f].push_back(fv->values[f]);
    }
    {
        auto os = open_out(cfg, "rank_jmi.csv");
        write_ranking(os, jmi_rank(cols, cfg.selection.bins));
    }
    {
        auto os = open_out(cfg, "rank_multisurf.csv");
        write_ranking(os, multisurf_rank(cols));
    }
}

void stage_select(const RunConfig& cfg) {
    const auto rows = load_features(cfg);
    const auto sequences = sequences_from_features(rows);

    SelectionConfig sc = cfg.selection;
    sc.seed = stage_seed(cfg, "sel");
    const auto results = select_all(sequences, rows, sc, cfg.jobs);

    fs::create_directories(fs::path(cfg.out_dir) / "masks");
    fs::create_directories(fs::path(cfg.out_dir) / "traces");
    fs::create_directories(fs::path(cfg.out_dir) / "rankings");
    for (const auto& [id, r] : results) {
        {
            std::ofstream os(fs::path(cfg.out_dir) / "masks" / (id + ".csv"));
            write_mask(os, r.mask);
        }
        {
            std::ofstream os(fs::path(cfg.out_dir) / "traces" / (id + ".csv"));
            write_trace(os, r.trace);
        }
        {
            std::ofstream os(fs::path(cfg.out_dir) / "rankings" / (id + "_jmi.csv"));
            write_ranking(os, r.jmi);
        }
        {
            std::ofstream os(fs::path(cfg.out_dir) / "rankings" / (id + "_multisurf.csv"));
            write_ranking(os, r.multisurf);
        }
    }
    auto os = open_out(cfg, "masks.txt");
    write_masks_file(os, results);
}

void stage_train(const RunConfig& cfg) {
    const auto rows = load_features(cfg);
    auto sequences = sequences_from_features(rows);
    sequences.erase(std::remove_if(sequences.begin(), sequences.end(),
                                   [](const SequenceSample& s) {
                                       return s.label == Label::other;
                                   }),
                    sequences.end());

    std::map<std::string, FeatureMask> masks;
    {
        auto is = open_dep(cfg, "masks.txt", Stage::select);
        masks = read_masks_file(is);
    }
    EnsembleModel model = train_ensemble(sequences, masks, cfg.training,
                                         stage_seed(cfg, "trn"), cfg.jobs);
    model.set_hidden(cfg.hidden);
    auto os = open_out(cfg, "ensemble.model");
    model.save(os);
}

// split helper shared by sweep and eval: fold assignment for regular
// instances plus the hidden halves, all under the eval-stage seed
struct EvalSplit {
    std::map<std::int64_t, int> fold;
    std::set<std::int64_t> hidden_tuning, hidden_test;
};

EvalSplit make_eval_split(const RunConfig& cfg, const std::vector<SequenceSample>& seqs) {
    EvalSplit split;
    const auto regular = instances_where(
        seqs, [](Label l) { return l != Label::other; });
    split.fold = kfold_split(regular, cfg.eval.folds, stage_seed(cfg, "evl"));
    const auto hidden = instances_where(seqs, [](Label l) { return l == Label::other; });
    if (hidden.size() >= 2) {
        auto [tuning, test] = hidden_split(hidden, stage_seed(cfg, "evl"));
        split.hidden_tuning.insert(tuning.begin(), tuning.end());
        split.hidden_test.insert(test.begin(), test.end());
    }
    return split;
}

void stage_sweep(const RunConfig& cfg) {
    const auto rows = load_features(cfg);
    const auto sequences = sequences_from_features(rows);
    EnsembleModel model = [&] {
        auto is = open_dep(cfg, "ensemble.model", Stage::train);
        return EnsembleModel::load(is);
    }();

    const EvalSplit split = make_eval_split(cfg, sequences);
    std::vector<SequenceSample> tuning_regular, tuning_hidden;
    for (const auto& s : sequences) {
        if (s.augmented) continue;
        if (s.label == Label::other) {
            if (split.hidden_tuning.count(s.instance_id)) tuning_hidden.push_back(s);
        } else if (split.fold.at(s.instance_id) == 0) {
            tuning_regular.push_back(s);
        }
    }
    const auto series = sweep_thresholds(model, tuning_regular, tuning_hidden,
                                         cfg.grid_step);
    auto os = open_out(cfg, "sweep.csv");
    write_sweep(os, series);
}

EvalOutcome run_evaluation(const RunConfig& cfg) {
    const auto rows = load_features(cfg);
    const auto sequences = sequences_from_features(rows);
    std::map<std::string, FeatureMask> masks;
    {
        auto is = open_dep(cfg, "masks.txt", Stage::select);
        masks = read_masks_file(is);
    }
    const EvalSplit split = make_eval_split(cfg, sequences);

    EvalOutcome out;
    out.pooled = ConfusionMatrix(kNumTrainedClasses);
    EnsembleModel fold0_model;

    for (int f = 0; f < cfg.eval.folds; ++f) {
        std::vector<SequenceSample> train_set;
        std::vector<const SequenceSample*> test_set;
        for (const auto& s : sequences) {
            if (s.label == Label::other) continue;
            if (split.fold.at(s.instance_id) == f) {
                if (!s.augmented) test_set.push_back(&s);
            } else {
                train_set.push_back(s);
            }
        }
        EnsembleModel model = train_ensemble(train_set, masks, cfg.training,
                                             Rng::mix(stage_seed(cfg, "evf"), f),
                                             cfg.jobs);
        ConfusionMatrix cm(kNumTrainedClasses);
        for (const auto* s : test_set)
            cm.add(static_cast<int>(s->label), model.classify(*s));
        for (int r = 0; r <= cm.k; ++r)
            for (int c = 0; c <= cm.k; ++c) out.pooled.counts[r][c] += cm.counts[r][c];
        out.fold_macro.push_back(macro_f1(cm));

        if (cfg.eval.compare_baseline) {
            EnsembleModel base = train_ensemble(train_set, {}, cfg.training,
                                                Rng::mix(stage_seed(cfg, "evf"), f),
                                                cfg.jobs);
            ConfusionMatrix bm(kNumTrainedClasses);
            for (const auto* s : test_set)
                bm.add(static_cast<int>(s->label), base.classify(*s));
            out.fold_baseline.push_back(macro_f1(bm));
        }
        if (f == 0) fold0_model = std::move(model);
    }
    for (double v : out.fold_macro) out.mean_macro += v;
    out.mean_macro /= out.fold_macro.size();
    if (!out.fold_baseline.empty()) {
        for (double v : out.fold_baseline) out.mean_baseline += v;
        out.mean_baseline /= out.fold_baseline.size();
    }

    // hidden-class protocol: tune thresholds on (fold-0 regular, hidden tuning
    // half), report TPR on the disjoint hidden test half and the macro-F1 cost
    // on fold-0 regular data
    if (split.hidden_tuning.empty() || split.hidden_test.empty()) return out;

    std::vector<SequenceSample> fold0_regular, tuning_hidden, test_hidden;
    for (const auto& s : sequences) {
        if (s.augmented) continue;
        if (s.label == Label::other) {
            if (split.hidden_tuning.count(s.instance_id)) tuning_hidden.push_back(s);
            else if (split.hidden_test.count(s.instance_id)) test_hidden.push_back(s);
        } else if (split.fold.at(s.instance_id) == 0) {
            fold0_regular.push_back(s);
        }
    }
    out.fold0_sweep = sweep_thresholds(fold0_model, fold0_regular, tuning_hidden,
                                       cfg.grid_step);

    for (HiddenMethod method : {HiddenMethod::ova_threshold, HiddenMethod::voting,
                                HiddenMethod::ovoova_threshold}) {
        // best tuning micro-F1 at or above the target TPR; if unattainable,
        // fall back to the highest-TPR point
        const SweepPoint* pick = nullptr;
        const SweepPoint* best_tpr = nullptr;
        for (const auto& p : out.fold0_sweep) {
            if (p.method != method) continue;
            if (!best_tpr || p.tpr_hidden > best_tpr->tpr_hidden) best_tpr = &p;
            if (p.tpr_hidden >= cfg.eval.target_tpr &&
                (!pick || p.micro_f1 > pick->micro_f1))
                pick = &p;
        }
        if (!pick) pick = best_tpr;
        if (!pick) continue;

        HiddenConfig hc;
        hc.method = method;
        hc.thr = pick->thr;
        hc.vote_thr = static_cast<int>(std::lround(pick->thr));
        fold0_model.set_hidden(hc);

        EvalOutcome::HiddenRow row;
        row.method = method;
        row.thr = pick->thr;
        row.tuning_tpr = pick->tpr_hidden;
        row.tuning_micro = pick->micro_f1;

        double flagged = 0.0;
        for (const auto& s : test_hidden)
            if (fold0_model.classify(s) == kHiddenClassId) flagged += 1.0;
        row.test_tpr = flagged / test_hidden.size();

        ConfusionMatrix on(kNumTrainedClasses), off(kNumTrainedClasses);
        for (const auto& s : fold0_regular) {
            on.add(static_cast<int>(s.label), fold0_model.classify(s));
            const PosteriorBundle b = fold0_model.posteriors(s);
            off.add(static_cast<int>(s.label), argmax_class(score_classes(b)));
        }
        row.fold0_macro_on = macro_f1(on);
        row.fold0_macro_off = macro_f1(off);
        out.hidden_rows.push_back(row);
    }
    fold0_model.set_hidden(HiddenConfig{});
    return out;
}

void stage_eval(const RunConfig& cfg) {
    const EvalOutcome out = run_evaluation(cfg);
    std::map<std::string, FeatureMask> masks;
    {
        auto is = open_dep(cfg, "masks.txt", Stage::select);
        masks = read_masks_file(is);
    }

    {
        auto os = open_out(cfg, "eval.txt");
        os << "rrc-eval-1\n";
        os << "folds " << cfg.eval.folds << '\n';
        for (std::size_t f = 0; f < out.fold_macro.size(); ++f) {
            os << "fold " << f << " macro_f1 " << g(out.fold_macro[f]);
            if (f < out.fold_baseline.size())
                os << " baseline_macro_f1 " << g(out.fold_baseline[f]);
            os << '\n';
        }
        os << "mean_macro_f1 " << g(out.mean_macro) << '\n';
        if (!out.fold_baseline.empty())
            os << "mean_baseline_macro_f1 " << g(out.mean_baseline) << '\n';
        for (const auto& r : out.hidden_rows) {
            os << "hidden " << hidden_method_name(r.method) << " thr " << g(r.thr)
               << " tuning_tpr " << g(r.tuning_tpr) << " tuning_micro "
               << g(r.tuning_micro) << " test_tpr " << g(r.test_tpr)
               << " fold0_macro_off " << g(r.fold0_macro_off) << " fold0_macro_on "
               << g(r.fold0_macro_on) << '\n';
        }
        std::map<std::string, std::array<bool, kNumFeatures>> active;
        for (const auto& [id, m] : masks) active[id] = m.active;
        const auto dist = feature_distribution_report(active);
        os << "median_mask_size " << g(dist.median_mask_size) << '\n';
        for (const auto& row : dist.rows) {
            os << "mask " << row.classifier;
            for (int c = 0; c < kNumCategories; ++c)
                os << ' ' << category_name(static_cast<FeatureCategory>(c)) << '='
                   << row.per_category[c];
            os << " total=" << row.total << '\n';
        }
    }
    {
        auto os = open_out(cfg, "confusion.txt");
        write_confusion(os, out.pooled);
    }
    {
        auto os = open_out(cfg, "eval_sweep.csv");
        write_sweep(os, out.fold0_sweep);
    }
}

void stage_report(const RunConfig& cfg) {
    auto slurp = [&](const char* name, Stage producer) {
        auto is = open_dep(cfg, name, producer);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const std::string eval_txt = slurp("eval.txt", Stage::eval);
    const std::string confusion = slurp("confusion.txt", Stage::eval);
    const std::string sweep = slurp("sweep.csv", Stage::sweep);
    const std::string masks = slurp("masks.txt", Stage::select);

    auto os = open_out(cfg, "report.txt");
    os << "rrc-report-1\n";
    os << "== config ==\n" << config_to_json(cfg) << '\n';
    os << "== selection ==\n" << masks;
    os << "== evaluation ==\n" << eval_txt;
    os << "== confusion ==\n" << confusion;
    os << "== sweep ==\n" << sweep;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::gen: return "gen";
        case Stage::cluster: return "cluster";
        case Stage::extract: return "extract";
        case Stage::rank: return "rank";
        case Stage::select: return "select";
        case Stage::train: return "train";
        case Stage::sweep: return "sweep";
        case Stage::eval: return "eval";
        case Stage::report: return "report";
    }
    return "?";
}

std::optional<Stage> stage_from_name(const std::string& name) {
    for (int i = 0; i < kNumStages; ++i) {
        const Stage s = static_cast<Stage>(i);
        if (name == stage_name(s)) return s;
    }
    return std::nullopt;
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    check_keys(root, "config",
               {"seed", "out_dir", "jobs", "generator", "clustering", "selection",
                "training", "hidden", "eval"});
    get_u64(root, "config", "seed", cfg.seed);
    get_str(root, "config", "out_dir", cfg.out_dir);
    get_int(root, "config", "jobs", cfg.jobs);

    if (root.contains("generator")) {
        const auto& o = root["generator"];
        const std::string p = "generator";
        check_keys(o, p,
                   {"counts", "duration_min", "duration_max", "ego_speed",
                    "ego_yaw_rate", "fov_half_angle", "range_min", "range_max",
                    "sensors", "augment"});
        if (o.contains("counts")) {
            if (!o["counts"].is_array() || o["counts"].size() != kNumLabels)
                schema_error(p + ".counts",
                             "expected array of " + std::to_string(kNumLabels));
            for (int i = 0; i < kNumLabels; ++i) {
                if (!o["counts"][i].is_number_integer())
                    schema_error(p + ".counts[" + std::to_string(i) + "]",
                                 "expected integer");
                cfg.generator.counts[i] = o["counts"][i].get<int>();
            }
        }
        get_num(o, p, "duration_min", cfg.generator.duration_min);
        get_num(o, p, "duration_max", cfg.generator.duration_max);
        get_num(o, p, "ego_speed", cfg.generator.ego_speed);
        get_num(o, p, "ego_yaw_rate", cfg.generator.ego_yaw_rate);
        get_num(o, p, "fov_half_angle", cfg.generator.fov_half_angle);
        get_num(o, p, "range_min", cfg.generator.range_min);
        get_num(o, p, "range_max", cfg.generator.range_max);
        if (o.contains("sensors")) {
            if (!o["sensors"].is_array() || o["sensors"].empty())
                schema_error(p + ".sensors", "expected non-empty array");
            cfg.generator.sensors.clear();
            for (std::size_t i = 0; i < o["sensors"].size(); ++i) {
                const std::string sp = p + ".sensors[" + std::to_string(i) + "]";
                check_keys(o["sensors"][i], sp, {"mount_x", "mount_y", "yaw"});
                SensorPose pose;
                get_num(o["sensors"][i], sp, "mount_x", pose.mount_x);
                get_num(o["sensors"][i], sp, "mount_y", pose.mount_y);
                get_num(o["sensors"][i], sp, "yaw", pose.yaw);
                cfg.generator.sensors.push_back(pose);
            }
        }
        if (o.contains("augment")) {
            const auto& a = o["augment"];
            const std::string ap = p + ".augment";
            check_keys(a, ap,
                       {"copies", "drop_prob", "jitter_range", "jitter_azimuth",
                        "jitter_doppler", "jitter_amplitude"});
            get_int(a, ap, "copies", cfg.generator.augment.copies);
            get_num(a, ap, "drop_prob", cfg.generator.augment.drop_prob);
            get_num(a, ap, "jitter_range", cfg.generator.augment.jitter_range);
            get_num(a, ap, "jitter_azimuth", cfg.generator.augment.jitter_azimuth);
            get_num(a, ap, "jitter_doppler", cfg.generator.augment.jitter_doppler);
            get_num(a, ap, "jitter_amplitude", cfg.generator.augment.jitter_amplitude);
        }
    }
    if (root.contains("clustering")) {
        const auto& o = root["clustering"];
        check_keys(o, "clustering", {"eps_xy", "eps_t", "eps_v", "min_pts"});
        get_num(o, "clustering", "eps_xy", cfg.clustering.eps_xy);
        get_num(o, "clustering", "eps_t", cfg.clustering.eps_t);
        get_num(o, "clustering", "eps_v", cfg.clustering.eps_v);
        get_int(o, "clustering", "min_pts", cfg.clustering.min_pts);
    }
    if (root.contains("selection")) {
        const auto& o = root["selection"];
        const std::string p = "selection";
        check_keys(o, p,
                   {"folds", "tol", "passes", "top", "bins", "max_rank_samples",
                    "backend", "hidden_units", "epochs", "learning_rate", "batch_size"});
        get_int(o, p, "folds", cfg.selection.folds);
        get_num(o, p, "tol", cfg.selection.tol);
        get_int(o, p, "passes", cfg.selection.passes);
        get_int(o, p, "top", cfg.selection.top);
        get_int(o, p, "bins", cfg.selection.bins);
        get_int(o, p, "max_rank_samples", cfg.selection.max_rank_samples);
        parse_classifier(o, p, cfg.selection.classifier, false);
    }
    if (root.contains("training"))
        parse_classifier(root["training"], "training", cfg.training, true);
    if (root.contains("hidden")) {
        const auto& o = root["hidden"];
        check_keys(o, "hidden", {"method", "thr", "vote_thr", "grid_step"});
        std::string method;
        get_str(o, "hidden", "method", method);
        if (!method.empty()) {
            try {
                cfg.hidden.method = hidden_method_from_name(method);
            } catch (const std::invalid_argument& e) {
                schema_error("hidden.method", e.what());
            }
        }
        get_num(o, "hidden", "thr", cfg.hidden.thr);
        get_int(o, "hidden", "vote_thr", cfg.hidden.vote_thr);
        get_num(o, "hidden", "grid_step", cfg.grid_step);
    }
    if (root.contains("eval")) {
        const auto& o = root["eval"];
        check_keys(o, "eval", {"folds", "compare_baseline", "target_tpr"});
        get_int(o, "eval", "folds", cfg.eval.folds);
        get_bool(o, "eval", "compare_baseline", cfg.eval.compare_baseline);
        get_num(o, "eval", "target_tpr", cfg.eval.target_tpr);
    }
    if (cfg.jobs < 1) schema_error("config.jobs", "expected >= 1");
    if (cfg.eval.folds < 2) schema_error("eval.folds", "expected >= 2");
    if (cfg.selection.folds < 2) schema_error("selection.folds", "expected >= 2");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["jobs"] = cfg.jobs;
    auto& gen = j["generator"];
    gen["counts"] = cfg.generator.counts;
    gen["duration_min"] = cfg.generator.duration_min;
    gen["duration_max"] = cfg.generator.duration_max;
    gen["ego_speed"] = cfg.generator.ego_speed;
    gen["ego_yaw_rate"] = cfg.generator.ego_yaw_rate;
    gen["fov_half_angle"] = cfg.generator.fov_half_angle;
    gen["range_min"] = cfg.generator.range_min;
    gen["range_max"] = cfg.generator.range_max;
    gen["sensors"] = ordered_json::array();
    for (const auto& s : cfg.generator.sensors)
        gen["sensors"].push_back(
            {{"mount_x", s.mount_x}, {"mount_y", s.mount_y}, {"yaw", s.yaw}});
    gen["augment"] = {{"copies", cfg.generator.augment.copies},
                      {"drop_prob", cfg.generator.augment.drop_prob},
                      {"jitter_range", cfg.generator.augment.jitter_range},
                      {"jitter_azimuth", cfg.generator.augment.jitter_azimuth},
                      {"jitter_doppler", cfg.generator.augment.jitter_doppler},
                      {"jitter_amplitude", cfg.generator.augment.jitter_amplitude}};
    j["clustering"] = {{"eps_xy", cfg.clustering.eps_xy},
                       {"eps_t", cfg.clustering.eps_t},
                       {"eps_v", cfg.clustering.eps_v},
                       {"min_pts", cfg.clustering.min_pts}};
    j["selection"] = {{"folds", cfg.selection.folds},
                      {"tol", cfg.selection.tol},
                      {"passes", cfg.selection.passes},
                      {"top", cfg.selection.top},
                      {"bins", cfg.selection.bins},
                      {"max_rank_samples", cfg.selection.max_rank_samples},
                      {"backend", backend_name(cfg.selection.classifier.backend)},
                      {"hidden_units", cfg.selection.classifier.hidden_units},
                      {"epochs", cfg.selection.classifier.epochs},
                      {"learning_rate", cfg.selection.classifier.learning_rate},
                      {"batch_size", cfg.selection.classifier.batch_size}};
    j["training"] = {{"backend", backend_name(cfg.training.backend)},
                     {"hidden_units", cfg.training.hidden_units},
                     {"epochs", cfg.training.epochs},
                     {"learning_rate", cfg.training.learning_rate},
                     {"batch_size", cfg.training.batch_size},
                     {"grad_clip", cfg.training.grad_clip},
                     {"max_class_ratio", cfg.training.max_class_ratio}};
    j["hidden"] = {{"method", hidden_method_name(cfg.hidden.method)},
                   {"thr", cfg.hidden.thr},
                   {"vote_thr", cfg.hidden.vote_thr},
                   {"grid_step", cfg.grid_step}};
    j["eval"] = {{"folds", cfg.eval.folds},
                 {"compare_baseline", cfg.eval.compare_baseline},
                 {"target_tpr", cfg.eval.target_tpr}};
    return j.dump(2);
}

bool run_stage(const RunConfig& cfg, Stage stage, bool force) {
    const std::uint64_t fp = stage_fingerprint(cfg, stage);
    if (!force) {
        const auto prev = read_stamp(cfg, stage);
        if (prev && *prev == fp) {
            bool all_present = true;
            for (const char* a : stage_artifacts(stage)) {
                if (!fs::exists(art(cfg, a))) all_present = false;
            }
            if (all_present) return false;  // up to date
        }
    }
    switch (stage) {
        case Stage::gen: stage_gen(cfg); break;
        case Stage::cluster: stage_cluster(cfg); break;
        case Stage::extract: stage_extract(cfg); break;
        case Stage::rank: stage_rank(cfg); break;
        case Stage::select: stage_select(cfg); break;
        case Stage::train: stage_train(cfg); break;
        case Stage::sweep: stage_sweep(cfg); break;
        case Stage::eval: stage_eval(cfg); break;
        case Stage::report: stage_report(cfg); break;
    }
    write_stamp(cfg, stage, fp);
    return true;
}

void run_all(const RunConfig& cfg, bool force) {
    for (int i = 0; i < kNumStages; ++i) run_stage(cfg, static_cast<Stage>(i), force);
}

}  // namespace rrc
