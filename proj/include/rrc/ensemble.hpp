#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rrc/classifier.hpp"
#include "rrc/features.hpp"
#include "rrc/selection.hpp"

namespace rrc {

constexpr int kHiddenClassId = kNumTrainedClasses;

// All member posteriors for one input: p_ij for every ordered pair (with
// p_ji = 1 - p_ij from the single trained classifier per unordered pair)
// and the OVA posteriors p_i.
struct PosteriorBundle {
    int k = kNumTrainedClasses;
    std::vector<double> pairwise;  // k*k, entry [i*k+j] = p_ij, diagonal unused
    std::vector<double> ova;       // k

    double pij(int i, int j) const { return pairwise[i * k + j]; }
    void set_pij(int i, int j, double v) {
        pairwise[i * k + j] = v;
        pairwise[j * k + i] = 1.0 - v;
    }
    static PosteriorBundle zero(int k);
};

// s_i = sum_{j != i} p_ij * (p_i + p_j); the OVA terms act as correction
// weights limiting the influence of pairs not trained on the true class.
std::vector<double> score_classes(const PosteriorBundle& b);

// argmax with ties to the lower class id
int argmax_class(const std::vector<double>& scores);

// hidden iff max_i p_i < thr
bool detect_hidden_ova(const PosteriorBundle& b, double thr);

// votes_i = 1[p_i > 0.5] + sum_{j != i} 1[p_ij > 0.5]; hidden iff every
// class stays below `thr` votes (max possible votes per class is K)
bool detect_hidden_voting(const PosteriorBundle& b, int thr);

// hidden iff all normalized class scores s_i / sum(s) < thr; a zero score
// sum counts as hidden
bool detect_hidden_ovoova(const PosteriorBundle& b, double thr);

enum class HiddenMethod { none, ova_threshold, voting, ovoova_threshold };
const char* hidden_method_name(HiddenMethod m);
HiddenMethod hidden_method_from_name(const std::string& name);

struct HiddenConfig {
    HiddenMethod method = HiddenMethod::none;
    double thr = 0.55;
    int vote_thr = 6;
};

// K(K+1)/2 trained binary classifiers, each with its own feature mask, plus
// the hidden-class detector configuration. Immutable after training.
class EnsembleModel {
public:
    struct Member {
        BinaryTask task;
        FeatureMask mask;
        TrainedClassifier model = TrainedClassifier::make(ClassifierConfig{});
    };

    int num_classes() const { return k_; }
    const HiddenConfig& hidden() const { return hidden_; }
    void set_hidden(const HiddenConfig& h) { hidden_ = h; }
    const std::map<std::string, Member>& members() const { return members_; }

    PosteriorBundle posteriors(const SequenceSample& seq) const;

    // Hidden check first (when configured), otherwise the Eq.-1 argmax;
    // returns kHiddenClassId for hidden.
    int classify(const SequenceSample& seq) const;

    void save(std::ostream& os) const;
    static EnsembleModel load(std::istream& is);

    friend EnsembleModel train_ensemble(const std::vector<SequenceSample>&,
                                        const std::map<std::string, FeatureMask>&,
                                        const ClassifierConfig&, std::uint64_t, int);

private:
    int k_ = kNumTrainedClasses;
    std::map<std::string, Member> members_;
    HiddenConfig hidden_;
};

// Trains all 21 members on the given sequences (hidden-class samples are
// rejected). Tasks without an entry in `masks` fall back to all features.
EnsembleModel train_ensemble(const std::vector<SequenceSample>& sequences,
                             const std::map<std::string, FeatureMask>& masks,
                             const ClassifierConfig& base_cfg, std::uint64_t seed,
                             int jobs = 1);

struct SweepPoint {
    HiddenMethod method = HiddenMethod::ova_threshold;
    double thr = 0.0;
    double tpr_hidden = 0.0;
    double micro_f1 = 0.0;
};

// Threshold sweep over all three detector methods on a tuning set made of
// regular samples plus the instance-disjoint hidden tuning half.
// Continuous grids run 0.00..1.00 at `grid_step`; voting runs 1..K.
std::vector<SweepPoint> sweep_thresholds(const EnsembleModel& model,
                                         const std::vector<SequenceSample>& tuning_regular,
                                         const std::vector<SequenceSample>& tuning_hidden,
                                         double grid_step = 0.01);

void write_sweep(std::ostream& os, const std::vector<SweepPoint>& series);

}  // namespace rrc
