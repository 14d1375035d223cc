#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rrc/ensemble.hpp"
#include "rrc/rng.hpp"

using namespace rrc;

namespace {

PosteriorBundle random_bundle(Rng& rng, int k = kNumTrainedClasses) {
    auto b = PosteriorBundle::zero(k);
    for (int i = 0; i < k; ++i) {
        b.ova[i] = rng.uniform();
        for (int j = i + 1; j < k; ++j) b.set_pij(i, j, rng.uniform());
    }
    return b;
}

}  // namespace

TEST_CASE("aggregation matches the literal double-loop formula") {
    Rng rng(601);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto b = random_bundle(rng);
        const auto got = score_classes(b);
        const auto want = oracle::agg_scores(b.k, b.pairwise, b.ova);
        for (int i = 0; i < b.k; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
        // exhaustive argmax with ties to the lower id
        int best = 0;
        for (int i = 1; i < b.k; ++i)
            if (want[i] > want[best]) best = i;
        CHECK(argmax_class(got) == best);
    }
}

TEST_CASE("pairwise symmetry is enforced by construction") {
    Rng rng(602);
    const auto b = random_bundle(rng);
    for (int i = 0; i < b.k; ++i)
        for (int j = 0; j < b.k; ++j)
            if (i != j) CHECK(b.pij(i, j) + b.pij(j, i) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two-class decision boundary sits exactly at one half") {
    auto b = PosteriorBundle::zero(2);
    b.ova = {0.6, 0.6};  // symmetric correction weights
    b.set_pij(0, 1, 0.5);
    auto s = score_classes(b);
    CHECK(s[0] == s[1]);
    CHECK(argmax_class(s) == 0);  // exact tie -> lower id

    b.set_pij(0, 1, 0.5 + 1e-9);
    CHECK(argmax_class(score_classes(b)) == 0);
    b.set_pij(0, 1, 0.5 - 1e-9);
    CHECK(argmax_class(score_classes(b)) == 1);
}

TEST_CASE("hidden detectors match the scalar oracles") {
    Rng rng(603);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto b = random_bundle(rng);
        const double thr = rng.uniform();
        CHECK(detect_hidden_ova(b, thr) == oracle::hidden_ova(b.ova, thr));
        const int vt = 1 + static_cast<int>(rng.uniform_index(b.k));
        CHECK(detect_hidden_voting(b, vt) ==
              oracle::hidden_vote(b.k, b.pairwise, b.ova, vt));
        CHECK(detect_hidden_ovoova(b, thr) ==
              oracle::hidden_ovoova(b.k, b.pairwise, b.ova, thr));
    }
}

TEST_CASE("ova flagging is monotone in the threshold") {
    Rng rng(604);
    std::vector<PosteriorBundle> bundles;
    for (int i = 0; i < 200; ++i) bundles.push_back(random_bundle(rng));
    int prev = -1;
    for (int g = 0; g <= 100; ++g) {
        const double thr = g / 100.0;
        int flagged = 0;
        for (const auto& b : bundles) flagged += detect_hidden_ova(b, thr) ? 1 : 0;
        CHECK(flagged >= prev);
        prev = flagged;
    }
}

TEST_CASE("normalized aggregate scores sum to one") {
    Rng rng(605);
    for (int trial = 0; trial < 500; ++trial) {
        const auto b = random_bundle(rng);
        const auto s = score_classes(b);
        double c = 0;
        for (double v : s) c += v;
        REQUIRE(c > 0);
        double norm = 0;
        for (double v : s) norm += v / c;
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("zero score mass counts as hidden") {
    auto b = PosteriorBundle::zero(3);  // all posteriors zero
    CHECK(detect_hidden_ovoova(b, 0.1));
}

namespace {

// small synthetic sequence set covering every trainable class
std::vector<SequenceSample> toy_sequences(int instances_per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SequenceSample> out;
    std::int64_t inst = 0;
    for (int c = 0; c < kNumTrainedClasses; ++c) {
        for (int i = 0; i < instances_per_class; ++i, ++inst) {
            std::vector<FeatureVector> w(3);
            for (int t = 0; t < 3; ++t) {
                w[t].instance_id = inst;
                w[t].window_start = t * 0.15;
                w[t].label = static_cast<Label>(c);
                for (int f = 0; f < kNumFeatures; ++f) w[t].values[f] = rng.gaussian();
                // class signature on four feature slots
                w[t].values[c] += 4.0;
                w[t].values[50 + c] -= 4.0;
            }
            auto s = build_sequences(w);
            out.insert(out.end(), s.begin(), s.end());
        }
    }
    return out;
}

EnsembleModel toy_model(std::uint64_t seed = 11) {
    ClassifierConfig cfg;
    cfg.epochs = 12;
    return train_ensemble(toy_sequences(6, seed), {}, cfg, seed);
}

}  // namespace

TEST_CASE("ensemble training, aggregation, and serialization") {
    const auto model = toy_model();
    CHECK(model.members().size() == 21);

    const auto test = toy_sequences(2, 99);
    int correct = 0;
    for (const auto& s : test) {
        const auto b = model.posteriors(s);
        for (int i = 0; i < b.k; ++i)
            for (int j = i + 1; j < b.k; ++j)
                CHECK(b.pij(i, j) + b.pij(j, i) == doctest::Approx(1.0).epsilon(1e-12));
        if (model.classify(s) == static_cast<int>(s.label)) ++correct;
    }
    CHECK(correct > static_cast<int>(test.size() * 3) / 4);

    std::stringstream ss;
    model.save(ss);
    const auto back = EnsembleModel::load(ss);
    CHECK(back.members().size() == 21);
    for (const auto& s : test) {
        const auto a = model.posteriors(s);
        const auto b = back.posteriors(s);
        CHECK(a.ova == b.ova);
        CHECK(a.pairwise == b.pairwise);
        CHECK(model.classify(s) == back.classify(s));
    }
}

TEST_CASE("parallel ensemble training matches serial") {
    ClassifierConfig cfg;
    cfg.epochs = 6;
    const auto data = toy_sequences(4, 21);
    const auto serial = train_ensemble(data, {}, cfg, 3, 1);
    const auto parallel = train_ensemble(data, {}, cfg, 3, 4);
    for (const auto& [id, m] : serial.members()) {
        const auto it = parallel.members().find(id);
        REQUIRE(it != parallel.members().end());
        CHECK(it->second.model.params() == m.model.params());
    }
}

TEST_CASE("hidden-class samples are rejected from ensemble training") {
    auto data = toy_sequences(4, 31);
    data.front().label = Label::other;
    ClassifierConfig cfg;
    CHECK_THROWS(train_ensemble(data, {}, cfg, 1));
}

TEST_CASE("hidden detection integrates with classify") {
    auto model = toy_model(13);
    HiddenConfig hc;
    hc.method = HiddenMethod::ova_threshold;
    hc.thr = 1.0 - 1e-12;  // flag everything: no posterior reaches 1 exactly
    model.set_hidden(hc);
    const auto test = toy_sequences(1, 55);
    for (const auto& s : test) CHECK(model.classify(s) == kHiddenClassId);
    hc.thr = 0.0;  // flag nothing
    model.set_hidden(hc);
    for (const auto& s : test) CHECK(model.classify(s) != kHiddenClassId);
}

TEST_CASE("threshold sweep covers all methods with sane metrics") {
    const auto model = toy_model(17);
    const auto regular = toy_sequences(2, 77);
    // "hidden" inputs: noise far from every trained signature
    Rng rng(606);
    std::vector<SequenceSample> hidden;
    for (int i = 0; i < 6; ++i) {
        SequenceSample s;
        s.instance_id = 1000 + i;
        s.label = Label::other;
        FeatureVector fv;
        for (int f = 0; f < kNumFeatures; ++f) fv.values[f] = rng.gaussian(0, 8);
        s.feature_vectors.push_back(fv);
        hidden.push_back(std::move(s));
    }
    const auto series = sweep_thresholds(model, regular, hidden, 0.05);
    int ova_points = 0, vote_points = 0, ovoova_points = 0;
    double prev_tpr = -1;
    for (const auto& p : series) {
        CHECK(p.tpr_hidden >= 0);
        CHECK(p.tpr_hidden <= 1);
        CHECK(p.micro_f1 >= 0);
        CHECK(p.micro_f1 <= 1);
        if (p.method == HiddenMethod::ova_threshold) {
            ++ova_points;
            CHECK(p.tpr_hidden >= prev_tpr);  // monotone grid
            prev_tpr = p.tpr_hidden;
        } else if (p.method == HiddenMethod::voting) {
            ++vote_points;
        } else {
            ++ovoova_points;
        }
    }
    CHECK(ova_points == 21);
    CHECK(vote_points == model.num_classes());
    CHECK(ovoova_points == 21);
    CHECK_THROWS(sweep_thresholds(model, regular, {}, 0.05));

    std::stringstream ss;
    write_sweep(ss, series);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "method,thr,tpr_hidden,micro_f1");
}
