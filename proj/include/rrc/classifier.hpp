#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace rrc {

enum class Backend { logistic, recurrent };

struct ClassifierConfig {
    Backend backend = Backend::logistic;
    int hidden_units = 80;   // recurrent backend only
    int epochs = 30;
    double learning_rate = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int input_dim = 0;     // set by train() from the data
    int num_classes = 2;
    double grad_clip = 5.0;
    // classes larger than max_class_ratio x smallest class are subsampled
    // per epoch; 0 disables
    double max_class_ratio = 3.0;
};

// One training/inference unit: a sequence of feature vectors (each of the
// classifier's input dimension) plus a class label in [0, num_classes).
struct TrainSequence {
    std::vector<std::vector<double>> steps;
    int label = 0;
};

// Immutable trained model producing calibrated posteriors. Inference is a
// pure function; instances are safe to share across threads.
class TrainedClassifier {
public:
    // Posterior over classes; entries in [0,1], sum 1 within 1e-9.
    std::vector<double> predict(const std::vector<std::vector<double>>& steps) const;

    const ClassifierConfig& config() const { return cfg_; }
    const std::vector<double>& loss_curve() const { return loss_curve_; }
    const std::vector<double>& feature_means() const { return mean_; }
    const std::vector<double>& feature_stds() const { return std_; }

    // Flattened parameter access; used by training and the finite-difference
    // gradient checks.
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Mean cross-entropy over `data` (already standardized inputs expected
    // when `standardized` is true) and its analytic gradient.
    double loss(const std::vector<TrainSequence>& data, bool standardized = false) const;
    std::vector<double> gradient(const std::vector<TrainSequence>& data,
                                 bool standardized = false) const;

    void save(std::ostream& os) const;
    static TrainedClassifier load(std::istream& is);

    // Uninitialized-model constructor for training/loading internals.
    static TrainedClassifier make(const ClassifierConfig& cfg);

private:
    TrainedClassifier() = default;

    std::vector<std::vector<double>> standardize(
        const std::vector<std::vector<double>>& steps) const;
    std::vector<double> forward(const std::vector<std::vector<double>>& steps) const;

    ClassifierConfig cfg_;
    std::vector<double> params_;
    std::vector<double> mean_, std_;
    std::vector<double> loss_curve_;

    friend TrainedClassifier train(const std::vector<TrainSequence>& data,
                                   const ClassifierConfig& cfg);
};

// Mini-batch gradient descent with seeded initialization and per-epoch
// seeded shuffling; deterministic for a fixed (data, config) pair.
// Throws on single-class input or non-finite loss.
TrainedClassifier train(const std::vector<TrainSequence>& data,
                        const ClassifierConfig& cfg);

}  // namespace rrc
