#include "rrc/classifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rrc/rng.hpp"

namespace rrc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::Map;

int param_count(const ClassifierConfig& cfg) {
    const int d = cfg.input_dim, c = cfg.num_classes, h = cfg.hidden_units;
    if (cfg.backend == Backend::logistic) return c * d + c;
    return 4 * h * d + 4 * h * h + 4 * h + c * h + c;
}

VectorXd softmax(const VectorXd& z) {
    const double m = z.maxCoeff();
    VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Parameter views into the flat vector.
struct LogisticView {
    Map<const MatrixXd> w;
    Map<const VectorXd> b;
    LogisticView(const double* p, int c, int d) : w(p, c, d), b(p + c * d, c) {}
};

struct RecurrentView {
    Map<const MatrixXd> wx, wh;
    Map<const VectorXd> b;
    Map<const MatrixXd> wout;
    Map<const VectorXd> bout;
    RecurrentView(const double* p, int d, int h, int c)
        : wx(p, 4 * h, d),
          wh(p + 4 * h * d, 4 * h, h),
          b(p + 4 * h * d + 4 * h * h, 4 * h),
          wout(p + 4 * h * d + 4 * h * h + 4 * h, c, h),
          bout(p + 4 * h * d + 4 * h * h + 4 * h + c * h, c) {}
};

void write_doubles(std::ostream& os, const char* tag, const std::vector<double>& v) {
    os << tag << ' ' << v.size();
    char buf[40];
    for (double x : v) {
        std::snprintf(buf, sizeof(buf), " %a", x);
        os << buf;
    }
    os << '\n';
}

std::vector<double> read_doubles(std::istream& is, const char* tag) {
    std::string name;
    std::size_t n = 0;
    is >> name >> n;
    if (name != tag) throw std::runtime_error("classifier load: expected " + std::string(tag));
    std::vector<double> v(n);
    std::string tok;
    for (std::size_t i = 0; i < n; ++i) {
        is >> tok;
        v[i] = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

}  // namespace

TrainedClassifier TrainedClassifier::make(const ClassifierConfig& cfg) {
    TrainedClassifier m;
    m.cfg_ = cfg;
    m.params_.assign(param_count(cfg), 0.0);
    m.mean_.assign(cfg.input_dim, 0.0);
    m.std_.assign(cfg.input_dim, 1.0);
    return m;
}

std::vector<std::vector<double>> TrainedClassifier::standardize(
    const std::vector<std::vector<double>>& steps) const {
    std::vector<std::vector<double>> out(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
        if (static_cast<int>(steps[t].size()) != cfg_.input_dim)
            throw std::invalid_argument("classifier: input dimension mismatch");
        out[t].resize(cfg_.input_dim);
        for (int k = 0; k < cfg_.input_dim; ++k)
            out[t][k] = (steps[t][k] - mean_[k]) / std_[k];
    }
    return out;
}

std::vector<double> TrainedClassifier::forward(
    const std::vector<std::vector<double>>& steps) const {
    const int d = cfg_.input_dim, c = cfg_.num_classes;
    VectorXd z;
    if (cfg_.backend == Backend::logistic) {
        LogisticView v(params_.data(), c, d);
        VectorXd x = VectorXd::Zero(d);
        for (const auto& s : steps) x += Map<const VectorXd>(s.data(), d);
        x /= static_cast<double>(steps.size());
        z = v.w * x + v.b;
    } else {
        const int h = cfg_.hidden_units;
        RecurrentView v(params_.data(), d, h, c);
        VectorXd hs = VectorXd::Zero(h), cs = VectorXd::Zero(h);
        for (const auto& s : steps) {
            const Map<const VectorXd> x(s.data(), d);
            VectorXd a = v.wx * x + v.wh * hs + v.b;
            for (int k = 0; k < h; ++k) {
                const double gi = sigmoid(a(k));
                const double gf = sigmoid(a(h + k));
                const double gg = std::tanh(a(2 * h + k));
                const double go = sigmoid(a(3 * h + k));
                cs(k) = gf * cs(k) + gi * gg;
                hs(k) = go * std::tanh(cs(k));
            }
        }
        z = v.wout * hs + v.bout;
    }
    VectorXd p = softmax(z);
    return std::vector<double>(p.data(), p.data() + c);
}

std::vector<double> TrainedClassifier::predict(
    const std::vector<std::vector<double>>& steps) const {
    if (steps.empty()) throw std::invalid_argument("predict: empty sequence");
    return forward(standardize(steps));
}

double TrainedClassifier::loss(const std::vector<TrainSequence>& data,
                               bool standardized) const {
    double total = 0.0;
    for (const auto& s : data) {
        const auto p = standardized ? forward(s.steps) : forward(standardize(s.steps));
        total += -std::log(std::max(p[s.label], 1e-300));
    }
    return total / static_cast<double>(data.size());
}

std::vector<double> TrainedClassifier::gradient(const std::vector<TrainSequence>& data,
                                                bool standardized) const {
    const int d = cfg_.input_dim, c = cfg_.num_classes, h = cfg_.hidden_units;
    std::vector<double> grad(params_.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(data.size());

    if (cfg_.backend == Backend::logistic) {
        LogisticView v(params_.data(), c, d);
        Map<MatrixXd> gw(grad.data(), c, d);
        Map<VectorXd> gb(grad.data() + c * d, c);
        for (const auto& s : data) {
            const auto steps = standardized ? s.steps : standardize(s.steps);
            VectorXd x = VectorXd::Zero(d);
            for (const auto& st : steps) x += Map<const VectorXd>(st.data(), d);
            x /= static_cast<double>(steps.size());
            VectorXd p = softmax(v.w * x + v.b);
            p(s.label) -= 1.0;
            gw += inv_n * p * x.transpose();
            gb += inv_n * p;
        }
        return grad;
    }

    RecurrentView v(params_.data(), d, h, c);
    Map<MatrixXd> gwx(grad.data(), 4 * h, d);
    Map<MatrixXd> gwh(grad.data() + 4 * h * d, 4 * h, h);
    Map<VectorXd> gb(grad.data() + 4 * h * d + 4 * h * h, 4 * h);
    Map<MatrixXd> gwout(grad.data() + 4 * h * d + 4 * h * h + 4 * h, c, h);
    Map<VectorXd> gbout(grad.data() + 4 * h * d + 4 * h * h + 4 * h + c * h, c);

    for (const auto& s : data) {
        const auto steps = standardized ? s.steps : standardize(s.steps);
        const int tlen = static_cast<int>(steps.size());
        MatrixXd xs(d, tlen), gi(h, tlen), gf(h, tlen), gg(h, tlen), go(h, tlen);
        MatrixXd cs(h, tlen), tc(h, tlen), hs(h, tlen);
        VectorXd hprev = VectorXd::Zero(h), cprev = VectorXd::Zero(h);
        for (int t = 0; t < tlen; ++t) {
            xs.col(t) = Map<const VectorXd>(steps[t].data(), d);
            VectorXd a = v.wx * xs.col(t) + v.wh * hprev + v.b;
            for (int k = 0; k < h; ++k) {
                gi(k, t) = sigmoid(a(k));
                gf(k, t) = sigmoid(a(h + k));
                gg(k, t) = std::tanh(a(2 * h + k));
                go(k, t) = sigmoid(a(3 * h + k));
                cs(k, t) = gf(k, t) * cprev(k) + gi(k, t) * gg(k, t);
                tc(k, t) = std::tanh(cs(k, t));
                hs(k, t) = go(k, t) * tc(k, t);
            }
            hprev = hs.col(t);
            cprev = cs.col(t);
        }
        VectorXd p = softmax(v.wout * hs.col(tlen - 1) + v.bout);
        p(s.label) -= 1.0;
        gwout += inv_n * p * hs.col(tlen - 1).transpose();
        gbout += inv_n * p;

        VectorXd dh = v.wout.transpose() * p;
        VectorXd dc = VectorXd::Zero(h);
        for (int t = tlen - 1; t >= 0; --t) {
            VectorXd da(4 * h);
            const VectorXd cp =
                t > 0 ? VectorXd(cs.col(t - 1)) : VectorXd(VectorXd::Zero(h));
            for (int k = 0; k < h; ++k) {
                const double dct = dh(k) * go(k, t) * (1.0 - tc(k, t) * tc(k, t)) + dc(k);
                const double d_o = dh(k) * tc(k, t);
                const double d_i = dct * gg(k, t);
                const double d_g = dct * gi(k, t);
                const double d_f = dct * cp(k);
                da(k) = d_i * gi(k, t) * (1.0 - gi(k, t));
                da(h + k) = d_f * gf(k, t) * (1.0 - gf(k, t));
                da(2 * h + k) = d_g * (1.0 - gg(k, t) * gg(k, t));
                da(3 * h + k) = d_o * go(k, t) * (1.0 - go(k, t));
                dc(k) = dct * gf(k, t);
            }
            gwx += inv_n * da * xs.col(t).transpose();
            if (t > 0) gwh += inv_n * da * hs.col(t - 1).transpose();
            gb += inv_n * da;
            dh = v.wh.transpose() * da;
        }
    }
    return grad;
}

TrainedClassifier train(const std::vector<TrainSequence>& data,
                        const ClassifierConfig& cfg_in) {
    if (data.empty()) throw std::invalid_argument("train: empty data");
    ClassifierConfig cfg = cfg_in;
    cfg.input_dim = static_cast<int>(data.front().steps.front().size());

    std::map<int, int> class_counts;
    for (const auto& s : data) {
        if (s.label < 0 || s.label >= cfg.num_classes)
            throw std::invalid_argument("train: label out of range");
        ++class_counts[s.label];
    }
    if (class_counts.size() < 2) throw std::invalid_argument("train: single-class input");

    TrainedClassifier model = TrainedClassifier::make(cfg);

    // standardization moments from the training split
    std::vector<double> mean(cfg.input_dim, 0.0), var(cfg.input_dim, 0.0);
    std::size_t total_steps = 0;
    for (const auto& s : data) {
        for (const auto& st : s.steps) {
            for (int k = 0; k < cfg.input_dim; ++k) mean[k] += st[k];
            ++total_steps;
        }
    }
    for (double& m : mean) m /= static_cast<double>(total_steps);
    for (const auto& s : data) {
        for (const auto& st : s.steps) {
            for (int k = 0; k < cfg.input_dim; ++k) {
                const double dd = st[k] - mean[k];
                var[k] += dd * dd;
            }
        }
    }
    for (int k = 0; k < cfg.input_dim; ++k) {
        const double sd = std::sqrt(var[k] / static_cast<double>(total_steps));
        model.mean_[k] = mean[k];
        model.std_[k] = sd > 1e-12 ? sd : 1.0;
    }

    // pre-standardized copy of the data
    std::vector<TrainSequence> std_data(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        std_data[i].label = data[i].label;
        std_data[i].steps = model.standardize(data[i].steps);
    }

    Rng rng(Rng::mix(cfg.seed, 0x7261696eULL));
    const int h = cfg.hidden_units, c = cfg.num_classes, d = cfg.input_dim;
    if (cfg.backend == Backend::logistic) {
        for (double& p : model.params_) p = rng.gaussian(0.0, 0.01);
    } else {
        for (double& p : model.params_) p = rng.gaussian(0.0, 0.1);
        // forget gate bias starts open
        double* b = model.params_.data() + 4 * h * d + 4 * h * h;
        for (int k = 0; k < h; ++k) b[h + k] = 1.0;
        for (int k = 0; k < h; ++k) b[k] = 0.0;
        for (int k = 0; k < 2 * h; ++k) b[2 * h + k] = 0.0;
        double* bout = model.params_.data() + 4 * h * d + 4 * h * h + 4 * h + c * h;
        for (int k = 0; k < c; ++k) bout[k] = 0.0;
    }

    const int min_count =
        std::min_element(class_counts.begin(), class_counts.end(),
                         [](auto& a, auto& b) { return a.second < b.second; })
            ->second;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> idx;
        if (cfg.max_class_ratio > 0.0) {
            // subsample oversized classes for this epoch
            const int cap = static_cast<int>(cfg.max_class_ratio * min_count);
            std::map<int, std::vector<int>> per_class;
            for (std::size_t i = 0; i < std_data.size(); ++i)
                per_class[std_data[i].label].push_back(static_cast<int>(i));
            for (auto& [label, members] : per_class) {
                if (static_cast<int>(members.size()) > cap) {
                    rng.shuffle(members);
                    members.resize(cap);
                }
                idx.insert(idx.end(), members.begin(), members.end());
            }
        } else {
            idx.resize(std_data.size());
            for (std::size_t i = 0; i < std_data.size(); ++i) idx[i] = static_cast<int>(i);
        }
        rng.shuffle(idx);

        double epoch_loss = 0.0;
        int num_batches = 0;
        for (std::size_t start = 0; start < idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::vector<TrainSequence> batch;
            for (std::size_t i = start;
                 i < std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
                 ++i) {
                batch.push_back(std_data[idx[i]]);
            }
            epoch_loss += model.loss(batch, true);
            ++num_batches;
            std::vector<double> grad = model.gradient(batch, true);
            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            const double norm = std::sqrt(norm2);
            const double scale =
                (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;
            for (std::size_t k = 0; k < grad.size(); ++k)
                model.params_[k] -= cfg.learning_rate * scale * grad[k];
        }
        epoch_loss /= std::max(1, num_batches);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: non-finite loss at epoch " +
                                     std::to_string(epoch));
        model.loss_curve_.push_back(epoch_loss);
    }
    return model;
}

void TrainedClassifier::save(std::ostream& os) const {
    os << "rrc-classifier-1\n";
    os << "backend " << (cfg_.backend == Backend::logistic ? "logistic" : "recurrent")
       << '\n';
    os << "hidden " << cfg_.hidden_units << '\n';
    os << "epochs " << cfg_.epochs << '\n';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", cfg_.learning_rate);
    os << "lr " << buf << '\n';
    os << "batch " << cfg_.batch_size << '\n';
    os << "seed " << cfg_.seed << '\n';
    os << "input_dim " << cfg_.input_dim << '\n';
    os << "classes " << cfg_.num_classes << '\n';
    std::snprintf(buf, sizeof(buf), "%a", cfg_.grad_clip);
    os << "grad_clip " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%a", cfg_.max_class_ratio);
    os << "ratio " << buf << '\n';
    write_doubles(os, "mean", mean_);
    write_doubles(os, "std", std_);
    write_doubles(os, "params", params_);
    write_doubles(os, "loss_curve", loss_curve_);
}

TrainedClassifier TrainedClassifier::load(std::istream& is) {
    std::string magic;
    is >> magic;
    if (magic != "rrc-classifier-1")
        throw std::runtime_error("classifier load: bad magic '" + magic + "'");
    ClassifierConfig cfg;
    std::string key, val;
    auto expect = [&](const char* name) -> std::string {
        is >> key >> val;
        if (key != name)
            throw std::runtime_error("classifier load: expected " + std::string(name));
        return val;
    };
    cfg.backend = expect("backend") == "logistic" ? Backend::logistic : Backend::recurrent;
    cfg.hidden_units = std::stoi(expect("hidden"));
    cfg.epochs = std::stoi(expect("epochs"));
    cfg.learning_rate = std::strtod(expect("lr").c_str(), nullptr);
    cfg.batch_size = std::stoi(expect("batch"));
    cfg.seed = std::stoull(expect("seed"));
    cfg.input_dim = std::stoi(expect("input_dim"));
    cfg.num_classes = std::stoi(expect("classes"));
    cfg.grad_clip = std::strtod(expect("grad_clip").c_str(), nullptr);
    cfg.max_class_ratio = std::strtod(expect("ratio").c_str(), nullptr);

    TrainedClassifier m = make(cfg);
    m.mean_ = read_doubles(is, "mean");
    m.std_ = read_doubles(is, "std");
    m.params_ = read_doubles(is, "params");
    m.loss_curve_ = read_doubles(is, "loss_curve");
    if (static_cast<int>(m.params_.size()) != param_count(cfg))
        throw std::runtime_error("classifier load: parameter count mismatch");
    return m;
}

}  // namespace rrc
