#include "poscap/posclassify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace poscap {

namespace {

std::vector<double> softmax(std::span<const double> logits) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logits) m = std::max(m, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

} // namespace

std::vector<double> PosClassifier::logits(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw std::invalid_argument("feature dimension mismatch: expected " +
                                    std::to_string(dim) + ", got " + std::to_string(x.size()));
    std::vector<double> out(bias.begin(), bias.end());
    for (int d = 0; d < dim; ++d) {
        double xv = x[static_cast<size_t>(d)];
        const double* w = &weights[static_cast<size_t>(d) * static_cast<size_t>(num_classes)];
        for (int k = 0; k < num_classes; ++k) out[static_cast<size_t>(k)] += xv * w[k];
    }
    return out;
}

std::vector<double> PosClassifier::posterior(std::span<const double> x) const {
    return softmax(logits(x));
}

ClassifierExamples make_classifier_examples(const Corpus& corpus, const FeatureTable& features,
                                            const MedoidSet& medoids, int max_len) {
    ClassifierExamples ex;
    for (const auto& item : corpus.train.items) {
        std::span<const double> feat = features.at(item.image_id);
        ex.x.emplace_back(feat.begin(), feat.end());
        TagSequence t = TagSequence::from_tags(item.tags, max_len);
        int label = quantize(t, medoids).index;
        if (label < 0 || label >= medoids.k())
            throw std::invalid_argument("class label out of range");
        ex.labels.push_back(label);
    }
    return ex;
}

double classifier_nll(const PosClassifier& c, const ClassifierExamples& ex) {
    if (ex.x.empty()) throw std::invalid_argument("no examples");
    double total = 0.0;
    for (size_t i = 0; i < ex.x.size(); ++i) {
        std::vector<double> lg = c.logits(ex.x[i]);
        double m = *std::max_element(lg.begin(), lg.end());
        double z = 0.0;
        for (double v : lg) z += std::exp(v - m);
        total -= lg[static_cast<size_t>(ex.labels[i])] - m - std::log(z);
    }
    return total / static_cast<double>(ex.x.size());
}

void classifier_nll_gradient(const PosClassifier& c, const ClassifierExamples& ex,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
    if (grad_weights.size() != c.weights.size() || grad_bias.size() != c.bias.size())
        throw std::invalid_argument("gradient buffer size mismatch");
    std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
    for (size_t i = 0; i < ex.x.size(); ++i) {
        std::vector<double> p = c.posterior(ex.x[i]);
        p[static_cast<size_t>(ex.labels[i])] -= 1.0;
        for (int d = 0; d < c.dim; ++d) {
            double xv = ex.x[i][static_cast<size_t>(d)];
            double* g =
                &grad_weights[static_cast<size_t>(d) * static_cast<size_t>(c.num_classes)];
            for (int k = 0; k < c.num_classes; ++k) g[k] += xv * p[static_cast<size_t>(k)];
        }
        for (int k = 0; k < c.num_classes; ++k) grad_bias[static_cast<size_t>(k)] +=
            p[static_cast<size_t>(k)];
    }
    double inv = 1.0 / static_cast<double>(ex.x.size());
    for (double& g : grad_weights) g *= inv;
    for (double& g : grad_bias) g *= inv;
}

PosClassifier train_classifier(const Corpus& corpus, const FeatureTable& features,
                               const MedoidSet& medoids, const ClassifierTrainConfig& config,
                               std::vector<double>* nll_history) {
    if (config.lr <= 0.0) throw std::invalid_argument("lr must be > 0");
    if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (corpus.train.items.empty()) throw DataError("empty train split");

    ClassifierExamples ex = make_classifier_examples(corpus, features, medoids, config.max_len);

    PosClassifier c;
    c.dim = static_cast<int>(features.dim());
    c.num_classes = medoids.k();
    c.weights.assign(static_cast<size_t>(c.dim) * static_cast<size_t>(c.num_classes), 0.0);
    c.bias.assign(static_cast<size_t>(c.num_classes), 0.0);
    c.medoid_hash = medoids.hash();

    if (nll_history) {
        nll_history->clear();
        nll_history->push_back(classifier_nll(c, ex));
    }
    std::vector<double> gw(c.weights.size());
    std::vector<double> gb(c.bias.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        classifier_nll_gradient(c, ex, gw, gb);
        for (size_t i = 0; i < c.weights.size(); ++i) c.weights[i] -= config.lr * gw[i];
        for (size_t i = 0; i < c.bias.size(); ++i) c.bias[i] -= config.lr * gb[i];
        if (nll_history) nll_history->push_back(classifier_nll(c, ex));
    }
    return c;
}

double classifier_accuracy(const PosClassifier& c, const ClassifierExamples& ex) {
    if (ex.x.empty()) throw std::invalid_argument("no examples");
    long correct = 0;
    for (size_t i = 0; i < ex.x.size(); ++i) {
        std::vector<double> p = c.posterior(ex.x[i]);
        int arg = 0;
        for (int k = 1; k < c.num_classes; ++k)
            if (p[static_cast<size_t>(k)] > p[static_cast<size_t>(arg)]) arg = k;
        if (arg == ex.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ex.x.size());
}

std::vector<int> topk_conditions(const PosClassifier& c, std::span<const double> features,
                                 int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (k > c.num_classes)
        throw std::invalid_argument("k exceeds the number of quantized sequences");
    std::vector<double> p = c.posterior(features);
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (p[static_cast<size_t>(a)] != p[static_cast<size_t>(b)])
            return p[static_cast<size_t>(a)] > p[static_cast<size_t>(b)];
        return a < b;
    });
    order.resize(static_cast<size_t>(k));
    return order;
}

GumbelSample gumbel_softmax_with_noise(std::span<const double> logits, double temperature,
                                       std::span<const double> noise) {
    if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
    if (noise.size() != logits.size())
        throw std::invalid_argument("noise size mismatch");
    std::vector<double> perturbed(logits.size());
    for (size_t i = 0; i < logits.size(); ++i)
        perturbed[i] = (logits[i] + noise[i]) / temperature;
    GumbelSample s;
    s.relaxed = softmax(perturbed);
    s.hard_index = 0;
    for (size_t i = 1; i < s.relaxed.size(); ++i)
        if (s.relaxed[i] > s.relaxed[static_cast<size_t>(s.hard_index)])
            s.hard_index = static_cast<int>(i);
    return s;
}

GumbelSample gumbel_softmax_sample(std::span<const double> logits, double temperature,
                                   Rng& rng) {
    std::vector<double> noise(logits.size());
    for (double& g : noise) g = rng.gumbel();
    return gumbel_softmax_with_noise(logits, temperature, noise);
}

int select_best_aligned(std::span<const int> samples, const TagSequence& reference,
                        const MedoidSet& medoids) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    int best = samples[0];
    int best_d = hamming_distance(medoids.medoids[static_cast<size_t>(samples[0])], reference);
    for (size_t i = 1; i < samples.size(); ++i) {
        int idx = samples[i];
        if (idx < 0 || idx >= medoids.k())
            throw std::invalid_argument("sampled medoid index out of range");
        int d = hamming_distance(medoids.medoids[static_cast<size_t>(idx)], reference);
        if (d < best_d) {
            best_d = d;
            best = idx;
        }
    }
    return best;
}

std::vector<int> sample_conditions(const PosClassifier& c, std::span<const double> features,
                                   int k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (k > c.num_classes)
        throw std::invalid_argument("k exceeds the number of quantized sequences");
    std::vector<double> lg = c.logits(features);
    // Gumbel top-k draws k distinct classes proportional to the posterior.
    std::vector<double> keys(lg.size());
    for (size_t i = 0; i < lg.size(); ++i) keys[i] = lg[i] + rng.gumbel();
    std::vector<int> order(lg.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (keys[static_cast<size_t>(a)] != keys[static_cast<size_t>(b)])
            return keys[static_cast<size_t>(a)] > keys[static_cast<size_t>(b)];
        return a < b;
    });
    order.resize(static_cast<size_t>(k));
    return order;
}

std::string PosClassifier::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "poscap-classifier";
    j["version"] = 1;
    j["dim"] = dim;
    j["num_classes"] = num_classes;
    j["weights"] = weights;
    j["bias"] = bias;
    j["medoid_hash"] = std::to_string(medoid_hash);
    return j.dump();
}

PosClassifier PosClassifier::from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        if (j.at("format") != "poscap-classifier" || j.at("version") != 1)
            throw DataError("unsupported classifier format/version");
        PosClassifier c;
        c.dim = j.at("dim").get<int>();
        c.num_classes = j.at("num_classes").get<int>();
        c.weights = j.at("weights").get<std::vector<double>>();
        c.bias = j.at("bias").get<std::vector<double>>();
        c.medoid_hash = std::stoull(j.at("medoid_hash").get<std::string>());
        if (c.dim < 1 || c.num_classes < 1 ||
            c.weights.size() != static_cast<size_t>(c.dim) * static_cast<size_t>(c.num_classes) ||
            c.bias.size() != static_cast<size_t>(c.num_classes))
            throw DataError("inconsistent classifier dimensions");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad classifier blob: ") + e.what());
    }
}

void PosClassifier::save(const std::string& path) const { write_file(path, to_json()); }

PosClassifier PosClassifier::load(const std::string& path) {
    return from_json(read_file(path));
}

} // namespace poscap
