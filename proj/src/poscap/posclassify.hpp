#ifndef POSCAP_POSCLASSIFY_HPP
#define POSCAP_POSCLASSIFY_HPP

#include <span>
#include <string>
#include <vector>

#include "poscap/common.hpp"
#include "poscap/corpus.hpp"
#include "poscap/posquant.hpp"

namespace poscap {

// Multinomial logistic model from image features to the K quantized POS
// sequences: posterior(x) = softmax(W'x + b).
struct PosClassifier {
    int dim = 0;
    int num_classes = 0;
    std::vector<double> weights; // dim * num_classes, row-major by feature
    std::vector<double> bias;    // num_classes
    uint64_t medoid_hash = 0;

    std::vector<double> logits(std::span<const double> x) const;
    std::vector<double> posterior(std::span<const double> x) const;

    std::string to_json() const;
    static PosClassifier from_json(const std::string& text);
    void save(const std::string& path) const;
    static PosClassifier load(const std::string& path);
};

struct ClassifierTrainConfig {
    double lr = 0.1;
    int epochs = 200;
    uint64_t seed = 1;
    int max_len = 20;
};

struct ClassifierExamples {
    std::vector<std::vector<double>> x;
    std::vector<int> labels;
};

// One example per caption; the label is the medoid index of the caption's
// quantized tag sequence.
ClassifierExamples make_classifier_examples(const Corpus& corpus, const FeatureTable& features,
                                            const MedoidSet& medoids, int max_len);

// Mean negative log-likelihood and its gradient (same layout as the
// classifier parameters: weights then bias).
double classifier_nll(const PosClassifier& c, const ClassifierExamples& ex);
void classifier_nll_gradient(const PosClassifier& c, const ClassifierExamples& ex,
                             std::span<double> grad_weights, std::span<double> grad_bias);

// Full-batch gradient descent from zero-initialized parameters.
PosClassifier train_classifier(const Corpus& corpus, const FeatureTable& features,
                               const MedoidSet& medoids, const ClassifierTrainConfig& config,
                               std::vector<double>* nll_history = nullptr);

double classifier_accuracy(const PosClassifier& c, const ClassifierExamples& ex);

// The k highest-posterior medoid indices, ties by lowest index.
std::vector<int> topk_conditions(const PosClassifier& c, std::span<const double> features,
                                 int k);

struct GumbelSample {
    std::vector<double> relaxed; // on the simplex
    int hard_index = 0;          // argmax of relaxed
};

GumbelSample gumbel_softmax_sample(std::span<const double> logits, double temperature,
                                   Rng& rng);
// Deterministic variant used by tests: caller supplies the Gumbel noise.
GumbelSample gumbel_softmax_with_noise(std::span<const double> logits, double temperature,
                                       std::span<const double> noise);

// Among sampled medoid indices, the one closest (hamming) to the reference
// tag sequence; ties by earliest occurrence in the sample list.
int select_best_aligned(std::span<const int> samples, const TagSequence& reference,
                        const MedoidSet& medoids);

// k distinct medoid indices sampled without replacement proportional to the
// posterior (Gumbel top-k).
std::vector<int> sample_conditions(const PosClassifier& c, std::span<const double> features,
                                   int k, Rng& rng);

} // namespace poscap

#endif
