#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "poscap/posclassify.hpp"
#include "poscap/synth.hpp"

using namespace poscap;

namespace {

// Two linearly separable classes in 2-d feature space.
struct SeparableFixture {
    Corpus corpus;
    FeatureTable features;
    MedoidSet medoids;
};

SeparableFixture separable_fixture() {
    SeparableFixture fx;
    std::string corpus_text;
    std::string feat_text;
    // class 0: DET NOUN captions at x ~ (1, 0); class 1: PRON VERB ADV at (0, 1)
    for (int i = 0; i < 8; ++i) {
        std::string id = "img" + std::to_string(i);
        bool cls1 = i % 2 == 1;
        corpus_text += id + "\ttrain\t" +
                       (cls1 ? std::string("he_PRON runs_VERB fast_ADV")
                             : std::string("a_DET dog_NOUN")) +
                       "\n";
        double jitter = 0.01 * i;
        feat_text += id + "\t" + (cls1 ? "0 " + std::to_string(1.0 + jitter)
                                       : std::to_string(1.0 + jitter) + " 0") +
                     "\n";
    }
    fx.corpus = parse_corpus(corpus_text, 1);
    fx.features = parse_features(feat_text);
    auto seqs = collect_tag_sequences(fx.corpus.train, 8);
    fx.medoids = kmedoids(seqs, 2, 1, 20);
    return fx;
}

double finite_difference(PosClassifier& c, const ClassifierExamples& ex, double* param,
                         double step) {
    double saved = *param;
    *param = saved + step;
    double up = classifier_nll(c, ex);
    *param = saved - step;
    double down = classifier_nll(c, ex);
    *param = saved;
    return (up - down) / (2.0 * step);
}

} // namespace

TEST_CASE("posterior with zero weights is uniform") {
    PosClassifier c;
    c.dim = 3;
    c.num_classes = 5;
    c.weights.assign(15, 0.0);
    c.bias.assign(5, 0.0);
    std::vector<double> x{0.3, -1.2, 0.5};
    auto p = c.posterior(x);
    for (double v : p) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("posterior matches the closed-form softmax") {
    PosClassifier c;
    c.dim = 1;
    c.num_classes = 2;
    c.weights = {0.0, std::log(3.0)};
    c.bias = {0.0, 0.0};
    std::vector<double> x{1.0};
    auto p = c.posterior(x); // logits (0, ln 3)
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("posterior evaluates the formula directly") {
    Rng rng(21);
    PosClassifier c;
    c.dim = 4;
    c.num_classes = 3;
    c.weights.resize(12);
    c.bias.resize(3);
    for (auto& w : c.weights) w = rng.normal();
    for (auto& b : c.bias) b = rng.normal();
    std::vector<double> x{0.5, -0.2, 1.5, 0.3};
    auto p = c.posterior(x);
    double z = 0.0;
    std::vector<double> direct(3);
    for (int k = 0; k < 3; ++k) {
        double logit = c.bias[static_cast<size_t>(k)];
        for (int d = 0; d < 4; ++d)
            logit += x[static_cast<size_t>(d)] * c.weights[static_cast<size_t>(d * 3 + k)];
        direct[static_cast<size_t>(k)] = std::exp(logit);
        z += direct[static_cast<size_t>(k)];
    }
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        CHECK(p[static_cast<size_t>(k)] ==
              doctest::Approx(direct[static_cast<size_t>(k)] / z).epsilon(1e-12));
        sum += p[static_cast<size_t>(k)];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(c.posterior(wrong), std::invalid_argument);
}

TEST_CASE("initial NLL equals log K and training is monotone on the fixture") {
    SeparableFixture fx = separable_fixture();
    std::vector<double> history;
    PosClassifier c =
        train_classifier(fx.corpus, fx.features, fx.medoids, {0.01, 50, 1, 8}, &history);
    REQUIRE(history.size() == 51);
    CHECK(history.front() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
    CHECK(history.back() <= history.front());
}

TEST_CASE("separable fixture trains to accuracy 1") {
    SeparableFixture fx = separable_fixture();
    PosClassifier c = train_classifier(fx.corpus, fx.features, fx.medoids, {0.5, 400, 1, 8});
    ClassifierExamples ex = make_classifier_examples(fx.corpus, fx.features, fx.medoids, 8);
    CHECK(classifier_accuracy(c, ex) == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches central finite differences") {
    SeparableFixture fx = separable_fixture();
    ClassifierExamples ex = make_classifier_examples(fx.corpus, fx.features, fx.medoids, 8);
    Rng rng(37);
    for (int point = 0; point < 10; ++point) {
        PosClassifier c;
        c.dim = static_cast<int>(fx.features.dim());
        c.num_classes = fx.medoids.k();
        c.weights.resize(static_cast<size_t>(c.dim) * static_cast<size_t>(c.num_classes));
        c.bias.resize(static_cast<size_t>(c.num_classes));
        for (auto& w : c.weights) w = rng.normal();
        for (auto& b : c.bias) b = rng.normal();
        std::vector<double> gw(c.weights.size());
        std::vector<double> gb(c.bias.size());
        classifier_nll_gradient(c, ex, gw, gb);
        for (size_t i = 0; i < gw.size(); ++i) {
            double fd = finite_difference(c, ex, &c.weights[i], 1e-5);
            double denom = std::max({std::abs(fd), std::abs(gw[i]), 1e-8});
            CHECK(std::abs(gw[i] - fd) / denom < 1e-4);
        }
        for (size_t i = 0; i < gb.size(); ++i) {
            double fd = finite_difference(c, ex, &c.bias[i], 1e-5);
            double denom = std::max({std::abs(fd), std::abs(gb[i]), 1e-8});
            CHECK(std::abs(gb[i] - fd) / denom < 1e-4);
        }
    }
}

TEST_CASE("topk_conditions") {
    PosClassifier c;
    c.dim = 1;
    c.num_classes = 4;
    c.weights = {0.0, 0.0, 0.0, 0.0};
    c.bias = {0.0, 0.0, 0.0, 0.0};
    std::vector<double> x{1.0};
    SUBCASE("uniform posterior ties break by index") {
        auto top = topk_conditions(c, x, 3);
        CHECK(top == std::vector<int>{0, 1, 2});
    }
    SUBCASE("ordered by posterior") {
        c.bias = {std::log(0.1), std::log(0.7), std::log(0.2), -40.0};
        auto top = topk_conditions(c, x, 2);
        CHECK(top == std::vector<int>{1, 2});
    }
    SUBCASE("matches a full-sort oracle") {
        Rng rng(4);
        for (auto& b : c.bias) b = rng.normal();
        auto top = topk_conditions(c, x, 4);
        auto p = c.posterior(x);
        std::vector<int> order(4);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b2) {
            return p[static_cast<size_t>(a)] > p[static_cast<size_t>(b2)];
        });
        CHECK(top == order);
    }
    SUBCASE("k > K is an error") {
        CHECK_THROWS_AS(topk_conditions(c, x, 5), std::invalid_argument);
    }
}

TEST_CASE("gumbel softmax") {
    std::vector<double> logits{0.3, -0.4, 1.1, 0.0};
    SUBCASE("zero noise reduces to the softmax") {
        std::vector<double> zeros(4, 0.0);
        GumbelSample s = gumbel_softmax_with_noise(logits, 1.0, zeros);
        double z = 0.0;
        for (double l : logits) z += std::exp(l);
        for (size_t i = 0; i < 4; ++i)
            CHECK(s.relaxed[i] == doctest::Approx(std::exp(logits[i]) / z).epsilon(1e-12));
        CHECK(s.hard_index == 2);
    }
    SUBCASE("relaxed output lies on the simplex") {
        Rng rng(8);
        for (int t = 0; t < 100; ++t) {
            GumbelSample s = gumbel_softmax_sample(logits, 0.7, rng);
            double sum = 0.0;
            for (double v : s.relaxed) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
            CHECK(s.hard_index ==
                  static_cast<int>(std::max_element(s.relaxed.begin(), s.relaxed.end()) -
                                   s.relaxed.begin()));
        }
    }
    SUBCASE("hard index frequencies follow the softmax (gumbel-max)") {
        const int n = 50000;
        std::vector<long> counts(4, 0);
        Rng rng(12345);
        for (int t = 0; t < n; ++t) ++counts[static_cast<size_t>(
            gumbel_softmax_sample(logits, 1.0, rng).hard_index)];
        double z = 0.0;
        for (double l : logits) z += std::exp(l);
        for (size_t i = 0; i < 4; ++i) {
            double expected = std::exp(logits[i]) / z;
            double observed = static_cast<double>(counts[i]) / n;
            CHECK(std::abs(observed - expected) < 0.02);
        }
    }
    SUBCASE("reproducible for a fixed seed") {
        Rng a(9);
        Rng b(9);
        GumbelSample sa = gumbel_softmax_sample(logits, 0.5, a);
        GumbelSample sb = gumbel_softmax_sample(logits, 0.5, b);
        CHECK(sa.relaxed == sb.relaxed);
        CHECK(sa.hard_index == sb.hard_index);
    }
    SUBCASE("entropy decreases with temperature") {
        auto mean_entropy = [&](double tau) {
            Rng rng(77);
            double total = 0.0;
            for (int t = 0; t < 1000; ++t) {
                GumbelSample s = gumbel_softmax_sample(logits, tau, rng);
                for (double p : s.relaxed)
                    if (p > 0.0) total -= p * std::log(p);
            }
            return total / 1000.0;
        };
        double prev = mean_entropy(1.0);
        for (double tau : {0.7, 0.4, 0.1}) {
            double h = mean_entropy(tau);
            CHECK(h < prev);
            prev = h;
        }
    }
    SUBCASE("non-positive temperature is an error") {
        Rng rng(1);
        CHECK_THROWS_AS(gumbel_softmax_sample(logits, 0.0, rng), std::invalid_argument);
        CHECK_THROWS_AS(gumbel_softmax_sample(logits, -1.0, rng), std::invalid_argument);
    }
}

TEST_CASE("select_best_aligned") {
    MedoidSet m;
    m.max_len = 4;
    m.medoids = {TagSequence::from_tags(std::vector<int>{8, 2}, 4),
                 TagSequence::from_tags(std::vector<int>{8, 2, 1}, 4),
                 TagSequence::from_tags(std::vector<int>{3, 1}, 4),
                 TagSequence::from_tags(std::vector<int>{3, 1, 5, 5}, 4)};
    TagSequence ref = TagSequence::from_tags(std::vector<int>{8, 2, 1}, 4);
    SUBCASE("exact quantization wins") {
        std::vector<int> samples{0, 2, 1, 3};
        CHECK(select_best_aligned(samples, ref, m) == 1);
    }
    SUBCASE("single sample returned unconditionally") {
        std::vector<int> samples{3};
        CHECK(select_best_aligned(samples, ref, m) == 3);
    }
    SUBCASE("matches a linear-scan oracle and never loses to another sample") {
        Rng rng(15);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> samples;
            for (int i = 0; i < 5; ++i)
                samples.push_back(static_cast<int>(rng.uniform_index(4)));
            int got = select_best_aligned(samples, ref, m);
            int got_d = hamming_distance(m.medoids[static_cast<size_t>(got)], ref);
            int best_d = 1 << 20;
            int best = -1;
            for (int s : samples) {
                int d = hamming_distance(m.medoids[static_cast<size_t>(s)], ref);
                if (d < best_d) {
                    best_d = d;
                    best = s;
                }
            }
            CHECK(got == best);
            for (int s : samples)
                CHECK(got_d <= hamming_distance(m.medoids[static_cast<size_t>(s)], ref));
        }
    }
    SUBCASE("tie broken by earliest occurrence") {
        // medoids 0 and 1: distances 1 and 0... use two equidistant ones.
        TagSequence probe = TagSequence::from_tags(std::vector<int>{8, 1}, 4);
        // d(medoid0={8,2}) = 1, d(medoid2={3,1}) = 1
        std::vector<int> samples{2, 0};
        CHECK(select_best_aligned(samples, probe, m) == 2);
    }
    SUBCASE("empty sample list is an error") {
        std::vector<int> samples;
        CHECK_THROWS_AS(select_best_aligned(samples, ref, m), std::invalid_argument);
    }
}

TEST_CASE("sample_conditions draws distinct indices reproducibly") {
    PosClassifier c;
    c.dim = 1;
    c.num_classes = 6;
    c.weights.assign(6, 0.0);
    c.bias = {1.0, 0.5, 0.0, -0.5, -1.0, -1.5};
    std::vector<double> x{1.0};
    Rng a(42);
    Rng b(42);
    auto s1 = sample_conditions(c, x, 4, a);
    auto s2 = sample_conditions(c, x, 4, b);
    CHECK(s1 == s2);
    std::vector<int> sorted = s1;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("noise-free synthetic corpus trains to accuracy 1") {
    SynthSpec spec;
    spec.seed = 11;
    spec.images = 60;
    spec.noise = 0.0;
    spec.templates = {{8, 2, 1}, {3, 1, 5}, {8, 4, 2, 1}, {2, 1, 8, 2}};
    SynthOutput synth = generate(spec);
    Corpus corpus = parse_corpus(synth.corpus_text, 1);
    FeatureTable features = parse_features(synth.features_text);
    auto seqs = collect_tag_sequences(corpus.train, 20);
    MedoidSet medoids = kmedoids(seqs, 4, 1, 20);
    PosClassifier c = train_classifier(corpus, features, medoids, {0.5, 500, 1, 20});
    ClassifierExamples ex = make_classifier_examples(corpus, features, medoids, 20);
    CHECK(classifier_accuracy(c, ex) == doctest::Approx(1.0));
}

TEST_CASE("classifier serialization round-trips") {
    SeparableFixture fx = separable_fixture();
    PosClassifier c = train_classifier(fx.corpus, fx.features, fx.medoids, {0.5, 50, 1, 8});
    std::string blob = c.to_json();
    PosClassifier loaded = PosClassifier::from_json(blob);
    CHECK(loaded.weights == c.weights);
    CHECK(loaded.bias == c.bias);
    CHECK(loaded.medoid_hash == c.medoid_hash);
    CHECK(loaded.medoid_hash == fx.medoids.hash());
    CHECK_THROWS_AS(PosClassifier::from_json("{}"), DataError);
}

TEST_CASE("training rejects bad hyperparameters") {
    SeparableFixture fx = separable_fixture();
    CHECK_THROWS_AS(train_classifier(fx.corpus, fx.features, fx.medoids, {0.0, 10, 1, 8}),
                    std::invalid_argument);
    CHECK_THROWS_AS(train_classifier(fx.corpus, fx.features, fx.medoids, {0.1, 0, 1, 8}),
                    std::invalid_argument);
}
