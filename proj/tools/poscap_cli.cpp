// Command-line front end for the poscap shared library. Everything goes
// through the C API in poscap.h; exit codes are the poscap_status values
// (0 ok, 1 usage error, 2 data error).

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poscap.h"

namespace {

char g_err[1024];

int fail(poscap_status status) {
    std::fprintf(stderr, "error (%s): %s\n", poscap_status_name(status), g_err);
    return static_cast<int>(status);
}

void print_config(const std::string& cmd,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
    std::fprintf(stderr, "[%s]", cmd.c_str());
    for (const auto& [k, v] : kv) std::fprintf(stderr, " %s=%s", k.c_str(), v.c_str());
    std::fprintf(stderr, "\n");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct CorpusHandle {
    poscap_corpus* ptr = nullptr;
    ~CorpusHandle() { poscap_corpus_close(ptr); }
};
struct FeaturesHandle {
    poscap_features* ptr = nullptr;
    ~FeaturesHandle() { poscap_features_close(ptr); }
};
struct MedoidsHandle {
    poscap_medoids* ptr = nullptr;
    ~MedoidsHandle() { poscap_medoids_close(ptr); }
};
struct ModelHandle {
    poscap_model* ptr = nullptr;
    ~ModelHandle() { poscap_model_close(ptr); }
};
struct ClassifierHandle {
    poscap_classifier* ptr = nullptr;
    ~ClassifierHandle() { poscap_classifier_close(ptr); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"poscap: POS-guided caption decoding and evaluation toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    // synth
    {
        auto* cmd = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
        auto seed = std::make_shared<uint64_t>(1);
        auto images = std::make_shared<int>(100);
        auto caps = std::make_shared<int>(5);
        auto words = std::make_shared<int>(20);
        auto dim = std::make_shared<int>(16);
        auto noise = std::make_shared<double>(0.1);
        auto templates = std::make_shared<std::string>();
        auto prefix = std::make_shared<std::string>();
        cmd->add_option("--seed", *seed, "RNG seed");
        cmd->add_option("--images", *images, "Number of images");
        cmd->add_option("--caps-per-image", *caps, "Captions per image");
        cmd->add_option("--words-per-tag", *words, "Word pool size per tag");
        cmd->add_option("--feature-dim", *dim, "Feature vector dimension");
        cmd->add_option("--noise", *noise, "Feature noise level");
        cmd->add_option("--templates", *templates, "Template file (one per line)");
        cmd->add_option("--out-prefix", *prefix, "Output prefix")->required();
        cmd->callback([=, &exit_code] {
            print_config("synth", {{"seed", std::to_string(*seed)},
                                   {"images", std::to_string(*images)},
                                   {"caps_per_image", std::to_string(*caps)},
                                   {"words_per_tag", std::to_string(*words)},
                                   {"feature_dim", std::to_string(*dim)},
                                   {"noise", fmt(*noise)},
                                   {"templates", templates->empty() ? "<builtin>" : *templates},
                                   {"out_prefix", *prefix}});
            poscap_status st = poscap_synth_run(
                templates->empty() ? nullptr : templates->c_str(), *seed, *images, *caps,
                *words, *dim, *noise, prefix->c_str(), g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // cluster
    {
        auto* cmd = app.add_subcommand("cluster", "Quantize POS tag sequences to K medoids");
        auto corpus = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto k = std::make_shared<int>(16);
        auto seed = std::make_shared<uint64_t>(1);
        auto iters = std::make_shared<int>(50);
        auto max_len = std::make_shared<int>(20);
        auto min_count = std::make_shared<int>(1);
        cmd->add_option("--corpus", *corpus, "Corpus TSV")->required();
        cmd->add_option("--k", *k, "Number of medoids");
        cmd->add_option("--seed", *seed, "RNG seed");
        cmd->add_option("--max-iters", *iters, "Maximum iterations");
        cmd->add_option("--max-len", *max_len, "Tag sequence length cap");
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_option("--out", *out, "Output medoid TSV")->required();
        cmd->callback([=, &exit_code] {
            print_config("cluster", {{"corpus", *corpus},
                                     {"k", std::to_string(*k)},
                                     {"seed", std::to_string(*seed)},
                                     {"max_iters", std::to_string(*iters)},
                                     {"max_len", std::to_string(*max_len)},
                                     {"min_count", std::to_string(*min_count)},
                                     {"out", *out}});
            CorpusHandle c;
            poscap_status st =
                poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            MedoidsHandle m;
            st = poscap_cluster_run(c.ptr, *k, *seed, *iters, *max_len, &m.ptr, g_err,
                                    sizeof(g_err));
            if (st == POSCAP_OK)
                st = poscap_medoids_save(m.ptr, out->c_str(), g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // train
    {
        auto* cmd = app.add_subcommand("train", "Train the caption model (MLE counts)");
        auto corpus = std::make_shared<std::string>();
        auto features = std::make_shared<std::string>();
        auto medoids = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto alpha = std::make_shared<double>(0.1);
        auto buckets = std::make_shared<int>(8);
        auto seed = std::make_shared<uint64_t>(1);
        auto max_len = std::make_shared<int>(20);
        auto min_count = std::make_shared<int>(1);
        cmd->add_option("--corpus", *corpus, "Corpus TSV")->required();
        cmd->add_option("--features", *features, "Feature TSV")->required();
        cmd->add_option("--medoids", *medoids, "Medoid TSV (POS-conditioned model)");
        cmd->add_option("--alpha", *alpha, "Add-alpha smoothing constant");
        cmd->add_option("--buckets", *buckets, "Image feature buckets");
        cmd->add_option("--seed", *seed, "RNG seed");
        cmd->add_option("--max-len", *max_len, "Sequence length cap");
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_option("--out", *out, "Output model JSON")->required();
        cmd->callback([=, &exit_code] {
            print_config("train", {{"corpus", *corpus},
                                   {"features", *features},
                                   {"medoids", medoids->empty() ? "-" : *medoids},
                                   {"alpha", fmt(*alpha)},
                                   {"buckets", std::to_string(*buckets)},
                                   {"seed", std::to_string(*seed)},
                                   {"max_len", std::to_string(*max_len)},
                                   {"min_count", std::to_string(*min_count)},
                                   {"out", *out}});
            CorpusHandle c;
            poscap_status st =
                poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            FeaturesHandle f;
            st = poscap_features_open(features->c_str(), &f.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            MedoidsHandle m;
            if (!medoids->empty()) {
                st = poscap_medoids_open(medoids->c_str(), *max_len, &m.ptr, g_err,
                                         sizeof(g_err));
                if (st != POSCAP_OK) {
                    exit_code = fail(st);
                    return;
                }
            }
            ModelHandle model;
            st = poscap_model_train(c.ptr, f.ptr, m.ptr, *alpha, *buckets, *seed, *max_len,
                                    &model.ptr, g_err, sizeof(g_err));
            if (st == POSCAP_OK)
                st = poscap_model_save(model.ptr, out->c_str(), g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // train-classifier
    {
        auto* cmd = app.add_subcommand("train-classifier",
                                       "Train the image-to-POS classifier");
        auto corpus = std::make_shared<std::string>();
        auto features = std::make_shared<std::string>();
        auto medoids = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto lr = std::make_shared<double>(0.5);
        auto epochs = std::make_shared<int>(300);
        auto seed = std::make_shared<uint64_t>(1);
        auto max_len = std::make_shared<int>(20);
        auto min_count = std::make_shared<int>(1);
        cmd->add_option("--corpus", *corpus, "Corpus TSV")->required();
        cmd->add_option("--features", *features, "Feature TSV")->required();
        cmd->add_option("--medoids", *medoids, "Medoid TSV")->required();
        cmd->add_option("--lr", *lr, "Learning rate");
        cmd->add_option("--epochs", *epochs, "Training epochs");
        cmd->add_option("--seed", *seed, "RNG seed");
        cmd->add_option("--max-len", *max_len, "Sequence length cap");
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_option("--out", *out, "Output classifier JSON")->required();
        cmd->callback([=, &exit_code] {
            print_config("train-classifier", {{"corpus", *corpus},
                                              {"features", *features},
                                              {"medoids", *medoids},
                                              {"lr", fmt(*lr)},
                                              {"epochs", std::to_string(*epochs)},
                                              {"seed", std::to_string(*seed)},
                                              {"max_len", std::to_string(*max_len)},
                                              {"min_count", std::to_string(*min_count)},
                                              {"out", *out}});
            CorpusHandle c;
            poscap_status st =
                poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            FeaturesHandle f;
            st = poscap_features_open(features->c_str(), &f.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            MedoidsHandle m;
            st = poscap_medoids_open(medoids->c_str(), *max_len, &m.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            ClassifierHandle cl;
            st = poscap_classifier_train(c.ptr, f.ptr, m.ptr, *lr, *epochs, *seed, *max_len,
                                         &cl.ptr, g_err, sizeof(g_err));
            if (st == POSCAP_OK)
                st = poscap_classifier_save(cl.ptr, out->c_str(), g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // decode
    {
        auto* cmd = app.add_subcommand("decode", "Decode captions for images");
        auto strategy = std::make_shared<std::string>("beam");
        auto k = std::make_shared<int>(1);
        auto max_len = std::make_shared<int>(20);
        auto lambda = std::make_shared<double>(0.5);
        auto seed = std::make_shared<uint64_t>(1);
        auto model = std::make_shared<std::string>();
        auto classifier = std::make_shared<std::string>();
        auto medoids = std::make_shared<std::string>();
        auto features = std::make_shared<std::string>();
        auto corpus = std::make_shared<std::string>();
        auto split = std::make_shared<std::string>("test");
        auto out = std::make_shared<std::string>();
        auto min_count = std::make_shared<int>(1);
        auto pos_sample = std::make_shared<bool>(false);
        cmd->add_option("--strategy", *strategy, "greedy|beam|dbs|pos");
        cmd->add_option("--k", *k, "Beam width / sample count");
        cmd->add_option("--max-len", *max_len, "Maximum emission steps");
        cmd->add_option("--lambda", *lambda, "Diversity penalty weight (dbs)");
        cmd->add_option("--seed", *seed, "RNG seed (pos sampling)");
        cmd->add_option("--model", *model, "Model JSON")->required();
        cmd->add_option("--classifier", *classifier, "Classifier JSON (pos strategy)");
        cmd->add_option("--medoids", *medoids, "Medoid TSV (unused; kept for parity)");
        cmd->add_option("--features", *features, "Feature TSV")->required();
        cmd->add_option("--corpus", *corpus, "Corpus TSV for split filtering");
        cmd->add_option("--split", *split, "Split to decode when --corpus is given");
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_flag("--pos-sample", *pos_sample,
                      "Sample POS conditions instead of top posterior");
        cmd->add_option("--out", *out, "Output decode TSV")->required();
        cmd->callback([=, &exit_code] {
            print_config("decode", {{"strategy", *strategy},
                                    {"k", std::to_string(*k)},
                                    {"max_len", std::to_string(*max_len)},
                                    {"lambda", fmt(*lambda)},
                                    {"seed", std::to_string(*seed)},
                                    {"model", *model},
                                    {"classifier", classifier->empty() ? "-" : *classifier},
                                    {"features", *features},
                                    {"corpus", corpus->empty() ? "-" : *corpus},
                                    {"split", *split},
                                    {"pos_sample", *pos_sample ? "1" : "0"},
                                    {"out", *out}});
            ModelHandle m;
            poscap_status st = poscap_model_open(model->c_str(), &m.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            FeaturesHandle f;
            st = poscap_features_open(features->c_str(), &f.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            ClassifierHandle cl;
            if (!classifier->empty()) {
                st = poscap_classifier_open(classifier->c_str(), &cl.ptr, g_err,
                                            sizeof(g_err));
                if (st != POSCAP_OK) {
                    exit_code = fail(st);
                    return;
                }
            }
            CorpusHandle c;
            if (!corpus->empty()) {
                st = poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err,
                                        sizeof(g_err));
                if (st != POSCAP_OK) {
                    exit_code = fail(st);
                    return;
                }
            }
            std::string stats_path = *out + ".stats.json";
            st = poscap_decode_run(m.ptr, cl.ptr, f.ptr, c.ptr,
                                   corpus->empty() ? nullptr : split->c_str(),
                                   strategy->c_str(), *k, *max_len, *lambda, *seed,
                                   *pos_sample ? 1 : 0, out->c_str(), stats_path.c_str(),
                                   g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // rerank
    {
        auto* cmd = app.add_subcommand("rerank", "Re-rank a decode TSV");
        auto mode = std::make_shared<std::string>("likelihood");
        auto metric = std::make_shared<std::string>("cider");
        auto m = std::make_shared<int>(16);
        auto in = std::make_shared<std::string>();
        auto corpus = std::make_shared<std::string>();
        auto features = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto min_count = std::make_shared<int>(1);
        cmd->add_option("--mode", *mode, "oracle|consensus|likelihood");
        cmd->add_option("--metric", *metric, "bleu1..bleu4|cider (oracle mode)");
        cmd->add_option("--m", *m, "Neighbor count (consensus mode)");
        cmd->add_option("--in", *in, "Input decode TSV")->required();
        cmd->add_option("--corpus", *corpus, "Corpus TSV")->required();
        cmd->add_option("--features", *features, "Feature TSV (consensus mode)");
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_option("--out", *out, "Output decode TSV")->required();
        cmd->callback([=, &exit_code] {
            print_config("rerank", {{"mode", *mode},
                                    {"metric", *metric},
                                    {"m", std::to_string(*m)},
                                    {"in", *in},
                                    {"corpus", *corpus},
                                    {"features", features->empty() ? "-" : *features},
                                    {"min_count", std::to_string(*min_count)},
                                    {"out", *out}});
            CorpusHandle c;
            poscap_status st =
                poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            FeaturesHandle f;
            if (!features->empty()) {
                st = poscap_features_open(features->c_str(), &f.ptr, g_err, sizeof(g_err));
                if (st != POSCAP_OK) {
                    exit_code = fail(st);
                    return;
                }
            }
            st = poscap_rerank_run(in->c_str(), c.ptr, f.ptr, mode->c_str(), metric->c_str(),
                                   *m, out->c_str(), g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // evaluate
    {
        auto* cmd = app.add_subcommand("evaluate", "Diversity metrics for a decode TSV");
        auto in = std::make_shared<std::string>();
        auto corpus = std::make_shared<std::string>();
        auto out_json = std::make_shared<std::string>();
        auto out_tsv = std::make_shared<std::string>();
        auto min_count = std::make_shared<int>(1);
        cmd->add_option("--in", *in, "Input decode TSV")->required();
        cmd->add_option("--corpus", *corpus, "Corpus TSV")->required();
        cmd->add_option("--min-count", *min_count, "Vocabulary frequency threshold");
        cmd->add_option("--out-json", *out_json, "Aggregate diversity report")->required();
        cmd->add_option("--out-tsv", *out_tsv, "Per-image metric TSV")->required();
        cmd->callback([=, &exit_code] {
            print_config("evaluate", {{"in", *in},
                                      {"corpus", *corpus},
                                      {"min_count", std::to_string(*min_count)},
                                      {"out_json", *out_json},
                                      {"out_tsv", *out_tsv}});
            CorpusHandle c;
            poscap_status st =
                poscap_corpus_open(corpus->c_str(), *min_count, &c.ptr, g_err, sizeof(g_err));
            if (st != POSCAP_OK) {
                exit_code = fail(st);
                return;
            }
            st = poscap_evaluate_run(in->c_str(), c.ptr, out_json->c_str(), out_tsv->c_str(),
                                     g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    // benchmark
    {
        auto* cmd = app.add_subcommand("benchmark", "Run the strategy comparison benchmark");
        auto config = std::make_shared<std::string>();
        auto prefix = std::make_shared<std::string>();
        cmd->add_option("--config", *config, "Flat key=value config file")->required();
        cmd->add_option("--out-prefix", *prefix, "Output prefix (overrides config)");
        cmd->callback([=, &exit_code] {
            print_config("benchmark",
                         {{"config", *config}, {"out_prefix", prefix->empty() ? "-" : *prefix}});
            poscap_status st =
                poscap_benchmark_run(config->c_str(), prefix->empty() ? nullptr : prefix->c_str(),
                                     g_err, sizeof(g_err));
            if (st != POSCAP_OK) exit_code = fail(st);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    return exit_code;
}
