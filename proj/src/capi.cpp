#include "poscap.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "poscap/benchmark.hpp"
#include "poscap/decode.hpp"
#include "poscap/metrics.hpp"
#include "poscap/rerank.hpp"
#include "poscap/synth.hpp"

using namespace poscap;

struct poscap_corpus {
    Corpus corpus;
};
struct poscap_features {
    FeatureTable table;
};
struct poscap_medoids {
    MedoidSet set;
};
struct poscap_model {
    TabularCaptionModel model;
};
struct poscap_classifier {
    PosClassifier classifier;
};

namespace {

void set_err(char* err, size_t errcap, const char* msg) {
    if (!err || errcap == 0) return;
    std::strncpy(err, msg, errcap - 1);
    err[errcap - 1] = '\0';
}

template <typename Fn>
poscap_status guarded(char* err, size_t errcap, Fn&& fn) {
    try {
        fn();
        return POSCAP_OK;
    } catch (const std::invalid_argument& e) {
        set_err(err, errcap, e.what());
        return POSCAP_USAGE_ERROR;
    } catch (const std::exception& e) {
        set_err(err, errcap, e.what());
        return POSCAP_DATA_ERROR;
    }
}

const char* require(const char* arg, const char* name) {
    if (!arg) throw std::invalid_argument(std::string(name) + " must not be NULL");
    return arg;
}

bool parse_split_name(const std::string& s, Split* out) {
    if (s == "train") *out = Split::train;
    else if (s == "val") *out = Split::val;
    else if (s == "test") *out = Split::test;
    else return false;
    return true;
}

// References of one image: its captions from every split.
std::vector<Tokens> image_references(const Corpus& corpus, const std::string& image_id) {
    std::vector<Tokens> refs;
    for (Split s : {Split::train, Split::val, Split::test})
        for (const auto& item : corpus.dataset(s).items)
            if (item.image_id == image_id) refs.push_back(item.tokens);
    return refs;
}

} // namespace

extern "C" {

const char* poscap_version(void) { return "1.0.0"; }

const char* poscap_status_name(poscap_status status) {
    switch (status) {
        case POSCAP_OK: return "ok";
        case POSCAP_USAGE_ERROR: return "usage error";
        case POSCAP_DATA_ERROR: return "data error";
    }
    return "unknown";
}

poscap_status poscap_corpus_open(const char* path, int min_count, poscap_corpus** out,
                                 char* err, size_t errcap) {
    return guarded(err, errcap, [&] {
        require(path, "path");
        if (!out) throw std::invalid_argument("out must not be NULL");
        auto handle = std::make_unique<poscap_corpus>();
        handle->corpus = load_corpus(path, min_count);
        *out = handle.release();
    });
}

void poscap_corpus_close(poscap_corpus* corpus) { delete corpus; }

int poscap_corpus_vocab_size(const poscap_corpus* corpus) {
    return corpus ? corpus->corpus.vocab.size() : -1;
}

int poscap_corpus_item_count(const poscap_corpus* corpus, const char* split) {
    if (!corpus || !split) return -1;
    Split s;
    if (!parse_split_name(split, &s)) return -1;
    return static_cast<int>(corpus->corpus.dataset(s).items.size());
}

poscap_status poscap_features_open(const char* path, poscap_features** out, char* err,
                                   size_t errcap) {
    return guarded(err, errcap, [&] {
        require(path, "path");
        auto handle = std::make_unique<poscap_features>();
        handle->table = load_features(path);
        *out = handle.release();
    });
}

void poscap_features_close(poscap_features* features) { delete features; }

int poscap_features_dim(const poscap_features* features) {
    return features ? static_cast<int>(features->table.dim()) : -1;
}

int poscap_features_count(const poscap_features* features) {
    return features ? static_cast<int>(features->table.size()) : -1;
}

poscap_status poscap_cluster_run(const poscap_corpus* corpus, int k, uint64_t seed,
                                 int max_iters, int max_len, poscap_medoids** out, char* err,
                                 size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!corpus) throw std::invalid_argument("corpus must not be NULL");
        auto seqs = collect_tag_sequences(corpus->corpus.train, max_len);
        auto handle = std::make_unique<poscap_medoids>();
        handle->set = kmedoids(seqs, k, seed, max_iters);
        *out = handle.release();
    });
}

poscap_status poscap_medoids_open(const char* path, int max_len, poscap_medoids** out,
                                  char* err, size_t errcap) {
    return guarded(err, errcap, [&] {
        require(path, "path");
        auto handle = std::make_unique<poscap_medoids>();
        handle->set = load_medoids(path, max_len);
        *out = handle.release();
    });
}

poscap_status poscap_medoids_save(const poscap_medoids* medoids, const char* path, char* err,
                                  size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!medoids) throw std::invalid_argument("medoids must not be NULL");
        require(path, "path");
        write_file(path, serialize_medoids(medoids->set));
    });
}

void poscap_medoids_close(poscap_medoids* medoids) { delete medoids; }

int poscap_medoids_count(const poscap_medoids* medoids) {
    return medoids ? medoids->set.k() : -1;
}

poscap_status poscap_model_train(const poscap_corpus* corpus, const poscap_features* features,
                                 const poscap_medoids* medoids, double alpha, int buckets,
                                 uint64_t seed, int max_len, poscap_model** out, char* err,
                                 size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!corpus || !features)
            throw std::invalid_argument("corpus and features must not be NULL");
        auto handle = std::make_unique<poscap_model>();
        handle->model = train_mle(corpus->corpus, features->table,
                                  medoids ? &medoids->set : nullptr,
                                  TrainConfig{alpha, buckets, seed, max_len});
        *out = handle.release();
    });
}

poscap_status poscap_model_open(const char* path, poscap_model** out, char* err,
                                size_t errcap) {
    return guarded(err, errcap, [&] {
        require(path, "path");
        auto handle = std::make_unique<poscap_model>();
        handle->model = TabularCaptionModel::load(path);
        *out = handle.release();
    });
}

poscap_status poscap_model_save(const poscap_model* model, const char* path, char* err,
                                size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!model) throw std::invalid_argument("model must not be NULL");
        require(path, "path");
        model->model.save(path);
    });
}

void poscap_model_close(poscap_model* model) { delete model; }

int poscap_model_is_pos_conditioned(const poscap_model* model) {
    return model ? (model->model.pos_conditioned() ? 1 : 0) : -1;
}

poscap_status poscap_classifier_train(const poscap_corpus* corpus,
                                      const poscap_features* features,
                                      const poscap_medoids* medoids, double lr, int epochs,
                                      uint64_t seed, int max_len, poscap_classifier** out,
                                      char* err, size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!corpus || !features || !medoids)
            throw std::invalid_argument("corpus, features and medoids must not be NULL");
        auto handle = std::make_unique<poscap_classifier>();
        handle->classifier =
            train_classifier(corpus->corpus, features->table, medoids->set,
                             ClassifierTrainConfig{lr, epochs, seed, max_len});
        *out = handle.release();
    });
}

poscap_status poscap_classifier_open(const char* path, poscap_classifier** out, char* err,
                                     size_t errcap) {
    return guarded(err, errcap, [&] {
        require(path, "path");
        auto handle = std::make_unique<poscap_classifier>();
        handle->classifier = PosClassifier::load(path);
        *out = handle.release();
    });
}

poscap_status poscap_classifier_save(const poscap_classifier* classifier, const char* path,
                                     char* err, size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!classifier) throw std::invalid_argument("classifier must not be NULL");
        require(path, "path");
        classifier->classifier.save(path);
    });
}

void poscap_classifier_close(poscap_classifier* classifier) { delete classifier; }

poscap_status poscap_decode_run(const poscap_model* model,
                                const poscap_classifier* classifier,
                                const poscap_features* features, const poscap_corpus* corpus,
                                const char* split, const char* strategy, int k, int max_len,
                                double lambda, uint64_t seed, int pos_sample,
                                const char* out_tsv, const char* out_stats_json, char* err,
                                size_t errcap) {
    return guarded(err, errcap, [&] {
        if (!model || !features)
            throw std::invalid_argument("model and features must not be NULL");
        std::string strat = require(strategy, "strategy");
        require(out_tsv, "out_tsv");
        if (strat != "greedy" && strat != "beam" && strat != "dbs" && strat != "pos")
            throw std::invalid_argument("unknown strategy '" + strat + "'");
        if (strat == "pos" && !classifier)
            throw std::invalid_argument("pos strategy requires a classifier");

        std::vector<std::string> image_ids;
        if (corpus) {
            Split s = Split::test;
            if (split && !parse_split_name(split, &s))
                throw std::invalid_argument(std::string("unknown split '") + split + "'");
            std::set<std::string> seen;
            for (const auto& item : corpus->corpus.dataset(s).items)
                if (seen.insert(item.image_id).second) image_ids.push_back(item.image_id);
            if (image_ids.empty())
                throw DataError("no images in the requested split");
        } else {
            image_ids = features->table.ids();
        }

        DecodeConfig dc{k, max_len, lambda};
        DecodeStats totals;
        double seconds = 0.0;
        std::vector<DecodedImage> out_images;
        for (const auto& id : image_ids) {
            std::span<const double> feat = features->table.at(id);
            DecodedImage di{id, {}};
            DecodeStats stats;
            if (strat == "greedy") {
                auto [hyp, st] = greedy_decode(model->model, DecodeRoot{feat, {}}, dc);
                di.candidates.push_back({hyp.tokens, hyp.logprob, -1});
                stats = st;
            } else if (strat == "beam") {
                auto [hyps, st] = beam_search(model->model, DecodeRoot{feat, {}}, dc);
                for (const auto& h : hyps) di.candidates.push_back({h.tokens, h.logprob, -1});
                stats = st;
            } else if (strat == "dbs") {
                auto [hyps, st] = diverse_beam_search(model->model, DecodeRoot{feat, {}}, dc);
                for (const auto& h : hyps) di.candidates.push_back({h.tokens, h.logprob, -1});
                stats = st;
            } else {
                auto [hyps, st] = pos_guided_decode(
                    model->model, classifier->classifier, feat, dc,
                    pos_sample ? PosSelect::sample : PosSelect::top_posterior, seed);
                for (const auto& h : hyps)
                    di.candidates.push_back({h.hyp.tokens, h.hyp.logprob, h.medoid_index});
                stats = st;
            }
            totals.topk_ops += stats.topk_ops;
            totals.merge_ops += stats.merge_ops;
            totals.argmax_ops += stats.argmax_ops;
            totals.model_evals += stats.model_evals;
            seconds += stats.seconds;
            out_images.push_back(std::move(di));
        }
        write_file(out_tsv, serialize_decode_tsv(out_images, model->model.vocab()));
        if (out_stats_json) {
            nlohmann::ordered_json j;
            j["strategy"] = strat;
            j["k"] = k;
            j["max_len"] = max_len;
            j["lambda"] = lambda;
            j["images"] = image_ids.size();
            j["topk_ops"] = totals.topk_ops;
            j["merge_ops"] = totals.merge_ops;
            j["argmax_ops"] = totals.argmax_ops;
            j["model_evals"] = totals.model_evals;
            j["seconds_total"] = seconds;
            j["speed_s_per_img"] = seconds / static_cast<double>(image_ids.size());
            write_file(out_stats_json, j.dump(2) + "\n");
        }
    });
}

poscap_status poscap_rerank_run(const char* decode_tsv, const poscap_corpus* corpus,
                                const poscap_features* features, const char* mode,
                                const char* metric, int m, const char* out_tsv, char* err,
                                size_t errcap) {
    return guarded(err, errcap, [&] {
        require(decode_tsv, "decode_tsv");
        require(out_tsv, "out_tsv");
        if (!corpus) throw std::invalid_argument("corpus must not be NULL");
        std::string mode_s = require(mode, "mode");
        if (mode_s != "oracle" && mode_s != "consensus" && mode_s != "likelihood")
            throw std::invalid_argument("unknown mode '" + mode_s + "'");

        const Corpus& c = corpus->corpus;
        auto images = parse_decode_tsv(read_file(decode_tsv), c.vocab, decode_tsv);

        DfTable df;
        std::vector<std::string> train_ids;
        std::vector<std::vector<Tokens>> train_docs;
        if (mode_s != "likelihood") {
            std::map<std::string, size_t> index;
            for (const auto& item : c.train.items) {
                auto [it, inserted] = index.try_emplace(item.image_id, train_docs.size());
                if (inserted) {
                    train_docs.push_back({});
                    train_ids.push_back(item.image_id);
                }
                train_docs[it->second].push_back(item.tokens);
            }
            df = build_df_table(train_docs);
        }

        std::vector<DecodedImage> out_images;
        for (const auto& image : images) {
            RankedList ranked;
            if (mode_s == "likelihood") {
                ranked = likelihood_rank(image.candidates);
            } else if (mode_s == "oracle") {
                RerankMetric rm = parse_metric(require(metric, "metric"));
                auto refs = image_references(c, image.image_id);
                if (refs.empty())
                    throw DataError("no reference captions for image '" + image.image_id +
                                    "'");
                ranked = oracle_rerank(image.candidates, refs, rm, &df);
            } else {
                if (!features)
                    throw std::invalid_argument("consensus mode requires features");
                auto neighbors =
                    retrieve_neighbors(features->table.at(image.image_id), features->table,
                                       train_ids, m);
                std::map<std::string, size_t> index;
                for (size_t d = 0; d < train_ids.size(); ++d) index[train_ids[d]] = d;
                std::vector<Tokens> pooled;
                for (const auto& nid : neighbors)
                    for (const auto& ref : train_docs[index[nid]]) pooled.push_back(ref);
                ranked = consensus_rerank(image.candidates, pooled, df);
            }
            DecodedImage out{image.image_id, {}};
            for (const auto& entry : ranked.entries) out.candidates.push_back(entry.candidate);
            out_images.push_back(std::move(out));
        }
        write_file(out_tsv, serialize_decode_tsv(out_images, c.vocab));
    });
}

poscap_status poscap_evaluate_run(const char* decode_tsv, const poscap_corpus* corpus,
                                  const char* out_json, const char* out_tsv, char* err,
                                  size_t errcap) {
    return guarded(err, errcap, [&] {
        require(decode_tsv, "decode_tsv");
        require(out_json, "out_json");
        require(out_tsv, "out_tsv");
        if (!corpus) throw std::invalid_argument("corpus must not be NULL");
        const Corpus& c = corpus->corpus;
        auto images = parse_decode_tsv(read_file(decode_tsv), c.vocab, decode_tsv);

        std::set<Tokens> train_sentences;
        for (const auto& item : c.train.items) train_sentences.insert(item.tokens);

        std::ostringstream tsv;
        tsv << "image_id\tk\tuniqueness\tnovel\tmbleu4\tdiv1\tdiv2\n";
        char buf[40];
        auto fmt = [&](double v) {
            if (std::isnan(v)) return std::string("-");
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            return std::string(buf);
        };
        double uniq_sum = 0.0, mb4_sum = 0.0, d1_sum = 0.0, d2_sum = 0.0;
        long novel_total = 0;
        long mb4_n = 0;
        int k_max = 0;
        for (const auto& image : images) {
            std::vector<Tokens> captions;
            for (const auto& cand : image.candidates) captions.push_back(cand.tokens);
            DiversityReport r = diversity_report(captions, train_sentences);
            k_max = std::max(k_max, r.k);
            uniq_sum += r.uniqueness;
            novel_total += r.novel;
            d1_sum += r.div1;
            d2_sum += r.div2;
            if (!std::isnan(r.mbleu4)) {
                mb4_sum += r.mbleu4;
                ++mb4_n;
            }
            tsv << image.image_id << '\t' << r.k << '\t' << fmt(r.uniqueness) << '\t'
                << r.novel << '\t' << fmt(r.mbleu4) << '\t' << fmt(r.div1) << '\t'
                << fmt(r.div2) << '\n';
        }
        double n = static_cast<double>(images.size());
        nlohmann::ordered_json j;
        j["images"] = images.size();
        j["k"] = k_max;
        j["uniqueness"] = uniq_sum / n;
        j["novel"] = novel_total;
        j["mbleu4"] = mb4_n ? mb4_sum / static_cast<double>(mb4_n)
                            : std::numeric_limits<double>::quiet_NaN();
        j["div1"] = d1_sum / n;
        j["div2"] = d2_sum / n;
        write_file(out_json, j.dump(2) + "\n");
        write_file(out_tsv, tsv.str());
    });
}

poscap_status poscap_synth_run(const char* templates_path, uint64_t seed, int images,
                               int caps_per_image, int words_per_tag, int feature_dim,
                               double noise, const char* out_prefix, char* err,
                               size_t errcap) {
    return guarded(err, errcap, [&] {
        require(out_prefix, "out_prefix");
        SynthSpec spec;
        spec.seed = seed;
        spec.images = images;
        spec.caps_per_image = caps_per_image;
        spec.words_per_tag = words_per_tag;
        spec.feature_dim = feature_dim;
        spec.noise = noise;
        spec.templates = templates_path ? parse_templates(read_file(templates_path),
                                                          templates_path)
                                        : default_templates();
        SynthOutput out = generate(spec);
        write_file(std::string(out_prefix) + ".corpus.tsv", out.corpus_text);
        write_file(std::string(out_prefix) + ".features.tsv", out.features_text);
    });
}

poscap_status poscap_benchmark_run(const char* config_path, const char* out_prefix,
                                   char* err, size_t errcap) {
    return guarded(err, errcap, [&] {
        require(config_path, "config_path");
        BenchmarkConfig config = BenchmarkConfig::load(config_path);
        std::string prefix = out_prefix ? out_prefix : config.get("out_prefix", "");
        if (prefix.empty())
            throw std::invalid_argument(
                "no output prefix: pass one or set out_prefix in the config");
        nlohmann::ordered_json report = run_benchmark(config);
        write_benchmark_outputs(report, prefix);
    });
}

} // extern "C"
