#include "poscap/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "poscap/decode.hpp"
#include "poscap/metrics.hpp"
#include "poscap/rerank.hpp"

namespace poscap {

namespace {

const std::set<std::string> kKnownKeys = {
    "corpus", "features", "medoids", "model", "pos_model", "classifier", "split",
    "strategies", "ks", "max_len", "lambda", "seed", "min_count", "alpha", "buckets",
    "k_medoids", "cluster_iters", "classifier_lr", "classifier_epochs", "rerank_m",
    "pos_select", "out_prefix"};

long to_long(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' is not an integer: " + v);
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' is not a number: " + v);
    }
}

struct ImageWork {
    std::string id;
    std::vector<Tokens> references; // split captions of this image
};

double mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

BenchmarkConfig BenchmarkConfig::parse(const std::string& text, const std::string& path) {
    BenchmarkConfig config;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error(path, lineno, "expected key=value");
        std::string key = line.substr(first, eq - first);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        size_t vs = value.find_first_not_of(" \t");
        value = vs == std::string::npos ? "" : value.substr(vs);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t'))
            value.pop_back();
        if (!kKnownKeys.count(key))
            throw std::invalid_argument("unknown config key '" + key + "'");
        config.values[key] = value;
    }
    return config;
}

BenchmarkConfig BenchmarkConfig::load(const std::string& path) {
    return parse(read_file(path), path);
}

std::string BenchmarkConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

nlohmann::ordered_json run_benchmark(const BenchmarkConfig& config) {
    std::vector<std::string> missing;
    if (!config.has("corpus")) missing.push_back("corpus");
    if (!config.has("features")) missing.push_back("features");
    if (!missing.empty()) {
        std::string msg = "missing artifact paths:";
        for (const auto& key : missing) msg += " " + key;
        throw DataError(msg);
    }

    int min_count = static_cast<int>(to_long(config.get("min_count", "1"), "min_count"));
    int max_len = static_cast<int>(to_long(config.get("max_len", "20"), "max_len"));
    double lambda = to_double(config.get("lambda", "0.5"), "lambda");
    uint64_t seed = static_cast<uint64_t>(to_long(config.get("seed", "1"), "seed"));
    double alpha = to_double(config.get("alpha", "0.1"), "alpha");
    int buckets = static_cast<int>(to_long(config.get("buckets", "8"), "buckets"));
    int k_medoids = static_cast<int>(to_long(config.get("k_medoids", "16"), "k_medoids"));
    int cluster_iters =
        static_cast<int>(to_long(config.get("cluster_iters", "50"), "cluster_iters"));
    double lr = to_double(config.get("classifier_lr", "0.5"), "classifier_lr");
    int epochs =
        static_cast<int>(to_long(config.get("classifier_epochs", "300"), "classifier_epochs"));
    int rerank_m = static_cast<int>(to_long(config.get("rerank_m", "16"), "rerank_m"));
    std::string split_name_cfg = config.get("split", "test");
    std::string pos_select_cfg = config.get("pos_select", "top");
    if (pos_select_cfg != "top" && pos_select_cfg != "sample")
        throw std::invalid_argument("pos_select must be 'top' or 'sample'");
    PosSelect pos_select =
        pos_select_cfg == "top" ? PosSelect::top_posterior : PosSelect::sample;

    Split split;
    if (split_name_cfg == "train") split = Split::train;
    else if (split_name_cfg == "val") split = Split::val;
    else if (split_name_cfg == "test") split = Split::test;
    else throw std::invalid_argument("unknown split '" + split_name_cfg + "'");

    std::vector<std::string> strategies;
    for (auto& s : split_fields(config.get("strategies", "beam,pos"), ',')) {
        if (s != "greedy" && s != "beam" && s != "dbs" && s != "pos")
            throw std::invalid_argument("unknown strategy '" + s + "'");
        if (std::find(strategies.begin(), strategies.end(), s) != strategies.end())
            throw std::invalid_argument("duplicate strategy '" + s + "'");
        strategies.push_back(s);
    }
    std::vector<int> ks;
    for (auto& s : split_fields(config.get("ks", "10"), ','))
        ks.push_back(static_cast<int>(to_long(s, "ks")));

    // Assemble artifacts: load when a path is configured, build otherwise.
    Corpus corpus = load_corpus(config.values.at("corpus"), min_count);
    FeatureTable features = load_features(config.values.at("features"));
    validate_features(corpus, features);

    MedoidSet medoids;
    if (config.has("medoids")) {
        medoids = load_medoids(config.values.at("medoids"), max_len);
    } else {
        auto seqs = collect_tag_sequences(corpus.train, max_len);
        medoids = kmedoids(seqs, k_medoids, seed, cluster_iters);
    }

    TabularCaptionModel base_model =
        config.has("model")
            ? TabularCaptionModel::load(config.values.at("model"))
            : train_mle(corpus, features, nullptr, {alpha, buckets, seed + 1, max_len});
    TabularCaptionModel pos_model =
        config.has("pos_model")
            ? TabularCaptionModel::load(config.values.at("pos_model"))
            : train_mle(corpus, features, &medoids, {alpha, buckets, seed + 1, max_len});
    PosClassifier classifier =
        config.has("classifier")
            ? PosClassifier::load(config.values.at("classifier"))
            : train_classifier(corpus, features, medoids, {lr, epochs, seed + 2, max_len});

    // Per-image work units over the chosen split, in first-appearance order.
    std::vector<ImageWork> images;
    {
        std::map<std::string, size_t> index;
        for (const auto& item : corpus.dataset(split).items) {
            auto [it, inserted] = index.try_emplace(item.image_id, images.size());
            if (inserted) images.push_back({item.image_id, {}});
            images[it->second].references.push_back(item.tokens);
        }
    }
    if (images.empty()) throw DataError("split '" + split_name_cfg + "' has no images");

    // Consensus machinery: df table over train documents, train sentence set,
    // pooled neighbor references per test image.
    std::vector<std::vector<Tokens>> train_docs;
    std::set<Tokens> train_sentences;
    std::vector<std::string> train_ids;
    {
        std::map<std::string, size_t> index;
        for (const auto& item : corpus.train.items) {
            auto [it, inserted] = index.try_emplace(item.image_id, train_docs.size());
            if (inserted) {
                train_docs.push_back({});
                train_ids.push_back(item.image_id);
            }
            train_docs[it->second].push_back(item.tokens);
            train_sentences.insert(item.tokens);
        }
    }
    DfTable df = build_df_table(train_docs);
    int m = std::min<int>(rerank_m, static_cast<int>(train_ids.size()));
    std::vector<std::vector<Tokens>> pooled_refs(images.size());
    for (size_t i = 0; i < images.size(); ++i) {
        auto neighbors = retrieve_neighbors(features.at(images[i].id), features, train_ids, m);
        std::map<std::string, size_t> index;
        for (size_t d = 0; d < train_ids.size(); ++d) index[train_ids[d]] = d;
        for (const auto& nid : neighbors)
            for (const auto& ref : train_docs[index[nid]])
                pooled_refs[i].push_back(ref);
    }

    nlohmann::ordered_json report;
    report["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config.values) report["config"][key] = value;
    report["images"] = images.size();
    report["vocab_size"] = corpus.vocab.size();
    report["medoid_count"] = medoids.k();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();

    for (int k : ks) {
        for (const auto& strategy : strategies) {
            DecodeConfig dc{k, max_len, lambda};
            DecodeStats totals;
            std::vector<double> per_image_seconds;
            std::vector<double> uniq, mb4, d1, d2;
            long novel_total = 0;
            long zero_overlap = 0;
            long overlap_images = 0;
            std::vector<double> oracle_b4_best1, consensus_b4_best1, likelihood_b4_best1;
            std::vector<std::vector<double>> oracle_cider_kth, consensus_cider_kth,
                likelihood_cider_kth;

            for (size_t i = 0; i < images.size(); ++i) {
                const ImageWork& image = images[i];
                std::span<const double> feat = features.at(image.id);
                std::vector<CaptionCandidate> candidates;
                DecodeStats stats;
                if (strategy == "greedy") {
                    auto [hyp, st] = greedy_decode(base_model, DecodeRoot{feat, {}}, dc);
                    candidates.push_back({hyp.tokens, hyp.logprob, -1});
                    stats = st;
                } else if (strategy == "beam") {
                    auto [hyps, st] = beam_search(base_model, DecodeRoot{feat, {}}, dc);
                    for (const auto& h : hyps) candidates.push_back({h.tokens, h.logprob, -1});
                    stats = st;
                } else if (strategy == "dbs") {
                    auto [hyps, st] =
                        diverse_beam_search(base_model, DecodeRoot{feat, {}}, dc);
                    for (const auto& h : hyps) candidates.push_back({h.tokens, h.logprob, -1});
                    stats = st;
                } else {
                    auto [hyps, st] = pos_guided_decode(pos_model, classifier, feat, dc,
                                                        pos_select, seed + 3);
                    for (const auto& h : hyps)
                        candidates.push_back({h.hyp.tokens, h.hyp.logprob, h.medoid_index});
                    stats = st;
                }
                totals.topk_ops += stats.topk_ops;
                totals.merge_ops += stats.merge_ops;
                totals.argmax_ops += stats.argmax_ops;
                totals.model_evals += stats.model_evals;
                per_image_seconds.push_back(stats.seconds);

                std::vector<Tokens> captions;
                for (const auto& c : candidates) captions.push_back(c.tokens);
                uniq.push_back(uniqueness(captions));
                novel_total += novelty(captions, train_sentences);
                d1.push_back(div_n(captions, 1));
                d2.push_back(div_n(captions, 2));
                if (captions.size() >= 2) {
                    double o = mutual_overlap(captions);
                    mb4.push_back(o);
                    ++overlap_images;
                    if (o == 0.0) ++zero_overlap;
                }

                auto cider_true = [&](const Tokens& t) {
                    return t.empty() ? 0.0 : cider_d(t, image.references, df);
                };
                auto bleu4_true = [&](const Tokens& t) {
                    return t.empty() ? 0.0 : bleu(t, image.references, 4);
                };
                auto record = [&](const RankedList& ranked, std::vector<double>& b4_best1,
                                  std::vector<std::vector<double>>& cider_kth) {
                    std::vector<double> kth;
                    for (const auto& entry : ranked.entries)
                        kth.push_back(cider_true(entry.candidate.tokens));
                    cider_kth.push_back(std::move(kth));
                    b4_best1.push_back(bleu4_true(ranked.entries.front().candidate.tokens));
                };
                record(oracle_rerank(candidates, image.references, RerankMetric::cider, &df),
                       oracle_b4_best1, oracle_cider_kth);
                record(consensus_rerank(candidates, pooled_refs[i], df), consensus_b4_best1,
                       consensus_cider_kth);
                record(likelihood_rank(candidates), likelihood_b4_best1, likelihood_cider_kth);
            }

            auto kth_means = [&](const std::vector<std::vector<double>>& per_image) {
                size_t depth = 0;
                for (const auto& v : per_image) depth = std::max(depth, v.size());
                std::vector<double> out;
                for (size_t r = 0; r < depth; ++r) {
                    double s = 0.0;
                    long n = 0;
                    for (const auto& v : per_image) {
                        if (r < v.size()) {
                            s += v[r];
                            ++n;
                        }
                    }
                    out.push_back(n == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : s / static_cast<double>(n));
                }
                return out;
            };
            auto mode_json = [&](const std::vector<double>& b4_best1,
                                 const std::vector<std::vector<double>>& cider_kth) {
                nlohmann::ordered_json j;
                std::vector<double> kth = kth_means(cider_kth);
                j["cider_best1"] = kth.empty() ? 0.0 : kth.front();
                j["cider_best_kth"] = kth;
                j["bleu4_best1"] = mean(b4_best1);
                return j;
            };

            nlohmann::ordered_json row;
            row["strategy"] = strategy;
            row["k"] = k;
            row["speed_s_per_img"] = mean(per_image_seconds);
            row["stats"] = {{"topk_ops", totals.topk_ops},
                            {"merge_ops", totals.merge_ops},
                            {"argmax_ops", totals.argmax_ops},
                            {"model_evals", totals.model_evals}};
            nlohmann::ordered_json diversity;
            diversity["uniqueness"] = mean(uniq);
            diversity["novel"] = novel_total;
            diversity["mbleu4"] = mean(mb4);
            diversity["div1"] = mean(d1);
            diversity["div2"] = mean(d2);
            diversity["zero_overlap_frac"] =
                overlap_images == 0
                    ? std::numeric_limits<double>::quiet_NaN()
                    : static_cast<double>(zero_overlap) / static_cast<double>(overlap_images);
            row["diversity"] = std::move(diversity);
            nlohmann::ordered_json accuracy;
            accuracy["oracle"] = mode_json(oracle_b4_best1, oracle_cider_kth);
            accuracy["consensus"] = mode_json(consensus_b4_best1, consensus_cider_kth);
            accuracy["likelihood"] = mode_json(likelihood_b4_best1, likelihood_cider_kth);
            row["accuracy"] = std::move(accuracy);
            rows.push_back(std::move(row));
        }
    }
    report["rows"] = std::move(rows);
    return report;
}

std::string benchmark_tsv(const nlohmann::ordered_json& report) {
    std::ostringstream out;
    out << "strategy\tk\tspeed_s_per_img\ttopk_ops\tmerge_ops\targmax_ops\tmodel_evals"
        << "\tuniqueness\tnovel\tmbleu4\tdiv1\tdiv2\tzero_overlap_frac"
        << "\toracle_cider_best1\tconsensus_cider_best1\tlikelihood_cider_best1\n";
    auto num = [](const nlohmann::ordered_json& v) {
        if (v.is_null()) return std::string("-");
        double x = v.get<double>();
        if (std::isnan(x)) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", x);
        return std::string(buf);
    };
    for (const auto& row : report.at("rows")) {
        out << row.at("strategy").get<std::string>() << '\t' << row.at("k").get<int>() << '\t'
            << num(row.at("speed_s_per_img")) << '\t'
            << row.at("stats").at("topk_ops").get<long>() << '\t'
            << row.at("stats").at("merge_ops").get<long>() << '\t'
            << row.at("stats").at("argmax_ops").get<long>() << '\t'
            << row.at("stats").at("model_evals").get<long>() << '\t'
            << num(row.at("diversity").at("uniqueness")) << '\t'
            << row.at("diversity").at("novel").get<long>() << '\t'
            << num(row.at("diversity").at("mbleu4")) << '\t'
            << num(row.at("diversity").at("div1")) << '\t'
            << num(row.at("diversity").at("div2")) << '\t'
            << num(row.at("diversity").at("zero_overlap_frac")) << '\t'
            << num(row.at("accuracy").at("oracle").at("cider_best1")) << '\t'
            << num(row.at("accuracy").at("consensus").at("cider_best1")) << '\t'
            << num(row.at("accuracy").at("likelihood").at("cider_best1")) << '\n';
    }
    return out.str();
}

void strip_timing(nlohmann::ordered_json& report) {
    if (report.is_object()) {
        report.erase("speed_s_per_img");
        report.erase("seconds");
        for (auto& [key, value] : report.items()) strip_timing(value);
    } else if (report.is_array()) {
        for (auto& value : report) strip_timing(value);
    }
}

void write_benchmark_outputs(const nlohmann::ordered_json& report,
                             const std::string& out_prefix) {
    write_file(out_prefix + ".json", report.dump(2) + "\n");
    write_file(out_prefix + ".tsv", benchmark_tsv(report));
}

} // namespace poscap
