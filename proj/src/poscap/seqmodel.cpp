#include "poscap/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace poscap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Context key packing. Absent fields are stored as 0 (values offset by 1);
// the level number keeps different backoff tables disjoint.
uint64_t make_key(int level, int bucket, int medoid, int tag, int prev) {
    uint64_t key = static_cast<uint64_t>(level);
    key = (key << 10) | static_cast<uint64_t>(bucket + 1);
    key = (key << 18) | static_cast<uint64_t>(medoid + 1);
    key = (key << 5) | static_cast<uint64_t>(tag + 1);
    key = (key << 25) | static_cast<uint64_t>(prev + 1);
    return key;
}

// Backoff order: full context, drop image bucket, drop previous word, drop
// tag, global. The unconditioned model has no medoid/tag fields.
std::vector<uint64_t> context_keys(bool pos, int bucket, int medoid, int tag, int prev) {
    if (pos) {
        return {make_key(0, bucket, medoid, tag, prev), make_key(1, -1, medoid, tag, prev),
                make_key(2, -1, medoid, tag, -1), make_key(3, -1, medoid, -1, -1),
                make_key(4, -1, -1, -1, -1)};
    }
    return {make_key(0, bucket, -1, -1, prev), make_key(1, -1, -1, -1, prev),
            make_key(4, -1, -1, -1, -1)};
}

} // namespace

double sequence_logprob(const ConditionalModel& model, std::span<const double> features,
                        std::optional<int> medoid_index, std::span<const int> tokens) {
    std::vector<int> prefix{kBosId};
    double lp = 0.0;
    for (int t : tokens) {
        if (t < 0 || t >= model.vocab_size())
            throw std::invalid_argument("token id outside vocabulary: " + std::to_string(t));
        ModelContext ctx{features, medoid_index, prefix};
        lp += model.next_logprobs(ctx)[static_cast<size_t>(t)];
        if (t == kEosId) break;
        prefix.push_back(t);
    }
    return lp;
}

int TabularCaptionModel::bucket_of(std::span<const double> features) const {
    if (features.size() != bucket_dirs_[0].size())
        throw std::invalid_argument("feature dimension mismatch: expected " +
                                    std::to_string(bucket_dirs_[0].size()) + ", got " +
                                    std::to_string(features.size()));
    int best = 0;
    double best_dot = kNegInf;
    for (size_t b = 0; b < bucket_dirs_.size(); ++b) {
        double dot = 0.0;
        for (size_t i = 0; i < features.size(); ++i) dot += features[i] * bucket_dirs_[b][i];
        if (dot > best_dot) {
            best_dot = dot;
            best = static_cast<int>(b);
        }
    }
    return best;
}

const MedoidSet& TabularCaptionModel::medoids() const {
    if (!medoids_) throw std::invalid_argument("model is not POS-conditioned");
    return *medoids_;
}

uint64_t TabularCaptionModel::medoid_hash() const { return medoids().hash(); }

std::vector<double> TabularCaptionModel::distribution(const Row& row) const {
    size_t n = static_cast<size_t>(vocab_.size());
    double denom = static_cast<double>(row.total) + config_.alpha * static_cast<double>(n);
    std::vector<double> lp(n, std::log(config_.alpha / denom));
    for (const auto& [word, count] : row.counts)
        lp[static_cast<size_t>(word)] =
            std::log((static_cast<double>(count) + config_.alpha) / denom);
    return lp;
}

std::vector<double> TabularCaptionModel::next_logprobs(const ModelContext& ctx) const {
    if (ctx.prefix.empty() || ctx.prefix[0] != kBosId)
        throw std::invalid_argument("prefix must begin with BOS");
    for (int t : ctx.prefix)
        if (t < 0 || t >= vocab_.size())
            throw std::invalid_argument("prefix token outside vocabulary");

    int tag = -1;
    int medoid = -1;
    if (medoids_) {
        if (!ctx.medoid_index)
            throw std::invalid_argument("POS-conditioned model requires a medoid index");
        medoid = *ctx.medoid_index;
        if (medoid < 0 || medoid >= medoids_->k())
            throw std::invalid_argument("medoid index out of range");
        const TagSequence& q = medoids_->medoids[static_cast<size_t>(medoid)];
        int i = ctx.position();
        if (i > q.nonpad_length()) {
            // The quantized sequence is a sentence plan; past its end all
            // probability mass lands on EOS.
            std::vector<double> lp(static_cast<size_t>(vocab_.size()), kNegInf);
            lp[kEosId] = 0.0;
            return lp;
        }
        tag = i <= q.length() ? q.at(i - 1) : TagSet::kPadTag;
    }

    int bucket = bucket_of(ctx.features);
    int prev = ctx.prefix.back();
    for (uint64_t key : context_keys(medoids_.has_value(), bucket, medoid, tag, prev)) {
        auto it = tables_.find(key);
        if (it != tables_.end() && it->second.total > 0) return distribution(it->second);
    }
    return std::vector<double>(static_cast<size_t>(vocab_.size()),
                               -std::log(static_cast<double>(vocab_.size())));
}

TabularCaptionModel train_mle(const Corpus& corpus, const FeatureTable& features,
                              const MedoidSet* medoids, const TrainConfig& config) {
    if (config.alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    if (config.buckets < 1) throw std::invalid_argument("buckets must be >= 1");
    if (config.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (corpus.train.items.empty()) throw DataError("empty train split");

    TabularCaptionModel model;
    model.vocab_ = corpus.vocab;
    model.config_ = config;
    if (medoids) {
        if (medoids->max_len != config.max_len)
            throw std::invalid_argument("medoid max_len differs from model max_len");
        model.medoids_ = *medoids;
    }

    Rng rng(config.seed);
    size_t dim = features.dim();
    model.bucket_dirs_.assign(static_cast<size_t>(config.buckets), {});
    for (auto& dir : model.bucket_dirs_) {
        dir.resize(dim);
        double norm = 0.0;
        for (auto& x : dir) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            dir[0] = 1.0;
        } else {
            for (auto& x : dir) x /= norm;
        }
    }

    bool pos = medoids != nullptr;
    auto count = [&](int bucket, int medoid, int tag, int prev, int next) {
        for (uint64_t key : context_keys(pos, bucket, medoid, tag, prev)) {
            auto& row = model.tables_[key];
            ++row.total;
            ++row.counts[next];
        }
    };

    for (const auto& item : corpus.train.items) {
        std::span<const double> feat = features.at(item.image_id);
        int bucket = model.bucket_of(feat);
        int medoid = -1;
        const TagSequence* q = nullptr;
        if (pos) {
            TagSequence t = TagSequence::from_tags(item.tags, config.max_len);
            medoid = quantize(t, *medoids).index;
            q = &model.medoids_->medoids[static_cast<size_t>(medoid)];
        }
        auto tag_at = [&](int position) {
            if (!pos) return -1;
            return position <= q->length() ? q->at(position - 1) : TagSet::kPadTag;
        };
        int prev = kBosId;
        int n = static_cast<int>(item.tokens.size());
        for (int i = 1; i <= n; ++i) {
            count(bucket, medoid, tag_at(i), prev, item.tokens[static_cast<size_t>(i - 1)]);
            prev = item.tokens[static_cast<size_t>(i - 1)];
        }
        count(bucket, medoid, tag_at(n + 1), prev, kEosId);
    }
    return model;
}

std::string TabularCaptionModel::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "poscap-model";
    j["version"] = 1;
    j["alpha"] = config_.alpha;
    j["buckets"] = config_.buckets;
    j["seed"] = config_.seed;
    j["max_len"] = config_.max_len;
    std::vector<std::string> words;
    for (int i = 0; i < vocab_.size(); ++i) words.push_back(vocab_.word_of(i));
    j["vocab"] = words;
    j["vocab_hash"] = std::to_string(vocab_.hash());
    j["bucket_dirs"] = bucket_dirs_;
    if (medoids_) {
        j["medoids"] = serialize_medoids(*medoids_);
        j["medoid_hash"] = std::to_string(medoids_->hash());
    } else {
        j["medoids"] = nullptr;
    }
    nlohmann::ordered_json tables = nlohmann::ordered_json::array();
    for (const auto& [key, row] : tables_) {
        nlohmann::ordered_json counts = nlohmann::ordered_json::array();
        for (const auto& [word, c] : row.counts) counts.push_back({word, c});
        tables.push_back({std::to_string(key), row.total, counts});
    }
    j["tables"] = std::move(tables);
    return j.dump();
}

TabularCaptionModel TabularCaptionModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad model blob: ") + e.what());
    }
    try {
        if (j.at("format") != "poscap-model" || j.at("version") != 1)
            throw DataError("unsupported model format/version");
        TabularCaptionModel model;
        model.config_.alpha = j.at("alpha").get<double>();
        model.config_.buckets = j.at("buckets").get<int>();
        model.config_.seed = j.at("seed").get<uint64_t>();
        model.config_.max_len = j.at("max_len").get<int>();
        std::vector<std::string> words = j.at("vocab").get<std::vector<std::string>>();
        model.vocab_ = Vocabulary::from_words(words);
        if (std::to_string(model.vocab_.hash()) != j.at("vocab_hash").get<std::string>())
            throw DataError("vocabulary hash mismatch in model blob");
        model.bucket_dirs_ = j.at("bucket_dirs").get<std::vector<std::vector<double>>>();
        if (model.bucket_dirs_.empty()) throw DataError("model has no bucket directions");
        if (!j.at("medoids").is_null()) {
            model.medoids_ =
                parse_medoids(j.at("medoids").get<std::string>(), model.config_.max_len);
            if (std::to_string(model.medoids_->hash()) !=
                j.at("medoid_hash").get<std::string>())
                throw DataError("medoid hash mismatch in model blob");
        }
        for (const auto& entry : j.at("tables")) {
            uint64_t key = std::stoull(entry.at(0).get<std::string>());
            Row row;
            row.total = entry.at(1).get<long>();
            for (const auto& wc : entry.at(2))
                row.counts[wc.at(0).get<int>()] = wc.at(1).get<long>();
            model.tables_[key] = std::move(row);
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad model blob: ") + e.what());
    }
}

void TabularCaptionModel::save(const std::string& path) const { write_file(path, to_json()); }

TabularCaptionModel TabularCaptionModel::load(const std::string& path) {
    return from_json(read_file(path));
}

} // namespace poscap
