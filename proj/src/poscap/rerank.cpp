#include "poscap/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace poscap {

namespace {

RankedList rank_by_score(std::span<const CaptionCandidate> candidates,
                         std::span<const double> scores, std::string method) {
    std::vector<size_t> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a].logprob != candidates[b].logprob)
            return candidates[a].logprob > candidates[b].logprob;
        return candidates[a].tokens < candidates[b].tokens;
    });
    RankedList out;
    out.method = std::move(method);
    out.entries.reserve(order.size());
    for (size_t r = 0; r < order.size(); ++r)
        out.entries.push_back({candidates[order[r]], scores[order[r]],
                               static_cast<int>(r) + 1});
    return out;
}

} // namespace

RerankMetric parse_metric(const std::string& name) {
    if (name == "bleu1") return RerankMetric::bleu1;
    if (name == "bleu2") return RerankMetric::bleu2;
    if (name == "bleu3") return RerankMetric::bleu3;
    if (name == "bleu4") return RerankMetric::bleu4;
    if (name == "cider") return RerankMetric::cider;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

RankedList oracle_rerank(std::span<const CaptionCandidate> candidates,
                         std::span<const Tokens> references, RerankMetric metric,
                         const DfTable* df) {
    if (candidates.empty()) throw std::invalid_argument("oracle_rerank: no candidates");
    if (references.empty()) throw std::invalid_argument("oracle_rerank: no references");
    if (metric == RerankMetric::cider && df == nullptr)
        throw std::invalid_argument("oracle_rerank: cider metric needs a df table");
    std::vector<double> scores(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        const Tokens& c = candidates[i].tokens;
        if (c.empty()) {
            scores[i] = 0.0;
            continue;
        }
        switch (metric) {
            case RerankMetric::bleu1: scores[i] = bleu(c, references, 1); break;
            case RerankMetric::bleu2: scores[i] = bleu(c, references, 2); break;
            case RerankMetric::bleu3: scores[i] = bleu(c, references, 3); break;
            case RerankMetric::bleu4: scores[i] = bleu(c, references, 4); break;
            case RerankMetric::cider: scores[i] = cider_d(c, references, *df); break;
        }
    }
    return rank_by_score(candidates, scores, "oracle");
}

std::vector<std::string> retrieve_neighbors(std::span<const double> test_features,
                                            const FeatureTable& train_features,
                                            std::span<const std::string> train_ids, int m) {
    if (m < 1) throw std::invalid_argument("retrieve_neighbors: m must be >= 1");
    if (m > static_cast<int>(train_ids.size()))
        throw std::invalid_argument("retrieve_neighbors: m exceeds train image count");
    double test_norm = 0.0;
    for (double v : test_features) test_norm += v * v;
    test_norm = std::sqrt(test_norm);
    if (test_norm == 0.0) throw std::invalid_argument("zero-norm feature vector");

    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(train_ids.size());
    for (const auto& id : train_ids) {
        std::span<const double> v = train_features.at(id);
        if (v.size() != test_features.size())
            throw std::invalid_argument("feature dimension mismatch");
        double dot = 0.0;
        double norm = 0.0;
        for (size_t i = 0; i < v.size(); ++i) {
            dot += v[i] * test_features[i];
            norm += v[i] * v[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::invalid_argument("zero-norm feature vector");
        scored.emplace_back(dot / (norm * test_norm), id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) out.push_back(scored[static_cast<size_t>(i)].second);
    return out;
}

RankedList consensus_rerank(std::span<const CaptionCandidate> candidates,
                            std::span<const Tokens> neighbor_references, const DfTable& df) {
    if (candidates.empty()) throw std::invalid_argument("consensus_rerank: no candidates");
    if (neighbor_references.empty())
        throw std::invalid_argument("consensus_rerank: empty reference pool");
    std::vector<double> scores(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        const Tokens& c = candidates[i].tokens;
        scores[i] = c.empty() ? 0.0 : cider_d(c, neighbor_references, df);
    }
    return rank_by_score(candidates, scores, "consensus");
}

RankedList likelihood_rank(std::span<const CaptionCandidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("likelihood_rank: no candidates");
    std::vector<double> scores(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) scores[i] = candidates[i].logprob;
    return rank_by_score(candidates, scores, "likelihood");
}

std::string serialize_decode_tsv(std::span<const DecodedImage> images,
                                 const Vocabulary& vocab) {
    std::ostringstream out;
    char buf[40];
    for (const auto& image : images) {
        for (size_t r = 0; r < image.candidates.size(); ++r) {
            const auto& cand = image.candidates[r];
            std::snprintf(buf, sizeof(buf), "%.9g", cand.logprob);
            out << image.image_id << '\t' << r + 1 << '\t' << buf << '\t';
            if (cand.medoid_index >= 0) out << cand.medoid_index;
            else out << '-';
            out << '\t';
            for (size_t i = 0; i < cand.tokens.size(); ++i) {
                if (i) out << ' ';
                out << vocab.word_of(cand.tokens[i]);
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<DecodedImage> parse_decode_tsv(const std::string& text, const Vocabulary& vocab,
                                           const std::string& path) {
    std::vector<DecodedImage> images;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_fields(line, '\t');
        if (cols.size() != 5) throw parse_error(path, lineno, "expected 5 columns");
        CaptionCandidate cand;
        cand.logprob = parse_finite_double(cols[2], path, lineno);
        if (cols[3] == "-") {
            cand.medoid_index = -1;
        } else {
            try {
                cand.medoid_index = std::stoi(cols[3]);
            } catch (const std::exception&) {
                throw parse_error(path, lineno, "bad medoid index '" + cols[3] + "'");
            }
        }
        for (const auto& w : split_ws(cols[4])) cand.tokens.push_back(vocab.id_or_unk(w));
        if (images.empty() || images.back().image_id != cols[0]) {
            images.push_back({cols[0], {}});
        }
        images.back().candidates.push_back(std::move(cand));
    }
    if (images.empty()) throw DataError(path + ": empty decode file");
    return images;
}

} // namespace poscap
