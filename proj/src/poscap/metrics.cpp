#include "poscap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poscap {

namespace {

std::map<Tokens, long> ngram_counts(const Tokens& tokens, int n) {
    std::map<Tokens, long> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i)
        ++counts[Tokens(tokens.begin() + static_cast<long>(i),
                        tokens.begin() + static_cast<long>(i) + n)];
    return counts;
}

// Reference length closest to the candidate length; ties go to the shorter.
long closest_ref_length(std::span<const Tokens> references, long clen) {
    long best = static_cast<long>(references[0].size());
    for (const auto& r : references) {
        long rl = static_cast<long>(r.size());
        long d_new = std::labs(rl - clen);
        long d_old = std::labs(best - clen);
        if (d_new < d_old || (d_new == d_old && rl < best)) best = rl;
    }
    return best;
}

} // namespace

double bleu(const Tokens& candidate, std::span<const Tokens> references, int n_max) {
    if (candidate.empty()) throw std::invalid_argument("bleu: empty candidate");
    if (references.empty()) throw std::invalid_argument("bleu: no references");
    if (n_max < 1) throw std::invalid_argument("bleu: n_max must be >= 1");

    double log_prec_sum = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        auto cand = ngram_counts(candidate, n);
        std::map<Tokens, long> max_ref;
        for (const auto& r : references)
            for (const auto& [ng, c] : ngram_counts(r, n))
                max_ref[ng] = std::max(max_ref[ng], c);
        long total = 0;
        long clipped = 0;
        for (const auto& [ng, c] : cand) {
            total += c;
            auto it = max_ref.find(ng);
            if (it != max_ref.end()) clipped += std::min(c, it->second);
        }
        if (total == 0 || clipped == 0) return 0.0;
        log_prec_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    }
    long clen = static_cast<long>(candidate.size());
    long rlen = closest_ref_length(references, clen);
    double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(rlen) / clen));
    return bp * std::exp(log_prec_sum / n_max);
}

double DfTable::idf(const Tokens& ngram) const {
    auto it = df.find(ngram);
    long d = it == df.end() ? 0 : it->second;
    return std::log(static_cast<double>(num_docs) / static_cast<double>(std::max(1l, d)));
}

DfTable build_df_table(std::span<const std::vector<Tokens>> documents, int n_max) {
    if (documents.empty()) throw std::invalid_argument("build_df_table: no documents");
    DfTable table;
    table.num_docs = static_cast<long>(documents.size());
    for (const auto& doc : documents) {
        std::set<Tokens> seen;
        for (const auto& ref : doc)
            for (int n = 1; n <= n_max; ++n)
                for (const auto& [ng, c] : ngram_counts(ref, n)) seen.insert(ng);
        for (const auto& ng : seen) ++table.df[ng];
    }
    return table;
}

double cider_d(const Tokens& candidate, std::span<const Tokens> references,
               const DfTable& df, double sigma, int n_max) {
    if (candidate.empty()) throw std::invalid_argument("cider_d: empty candidate");
    if (references.empty()) throw std::invalid_argument("cider_d: no references");
    if (df.num_docs <= 0 || df.df.empty()) throw DataError("cider_d: empty df table");

    // tf-idf vector per n-gram order: raw count times idf.
    auto vectorize = [&](const Tokens& s) {
        std::vector<std::map<Tokens, double>> vec(static_cast<size_t>(n_max));
        std::vector<double> norm(static_cast<size_t>(n_max), 0.0);
        for (int n = 1; n <= n_max; ++n) {
            for (const auto& [ng, c] : ngram_counts(s, n)) {
                double v = static_cast<double>(c) * df.idf(ng);
                vec[static_cast<size_t>(n - 1)][ng] = v;
                norm[static_cast<size_t>(n - 1)] += v * v;
            }
            norm[static_cast<size_t>(n - 1)] = std::sqrt(norm[static_cast<size_t>(n - 1)]);
        }
        return std::make_pair(vec, norm);
    };

    auto [cvec, cnorm] = vectorize(candidate);
    double score = 0.0;
    for (const auto& ref : references) {
        auto [rvec, rnorm] = vectorize(ref);
        double per_ref = 0.0;
        for (int n = 0; n < n_max; ++n) {
            size_t ni = static_cast<size_t>(n);
            double dot = 0.0;
            for (const auto& [ng, cv] : cvec[ni]) {
                auto it = rvec[ni].find(ng);
                if (it == rvec[ni].end()) continue;
                dot += std::min(cv, it->second) * it->second; // count clipping
            }
            double sim = 0.0;
            if (cnorm[ni] > 0.0 && rnorm[ni] > 0.0) sim = dot / (cnorm[ni] * rnorm[ni]);
            double delta = static_cast<double>(candidate.size()) -
                           static_cast<double>(ref.size());
            per_ref += sim * std::exp(-(delta * delta) / (2.0 * sigma * sigma));
        }
        score += per_ref / n_max;
    }
    return 10.0 * score / static_cast<double>(references.size());
}

double mutual_overlap(std::span<const Tokens> captions) {
    if (captions.size() < 2)
        throw std::invalid_argument("mutual_overlap requires at least 2 captions");
    double sum = 0.0;
    std::vector<Tokens> others;
    for (size_t j = 0; j < captions.size(); ++j) {
        others.clear();
        for (size_t i = 0; i < captions.size(); ++i)
            if (i != j) others.push_back(captions[i]);
        sum += bleu(captions[j], others, 4);
    }
    return sum / static_cast<double>(captions.size());
}

double div_n(std::span<const Tokens> captions, int n) {
    if (captions.empty()) throw std::invalid_argument("div_n: no captions");
    if (n < 1) throw std::invalid_argument("div_n: n must be >= 1");
    std::set<Tokens> distinct;
    long total_words = 0;
    for (const auto& c : captions) {
        total_words += static_cast<long>(c.size());
        for (const auto& [ng, cnt] : ngram_counts(c, n)) distinct.insert(ng);
    }
    if (total_words == 0) throw std::invalid_argument("div_n: captions have no words");
    return static_cast<double>(distinct.size()) / static_cast<double>(total_words);
}

long novelty(std::span<const Tokens> captions, const std::set<Tokens>& train_sentences) {
    long count = 0;
    for (const auto& c : captions)
        if (!train_sentences.count(c)) ++count;
    return count;
}

double uniqueness(std::span<const Tokens> captions) {
    if (captions.empty()) throw std::invalid_argument("uniqueness: no captions");
    std::set<Tokens> distinct(captions.begin(), captions.end());
    return static_cast<double>(distinct.size()) / static_cast<double>(captions.size());
}

DiversityReport diversity_report(std::span<const Tokens> captions,
                                 const std::set<Tokens>& train_sentences) {
    DiversityReport r;
    r.k = static_cast<int>(captions.size());
    r.uniqueness = uniqueness(captions);
    r.novel = novelty(captions, train_sentences);
    r.mbleu4 = captions.size() >= 2 ? mutual_overlap(captions)
                                    : std::numeric_limits<double>::quiet_NaN();
    r.div1 = div_n(captions, 1);
    r.div2 = div_n(captions, 2);
    return r;
}

} // namespace poscap
