#ifndef POSCAP_METRICS_HPP
#define POSCAP_METRICS_HPP

#include <map>
#include <set>
#include <span>
#include <vector>

#include "poscap/common.hpp"

namespace poscap {

using Tokens = std::vector<int>;

// Document frequencies of n-grams over a reference corpus; one document is
// one image's reference set.
struct DfTable {
    long num_docs = 0;
    std::map<Tokens, long> df;

    double idf(const Tokens& ngram) const;
};

DfTable build_df_table(std::span<const std::vector<Tokens>> documents, int n_max = 4);

// Modified n-gram precision BLEU with uniform weights and the closest-length
// brevity penalty; zero when any precision is zero (no smoothing).
double bleu(const Tokens& candidate, std::span<const Tokens> references, int n_max);

// CIDEr-D: clipped tf-idf cosine per n, Gaussian length penalty, averaged
// over references and n, scaled by 10.
double cider_d(const Tokens& candidate, std::span<const Tokens> references,
               const DfTable& df, double sigma = 6.0, int n_max = 4);

// Mean BLEU-4 of each caption against the other k-1 (mBleu-4). k >= 2.
double mutual_overlap(std::span<const Tokens> captions);

// Distinct n-grams across the caption set over total words generated.
double div_n(std::span<const Tokens> captions, int n);

// Captions whose exact token sequence does not occur in the train set.
long novelty(std::span<const Tokens> captions, const std::set<Tokens>& train_sentences);

// Distinct token sequences over k.
double uniqueness(std::span<const Tokens> captions);

struct DiversityReport {
    double uniqueness = 0.0;
    long novel = 0;
    double mbleu4 = 0.0; // NaN when k < 2
    double div1 = 0.0;
    double div2 = 0.0;
    int k = 0;
};

DiversityReport diversity_report(std::span<const Tokens> captions,
                                 const std::set<Tokens>& train_sentences);

} // namespace poscap

#endif
