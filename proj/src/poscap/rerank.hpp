#ifndef POSCAP_RERANK_HPP
#define POSCAP_RERANK_HPP

#include <span>
#include <string>
#include <vector>

#include "poscap/corpus.hpp"
#include "poscap/metrics.hpp"

namespace poscap {

struct CaptionCandidate {
    Tokens tokens;
    double logprob = 0.0;
    int medoid_index = -1; // -1 when not POS-decoded

    bool operator==(const CaptionCandidate&) const = default;
};

struct RankedEntry {
    CaptionCandidate candidate;
    double score = 0.0;
    int rank = 0; // 1-based, contiguous
};

struct RankedList {
    std::string method;
    std::vector<RankedEntry> entries;
};

enum class RerankMetric { bleu1, bleu2, bleu3, bleu4, cider };

RerankMetric parse_metric(const std::string& name); // throws on unknown names

// Candidates sorted by metric score against the true references; ties by
// likelihood, then token order.
RankedList oracle_rerank(std::span<const CaptionCandidate> candidates,
                         std::span<const Tokens> references, RerankMetric metric,
                         const DfTable* df = nullptr);

// Top-m train image ids by cosine similarity; ties by image id.
std::vector<std::string> retrieve_neighbors(std::span<const double> test_features,
                                            const FeatureTable& train_features,
                                            std::span<const std::string> train_ids, int m);

// Candidates sorted by CIDEr-D against the pooled neighbor references.
RankedList consensus_rerank(std::span<const CaptionCandidate> candidates,
                            std::span<const Tokens> neighbor_references, const DfTable& df);

// Decoder log-probability ranking.
RankedList likelihood_rank(std::span<const CaptionCandidate> candidates);

// Decode TSV: `<image_id>\t<rank>\t<logprob>\t<medoid_index|->\t<caption>`,
// candidates grouped per image in rank order.
struct DecodedImage {
    std::string image_id;
    std::vector<CaptionCandidate> candidates;
};

std::string serialize_decode_tsv(std::span<const DecodedImage> images,
                                 const Vocabulary& vocab);
std::vector<DecodedImage> parse_decode_tsv(const std::string& text, const Vocabulary& vocab,
                                           const std::string& path = "<string>");

} // namespace poscap

#endif
