#ifndef POSCAP_DECODE_HPP
#define POSCAP_DECODE_HPP

#include <optional>
#include <span>
#include <vector>

#include "poscap/posclassify.hpp"
#include "poscap/seqmodel.hpp"

namespace poscap {

// A partial decoded sequence. tokens holds emitted words (no BOS/EOS); a
// finished hypothesis has emitted EOS and is never extended.
struct Hypothesis {
    std::vector<int> tokens;
    double logprob = 0.0;
    bool finished = false;

    bool operator==(const Hypothesis&) const = default;
};

struct DecodeConfig {
    int k = 1;
    int max_len = 20;     // maximum emission steps (words or EOS) per hypothesis
    double lambda = 0.0;  // diverse beam search penalty weight
};

struct DecodeStats {
    long topk_ops = 0;     // per-beam sorted top-k selections
    long merge_ops = 0;    // k-way merge invocations
    long argmax_ops = 0;   // single-max selections (greedy-style steps)
    long model_evals = 0;  // next_logprobs calls
    double seconds = 0.0;
};

// Root of the decoding context: image features plus an optional POS condition.
struct DecodeRoot {
    std::span<const double> features;
    std::optional<int> medoid_index;
};

// One candidate extension produced by expand_topk. token is -1 when a
// finished hypothesis passes through unchanged.
struct BeamCandidate {
    double score = 0.0;
    int beam = 0;
    int token = -1;
};

std::pair<Hypothesis, DecodeStats> greedy_decode(const ConditionalModel& model,
                                                 const DecodeRoot& root,
                                                 const DecodeConfig& config);

// For each unfinished beam, its k best (score, token) extensions sorted by
// descending score (ties by token id). Finished beams pass through as
// singletons.
std::vector<std::vector<BeamCandidate>> expand_topk(const ConditionalModel& model,
                                                    std::span<const Hypothesis> beams,
                                                    const DecodeRoot& root, int k,
                                                    DecodeStats* stats);

// Global best-k across per-beam sorted candidate lists; ties by (beam index,
// token id). Throws if an input list is not sorted.
std::vector<BeamCandidate> merge(std::span<const std::vector<BeamCandidate>> lists, int k,
                                 DecodeStats* stats);

std::pair<std::vector<Hypothesis>, DecodeStats> beam_search(const ConditionalModel& model,
                                                            const DecodeRoot& root,
                                                            const DecodeConfig& config);

// Group size 1: k greedy groups per time step, each penalized by
// lambda * (times earlier groups chose that token at this position).
// Hypotheses are returned in group order; group 1 is plain greedy.
std::pair<std::vector<Hypothesis>, DecodeStats> diverse_beam_search(
    const ConditionalModel& model, const DecodeRoot& root, const DecodeConfig& config);

enum class PosSelect { top_posterior, sample };

struct PosHypothesis {
    Hypothesis hyp;
    int medoid_index = -1;
};

// One greedy decode per selected POS condition; no top-k or merge operations.
std::pair<std::vector<PosHypothesis>, DecodeStats> pos_guided_decode(
    const TabularCaptionModel& model, const PosClassifier& classifier,
    std::span<const double> features, const DecodeConfig& config,
    PosSelect select = PosSelect::top_posterior, uint64_t seed = 0);

} // namespace poscap

#endif
