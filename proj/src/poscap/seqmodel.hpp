#ifndef POSCAP_SEQMODEL_HPP
#define POSCAP_SEQMODEL_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poscap/corpus.hpp"
#include "poscap/posquant.hpp"

namespace poscap {

// Everything a next-word distribution may condition on: image features, an
// optional quantized POS sequence (by medoid index) and the decoded prefix.
// The prefix starts with BOS; the word position equals the prefix length.
struct ModelContext {
    std::span<const double> features;
    std::optional<int> medoid_index;
    std::span<const int> prefix;

    int position() const { return static_cast<int>(prefix.size()); }
};

// Next-token log-probability contract over a fixed vocabulary. Entries are
// finite or -inf; the distribution sums to 1 in probability space.
class ConditionalModel {
public:
    virtual ~ConditionalModel() = default;
    virtual int vocab_size() const = 0;
    virtual std::vector<double> next_logprobs(const ModelContext& ctx) const = 0;
};

// Sum of per-step log-probabilities over tokens; a trailing EOS step is
// included when present. Throws on token ids outside the vocabulary.
double sequence_logprob(const ConditionalModel& model, std::span<const double> features,
                        std::optional<int> medoid_index, std::span<const int> tokens);

struct TrainConfig {
    double alpha = 0.1;
    int buckets = 8;
    uint64_t seed = 1;
    int max_len = 20;
};

// Add-alpha smoothed count model over contexts
// (image bucket, medoid index?, tag at position?, previous word).
// Unseen contexts back off: drop bucket, then previous word, then tag, then
// everything. Under POS conditioning, positions past the medoid's non-PAD
// length put all probability on EOS.
class TabularCaptionModel : public ConditionalModel {
public:
    int vocab_size() const override { return vocab_.size(); }
    std::vector<double> next_logprobs(const ModelContext& ctx) const override;

    bool pos_conditioned() const { return medoids_.has_value(); }
    const Vocabulary& vocab() const { return vocab_; }
    const MedoidSet& medoids() const;
    int max_len() const { return config_.max_len; }
    double alpha() const { return config_.alpha; }
    uint64_t medoid_hash() const;
    int bucket_of(std::span<const double> features) const;

    std::string to_json() const;
    static TabularCaptionModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static TabularCaptionModel load(const std::string& path);

private:
    friend TabularCaptionModel train_mle(const Corpus&, const FeatureTable&,
                                         const MedoidSet*, const TrainConfig&);

    struct Row {
        long total = 0;
        std::map<int, long> counts; // next word id -> count
    };

    std::vector<double> distribution(const Row& row) const;

    Vocabulary vocab_;
    TrainConfig config_;
    std::optional<MedoidSet> medoids_;
    std::vector<std::vector<double>> bucket_dirs_; // buckets x feature dim
    std::map<uint64_t, Row> tables_;               // packed context key -> counts
};

// Maximum-likelihood counting over the train split. When medoids are given,
// each item's tag sequence is quantized first and the quantized sequence's
// per-position tag conditions emission.
TabularCaptionModel train_mle(const Corpus& corpus, const FeatureTable& features,
                              const MedoidSet* medoids, const TrainConfig& config);

} // namespace poscap

#endif
