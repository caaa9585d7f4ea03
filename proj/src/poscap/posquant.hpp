#ifndef POSCAP_POSQUANT_HPP
#define POSCAP_POSQUANT_HPP

#include <span>
#include <string>
#include <vector>

#include "poscap/common.hpp"
#include "poscap/corpus.hpp"

namespace poscap {

// A POS tag sequence padded with PAD to a fixed length. PAD never precedes a
// non-PAD tag.
class TagSequence {
public:
    TagSequence() = default;

    // Truncates sequences longer than max_len, pads shorter ones.
    static TagSequence from_tags(std::span<const int> tags, int max_len);

    int length() const { return static_cast<int>(tags_.size()); }
    int nonpad_length() const;
    int at(int i) const { return tags_[static_cast<size_t>(i)]; }
    std::span<const int> tags() const { return tags_; }

    bool operator==(const TagSequence&) const = default;
    bool operator<(const TagSequence& other) const { return tags_ < other.tags_; }

private:
    std::vector<int> tags_;
};

struct MedoidSet {
    std::vector<TagSequence> medoids; // pairwise distinct members of the input set
    int max_len = 0;

    int k() const { return static_cast<int>(medoids.size()); }
    uint64_t hash() const;
};

struct Quantized {
    int index = 0;
    int distance = 0;
};

// Count of positions with differing tag ids. Throws on length mismatch.
int hamming_distance(const TagSequence& a, const TagSequence& b);

// Alternating k-medoids under hamming distance with greedy farthest-point
// seeding. Tiny instances (all C(n,K) medoid subsets cheaper than iterating)
// are solved exactly. Deterministic for a fixed seed. cost_history, when
// given, receives the total assignment cost after seeding and after every
// iteration.
MedoidSet kmedoids(std::span<const TagSequence> sequences, int k, uint64_t seed,
                   int max_iters, std::vector<long>* cost_history = nullptr);

// Nearest medoid, ties broken by lowest index.
Quantized quantize(const TagSequence& t, const MedoidSet& m);

long assignment_cost(std::span<const TagSequence> sequences, const MedoidSet& m);

struct TightnessReport {
    std::vector<int> cluster_sizes;        // size k
    std::vector<double> mean_distances;    // size k; meaningful for non-empty clusters
    std::vector<int> empty_clusters;       // medoid indices with no assigned sequence

    double fraction_below(double threshold) const;
};

TightnessReport tightness_report(const MedoidSet& m, std::span<const TagSequence> sequences);

// TSV: `<index>\t<TAG> <TAG> ...`, trailing PAD omitted.
std::string serialize_medoids(const MedoidSet& m);
MedoidSet parse_medoids(const std::string& text, int max_len,
                        const std::string& path = "<string>");
MedoidSet load_medoids(const std::string& path, int max_len);

// All tag sequences of a corpus split, padded/truncated to max_len.
std::vector<TagSequence> collect_tag_sequences(const Dataset& ds, int max_len);

} // namespace poscap

#endif
