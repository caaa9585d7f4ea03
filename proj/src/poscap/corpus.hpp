#ifndef POSCAP_CORPUS_HPP
#define POSCAP_CORPUS_HPP

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poscap/common.hpp"

namespace poscap {

// The 12 universal POS tags plus a reserved PAD tag (id 0).
class TagSet {
public:
    static constexpr int kNumTags = 13;
    static constexpr int kPadTag = 0;

    // Returns -1 for unknown names. PAD is not a valid corpus tag.
    static int id_of(std::string_view name);
    static std::string_view name_of(int id);
};

class Vocabulary {
public:
    static constexpr std::array<std::string_view, kNumReserved> kReservedWords = {
        "<pad>", "<s>", "</s>", "<unk>"};

    Vocabulary();

    // Builds ids from train-split words: descending frequency, ties by first
    // appearance. Words below min_count are dropped (they map to UNK).
    static Vocabulary build(std::span<const std::vector<std::string>> train_captions,
                            int min_count);

    // Reconstructs a vocabulary from its id-ordered word list (first four
    // entries must be the reserved surfaces).
    static Vocabulary from_words(std::span<const std::string> words);

    // Returns kUnkId for out-of-vocabulary words; reserved surface forms map
    // to their reserved ids.
    int id_or_unk(const std::string& word) const;
    const std::string& word_of(int id) const;
    int size() const { return static_cast<int>(words_.size()); }
    uint64_t hash() const;

    bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

struct TaggedCaption {
    std::string image_id;
    std::vector<int> tokens; // word ids, UNK substituted, no reserved ids otherwise
    std::vector<int> tags;   // tag ids, same length, no PAD

    bool operator==(const TaggedCaption&) const = default;
};

enum class Split { train = 0, val = 1, test = 2 };

std::string_view split_name(Split s);

struct Dataset {
    Split split{Split::train};
    std::vector<TaggedCaption> items;

    bool operator==(const Dataset&) const = default;
};

struct Corpus {
    Dataset train{Split::train, {}};
    Dataset val{Split::val, {}};
    Dataset test{Split::test, {}};
    Vocabulary vocab;

    const Dataset& dataset(Split s) const;
    bool operator==(const Corpus&) const = default;
};

// Image id -> dense feature vector, preserving file order.
class FeatureTable {
public:
    void add(std::string id, std::vector<double> vec, const std::string& path, long line);
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    std::span<const double> at(const std::string& id) const;
    size_t dim() const { return dim_; }
    size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
    std::vector<std::vector<double>> vecs_;
    std::unordered_map<std::string, size_t> index_;
    size_t dim_ = 0;
};

// Corpus file: one caption per line, `<image_id>\t<split>\t<word>_<TAG> ...`.
Corpus load_corpus(const std::string& path, int min_count);
Corpus parse_corpus(const std::string& text, int min_count, const std::string& path = "<string>");
std::string serialize_corpus(const Corpus& corpus);

// Feature file: `<image_id>\t<v1> <v2> ... <vd>`.
FeatureTable load_features(const std::string& path);
FeatureTable parse_features(const std::string& text, const std::string& path = "<string>");

// Throws DataError when an item's image id has no feature vector.
void validate_features(const Corpus& corpus, const FeatureTable& features);

} // namespace poscap

#endif
