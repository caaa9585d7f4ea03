#include "poscap/corpus.hpp"

#include <algorithm>
#include <sstream>

namespace poscap {

namespace {

const std::array<std::string_view, TagSet::kNumTags> kTagNames = {
    "PAD", "VERB", "NOUN", "PRON", "ADJ", "ADV", "ADP",
    "CONJ", "DET", "NUM", "PRT", "X", "PUNCT"};

} // namespace

int TagSet::id_of(std::string_view name) {
    for (int i = 1; i < kNumTags; ++i)
        if (kTagNames[i] == name) return i;
    return -1;
}

std::string_view TagSet::name_of(int id) {
    if (id < 0 || id >= kNumTags) throw std::invalid_argument("tag id out of range");
    return kTagNames[id];
}

Vocabulary::Vocabulary() {
    for (auto w : kReservedWords) {
        index_.emplace(std::string(w), static_cast<int>(words_.size()));
        words_.emplace_back(w);
    }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> train_captions,
                             int min_count) {
    struct Entry {
        long count = 0;
        long first_seen = 0;
    };
    std::unordered_map<std::string, Entry> freq;
    long pos = 0;
    auto reserved = [](const std::string& w) {
        for (auto r : kReservedWords)
            if (w == r) return true;
        return false;
    };
    for (const auto& caption : train_captions) {
        for (const auto& w : caption) {
            ++pos;
            if (reserved(w)) continue; // reserved ids never collide with corpus words
            auto [it, inserted] = freq.try_emplace(w);
            if (inserted) it->second.first_seen = pos;
            ++it->second.count;
        }
    }
    std::vector<std::pair<std::string, Entry>> order(freq.begin(), freq.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second.count != b.second.count) return a.second.count > b.second.count;
        return a.second.first_seen < b.second.first_seen;
    });
    Vocabulary v;
    for (auto& [word, e] : order) {
        if (e.count < min_count) continue;
        v.index_.emplace(word, static_cast<int>(v.words_.size()));
        v.words_.push_back(word);
    }
    return v;
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
    if (words.size() < kNumReserved) throw DataError("vocabulary word list too short");
    for (size_t i = 0; i < kNumReserved; ++i)
        if (words[i] != kReservedWords[i])
            throw DataError("vocabulary word list does not start with reserved words");
    Vocabulary v;
    for (size_t i = kNumReserved; i < words.size(); ++i) {
        auto [it, inserted] = v.index_.emplace(words[i], static_cast<int>(v.words_.size()));
        if (!inserted) throw DataError("duplicate word in vocabulary list: " + words[i]);
        v.words_.push_back(words[i]);
    }
    return v;
}

int Vocabulary::id_or_unk(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::word_of(int id) const {
    if (id < 0 || id >= size()) throw std::invalid_argument("word id out of range");
    return words_[static_cast<size_t>(id)];
}

uint64_t Vocabulary::hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& w : words_) {
        h = fnv1a(w, h);
        h = fnv1a("\n", h);
    }
    return h;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    throw std::invalid_argument("bad split");
}

const Dataset& Corpus::dataset(Split s) const {
    switch (s) {
        case Split::train: return train;
        case Split::val: return val;
        case Split::test: return test;
    }
    throw std::invalid_argument("bad split");
}

namespace {

struct RawLine {
    std::string image_id;
    Split split;
    std::vector<std::string> words;
    std::vector<int> tags;
};

bool parse_split(const std::string& s, Split* out) {
    if (s == "train") *out = Split::train;
    else if (s == "val") *out = Split::val;
    else if (s == "test") *out = Split::test;
    else return false;
    return true;
}

RawLine parse_line(const std::string& line, const std::string& path, long lineno) {
    auto cols = split_fields(line, '\t');
    if (cols.size() != 3)
        throw parse_error(path, lineno, "expected 3 tab-separated columns, got " +
                                            std::to_string(cols.size()));
    RawLine raw;
    raw.image_id = cols[0];
    if (raw.image_id.empty()) throw parse_error(path, lineno, "empty image id");
    if (!parse_split(cols[1], &raw.split))
        throw parse_error(path, lineno, "unknown split '" + cols[1] + "'");
    auto pairs = split_ws(cols[2]);
    if (pairs.empty()) throw parse_error(path, lineno, "caption has no tokens");
    for (const auto& p : pairs) {
        size_t us = p.rfind('_');
        if (us == std::string::npos || us == 0 || us + 1 == p.size())
            throw parse_error(path, lineno, "token '" + p + "' is not word_TAG");
        std::string word = p.substr(0, us);
        std::string tag = p.substr(us + 1);
        if (word.find('_') != std::string::npos)
            throw parse_error(path, lineno, "underscore inside word '" + word + "'");
        int tag_id = TagSet::id_of(tag);
        if (tag_id < 0) throw parse_error(path, lineno, "unknown tag '" + tag + "'");
        for (size_t r = 0; r < Vocabulary::kReservedWords.size(); ++r) {
            if (word == Vocabulary::kReservedWords[r] && static_cast<int>(r) != kUnkId)
                throw parse_error(path, lineno, "reserved word '" + word + "' in caption");
        }
        raw.words.push_back(std::move(word));
        raw.tags.push_back(tag_id);
    }
    return raw;
}

} // namespace

Corpus parse_corpus(const std::string& text, int min_count, const std::string& path) {
    std::vector<RawLine> lines;
    long lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(parse_line(line, path, lineno));
    }
    if (lines.empty()) throw DataError(path + ": empty corpus");

    std::vector<std::vector<std::string>> train_words;
    for (const auto& raw : lines)
        if (raw.split == Split::train) train_words.push_back(raw.words);
    if (train_words.empty()) throw DataError(path + ": corpus has no train lines");

    Corpus corpus;
    corpus.vocab = Vocabulary::build(train_words, min_count);
    for (auto& raw : lines) {
        TaggedCaption item;
        item.image_id = std::move(raw.image_id);
        item.tags = std::move(raw.tags);
        item.tokens.reserve(raw.words.size());
        for (const auto& w : raw.words) item.tokens.push_back(corpus.vocab.id_or_unk(w));
        switch (raw.split) {
            case Split::train: corpus.train.items.push_back(std::move(item)); break;
            case Split::val: corpus.val.items.push_back(std::move(item)); break;
            case Split::test: corpus.test.items.push_back(std::move(item)); break;
        }
    }
    return corpus;
}

Corpus load_corpus(const std::string& path, int min_count) {
    return parse_corpus(read_file(path), min_count, path);
}

std::string serialize_corpus(const Corpus& corpus) {
    std::ostringstream out;
    auto emit = [&](const Dataset& ds) {
        for (const auto& item : ds.items) {
            out << item.image_id << '\t' << split_name(ds.split) << '\t';
            for (size_t i = 0; i < item.tokens.size(); ++i) {
                if (i) out << ' ';
                out << corpus.vocab.word_of(item.tokens[i]) << '_'
                    << TagSet::name_of(item.tags[i]);
            }
            out << '\n';
        }
    };
    emit(corpus.train);
    emit(corpus.val);
    emit(corpus.test);
    return out.str();
}

void FeatureTable::add(std::string id, std::vector<double> vec, const std::string& path,
                       long line) {
    if (vecs_.empty()) {
        dim_ = vec.size();
    } else if (vec.size() != dim_) {
        throw parse_error(path, line,
                          "feature dimension mismatch: expected " + std::to_string(dim_) +
                              ", got " + std::to_string(vec.size()));
    }
    if (index_.count(id))
        throw parse_error(path, line, "duplicate image id '" + id + "'");
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    vecs_.push_back(std::move(vec));
}

std::span<const double> FeatureTable::at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("no feature vector for image '" + id + "'");
    return vecs_[it->second];
}

FeatureTable parse_features(const std::string& text, const std::string& path) {
    FeatureTable table;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_fields(line, '\t');
        if (cols.size() != 2)
            throw parse_error(path, lineno, "expected 2 tab-separated columns");
        auto fields = split_ws(cols[1]);
        if (fields.empty()) throw parse_error(path, lineno, "empty feature vector");
        std::vector<double> vec;
        vec.reserve(fields.size());
        for (const auto& f : fields) vec.push_back(parse_finite_double(f, path, lineno));
        table.add(cols[0], std::move(vec), path, lineno);
    }
    if (table.size() == 0) throw DataError(path + ": empty feature file");
    return table;
}

FeatureTable load_features(const std::string& path) {
    return parse_features(read_file(path), path);
}

void validate_features(const Corpus& corpus, const FeatureTable& features) {
    for (Split s : {Split::train, Split::val, Split::test}) {
        for (const auto& item : corpus.dataset(s).items) {
            if (!features.contains(item.image_id))
                throw DataError("no feature vector for image '" + item.image_id + "'");
        }
    }
}

} // namespace poscap
