#include "poscap/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace poscap {

namespace {

std::string tag_word(int tag, int index) {
    std::string base(TagSet::name_of(tag));
    std::transform(base.begin(), base.end(), base.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return base + std::to_string(index);
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

SynthOutput generate(const SynthSpec& spec) {
    if (spec.images < 1) throw std::invalid_argument("synth: images must be >= 1");
    if (spec.caps_per_image < 1)
        throw std::invalid_argument("synth: captions per image must be >= 1");
    if (spec.words_per_tag < 1) throw std::invalid_argument("synth: words_per_tag must be >= 1");
    if (spec.feature_dim < 1) throw std::invalid_argument("synth: feature_dim must be >= 1");
    if (spec.noise < 0.0) throw std::invalid_argument("synth: noise must be >= 0");
    if (spec.templates.empty()) throw std::invalid_argument("synth: no templates");
    if (spec.train_frac <= 0.0 || spec.train_frac + spec.val_frac >= 1.0 + 1e-12)
        throw std::invalid_argument("synth: bad split fractions");
    for (const auto& tmpl : spec.templates) {
        if (tmpl.empty()) throw std::invalid_argument("synth: empty template");
        for (int t : tmpl)
            if (t <= 0 || t >= TagSet::kNumTags)
                throw std::invalid_argument("synth: template references unknown tag");
    }

    Rng rng(spec.seed);
    size_t n_templates = spec.templates.size();
    std::vector<std::vector<double>> centroids(n_templates);
    for (auto& c : centroids) {
        c.resize(static_cast<size_t>(spec.feature_dim));
        for (double& v : c) v = rng.normal();
    }

    int n_train = std::max(1, static_cast<int>(spec.images * spec.train_frac));
    int n_val = static_cast<int>(spec.images * spec.val_frac);
    std::ostringstream corpus;
    std::ostringstream feats;
    for (int img = 0; img < spec.images; ++img) {
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "img%05d", img);
        std::string id = idbuf;
        const char* split = img < n_train ? "train" : (img < n_train + n_val ? "val" : "test");
        size_t tmpl_idx = static_cast<size_t>(img) % n_templates;
        const auto& tmpl = spec.templates[tmpl_idx];

        feats << id << '\t';
        for (int d = 0; d < spec.feature_dim; ++d) {
            if (d) feats << ' ';
            double v = centroids[tmpl_idx][static_cast<size_t>(d)] + spec.noise * rng.normal();
            feats << format_value(v);
        }
        feats << '\n';

        for (int c = 0; c < spec.caps_per_image; ++c) {
            corpus << id << '\t' << split << '\t';
            for (size_t i = 0; i < tmpl.size(); ++i) {
                if (i) corpus << ' ';
                int word = static_cast<int>(rng.uniform_index(
                    static_cast<size_t>(spec.words_per_tag)));
                corpus << tag_word(tmpl[i], word) << '_' << TagSet::name_of(tmpl[i]);
            }
            corpus << '\n';
        }
    }
    return {corpus.str(), feats.str()};
}

std::vector<std::vector<int>> parse_templates(const std::string& text,
                                              const std::string& path) {
    std::vector<std::vector<int>> templates;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<int> tmpl;
        for (const auto& name : split_ws(line)) {
            int id = TagSet::id_of(name);
            if (id < 0) throw parse_error(path, lineno, "unknown tag '" + name + "'");
            tmpl.push_back(id);
        }
        if (tmpl.empty()) throw parse_error(path, lineno, "empty template");
        templates.push_back(std::move(tmpl));
    }
    if (templates.empty()) throw DataError(path + ": no templates");
    return templates;
}

std::vector<std::vector<int>> default_templates() {
    const char* text =
        "DET NOUN VERB\n"
        "PRON VERB ADV\n"
        "DET ADJ NOUN VERB\n"
        "NOUN VERB DET NOUN\n"
        "PRON VERB DET ADJ NOUN\n"
        "DET ADJ NOUN VERB ADV\n"
        "NUM NOUN VERB ADP NOUN\n"
        "DET NOUN VERB ADP DET NOUN\n"
        "DET NOUN ADP NOUN VERB DET NOUN\n"
        "DET ADJ ADJ NOUN VERB DET ADJ NOUN\n"
        "PRON ADV VERB DET NOUN CONJ DET NOUN\n"
        "DET NOUN VERB PRT VERB DET ADJ NOUN ADP NOUN\n";
    return parse_templates(text, "<builtin>");
}

} // namespace poscap
