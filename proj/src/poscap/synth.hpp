#ifndef POSCAP_SYNTH_HPP
#define POSCAP_SYNTH_HPP

#include <string>
#include <vector>

#include "poscap/common.hpp"
#include "poscap/corpus.hpp"

namespace poscap {

// Seeded synthetic corpus generator. Each image gets a latent POS template;
// its captions realize that template with per-tag word choices, and its
// feature vector is the template centroid plus Gaussian noise.
struct SynthSpec {
    uint64_t seed = 1;
    int images = 100;
    int caps_per_image = 5;
    int words_per_tag = 20;
    int feature_dim = 16;
    double noise = 0.1;
    double train_frac = 0.8;
    double val_frac = 0.1;
    std::vector<std::vector<int>> templates; // tag-id sequences
};

struct SynthOutput {
    std::string corpus_text;
    std::string features_text;
};

SynthOutput generate(const SynthSpec& spec);

// One template per line, tag names separated by spaces.
std::vector<std::vector<int>> parse_templates(const std::string& text,
                                              const std::string& path = "<string>");

// A varied built-in inventory (lengths 3..10) used by fixtures and the
// benchmark defaults.
std::vector<std::vector<int>> default_templates();

} // namespace poscap

#endif
