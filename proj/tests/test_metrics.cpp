#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "poscap/metrics.hpp"

using namespace poscap;

namespace {

// Word-level fixtures; ids assigned on first use so tests read naturally.
struct WordIds {
    std::map<std::string, int> ids;
    Tokens operator()(const std::string& sentence) {
        Tokens out;
        std::string word;
        for (char c : sentence + " ") {
            if (c == ' ') {
                if (!word.empty()) {
                    auto [it, inserted] = ids.try_emplace(word, static_cast<int>(ids.size()) + 4);
                    out.push_back(it->second);
                    word.clear();
                }
            } else {
                word.push_back(c);
            }
        }
        return out;
    }
};

// The shared 3-document reference corpus used for the CIDEr fixtures; the
// frozen expected values below were computed with an independent
// implementation of the tf-idf cosine formula.
struct CiderFixture {
    WordIds w;
    std::vector<std::vector<Tokens>> docs;
    DfTable df;

    CiderFixture() {
        docs = {{w("the cat sat on the mat")},
                {w("a dog ran fast"), w("the dog ran")},
                {w("the bird sang")}};
        df = build_df_table(docs);
    }
};

} // namespace

TEST_CASE("bleu") {
    WordIds w;
    SUBCASE("identical candidate scores 1") {
        Tokens c = w("a dog runs fast today");
        std::vector<Tokens> refs{w("the cat sat"), c};
        CHECK(bleu(c, refs, 4) == doctest::Approx(1.0));
    }
    SUBCASE("no shared 4-gram scores exactly 0") {
        Tokens c = w("a b c d e");
        std::vector<Tokens> refs{w("a b c x d e")}; // shares 3-grams but no 4-gram
        CHECK(bleu(c, refs, 4) == 0.0);
    }
    SUBCASE("hand-derived BLEU-3 fixture") {
        // p1 = p2 = p3 = 1, BP = exp(1 - 4/3).
        Tokens c = w("the cat sat");
        std::vector<Tokens> refs{w("the cat sat down")};
        CHECK(bleu(c, refs, 3) == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-12));
        CHECK(bleu(c, refs, 3) == doctest::Approx(0.716531310573789).epsilon(1e-12));
    }
    SUBCASE("clipping caps repeated n-grams") {
        // candidate "the the the" vs ref with two "the": p1 = 2/3.
        Tokens c = w("the the the");
        std::vector<Tokens> refs{w("the cat the")};
        CHECK(bleu(c, refs, 1) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("brevity penalty uses the closest reference length") {
        Tokens c = w("a b c");
        std::vector<Tokens> refs{w("a b c d e f g"), w("a b c d")};
        // closest ref length 4: BP = exp(1 - 4/3)
        CHECK(bleu(c, refs, 1) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));
    }
    SUBCASE("candidate longer than reference has no penalty") {
        Tokens c = w("a b c d");
        std::vector<Tokens> refs{w("a b")};
        CHECK(bleu(c, refs, 1) == doctest::Approx(0.5)); // p1 = 2/4, BP = 1
    }
    SUBCASE("preconditions") {
        Tokens empty;
        Tokens c = w("a");
        std::vector<Tokens> refs{w("a")};
        std::vector<Tokens> norefs;
        CHECK_THROWS_AS(bleu(empty, refs, 4), std::invalid_argument);
        CHECK_THROWS_AS(bleu(c, norefs, 4), std::invalid_argument);
    }
    SUBCASE("invariant under consistent token relabeling") {
        Tokens c = w("a dog ran fast");
        std::vector<Tokens> refs{w("a dog ran home"), w("the dog ran fast today")};
        double before = bleu(c, refs, 4);
        auto relabel = [](const Tokens& t) {
            Tokens out;
            for (int id : t) out.push_back(id * 7 + 1000);
            return out;
        };
        std::vector<Tokens> refs2{relabel(refs[0]), relabel(refs[1])};
        CHECK(bleu(relabel(c), refs2, 4) == doctest::Approx(before).epsilon(1e-15));
    }
}

TEST_CASE("cider_d") {
    CiderFixture fx;
    SUBCASE("identical to the single reference scores 10") {
        CHECK(cider_d(fx.docs[0][0], fx.docs[0], fx.df) ==
              doctest::Approx(10.0).epsilon(1e-9));
    }
    SUBCASE("no shared n-grams scores 0") {
        Tokens c = fx.w("purple elephants juggle quietly");
        CHECK(cider_d(c, fx.docs[0], fx.df) == doctest::Approx(0.0));
    }
    SUBCASE("matches the independently computed tf-idf fixture values") {
        Tokens c1 = fx.w("the cat sat on a mat");
        CHECK(cider_d(c1, fx.docs[0], fx.df) ==
              doctest::Approx(5.819401310833122).epsilon(1e-12));
        Tokens c2 = fx.w("the dog ran fast");
        CHECK(cider_d(c2, fx.docs[1], fx.df) ==
              doctest::Approx(5.425644110213947).epsilon(1e-12));
    }
    SUBCASE("relabeling invariance") {
        Tokens c = fx.w("the cat sat on a mat");
        double before = cider_d(c, fx.docs[0], fx.df);
        auto relabel = [](const Tokens& t) {
            Tokens out;
            for (int id : t) out.push_back(id + 500);
            return out;
        };
        std::vector<std::vector<Tokens>> docs2;
        for (const auto& doc : fx.docs) {
            docs2.push_back({});
            for (const auto& ref : doc) docs2.back().push_back(relabel(ref));
        }
        DfTable df2 = build_df_table(docs2);
        std::vector<Tokens> refs2;
        for (const auto& ref : fx.docs[0]) refs2.push_back(relabel(ref));
        CHECK(cider_d(relabel(c), refs2, df2) == doctest::Approx(before).epsilon(1e-15));
    }
    SUBCASE("empty df table is an error") {
        DfTable empty;
        Tokens c = fx.w("the cat");
        CHECK_THROWS_AS(cider_d(c, fx.docs[0], empty), DataError);
    }
    SUBCASE("df table bounds") {
        CHECK(fx.df.num_docs == 3);
        for (const auto& [ng, d] : fx.df.df) {
            CHECK(d >= 1);
            CHECK(d <= fx.df.num_docs);
        }
    }
}

TEST_CASE("mutual_overlap") {
    WordIds w;
    SUBCASE("identical captions overlap fully") {
        std::vector<Tokens> caps(4, w("a dog runs very fast"));
        CHECK(mutual_overlap(caps) == doctest::Approx(1.0));
    }
    SUBCASE("pairwise disjoint 4-grams give exactly 0") {
        std::vector<Tokens> caps{w("a b c d"), w("e f g h"), w("i j k l")};
        CHECK(mutual_overlap(caps) == 0.0);
    }
    SUBCASE("short captions have no 4-grams, hence 0") {
        std::vector<Tokens> caps{w("a b"), w("a b")};
        CHECK(mutual_overlap(caps) == 0.0);
    }
    SUBCASE("k < 2 is an error") {
        std::vector<Tokens> caps{w("a b c d")};
        CHECK_THROWS_AS(mutual_overlap(caps), std::invalid_argument);
    }
    SUBCASE("permutation invariance") {
        std::vector<Tokens> caps{w("a dog runs very fast"), w("a cat runs very fast"),
                                 w("the bird sang a song")};
        double before = mutual_overlap(caps);
        std::vector<Tokens> shuffled{caps[2], caps[0], caps[1]};
        CHECK(mutual_overlap(shuffled) == doctest::Approx(before).epsilon(1e-15));
    }
    SUBCASE("adding a duplicate never decreases overlap") {
        Rng rng(17);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<Tokens> caps;
            size_t k = 2 + rng.uniform_index(4);
            for (size_t i = 0; i < k; ++i) {
                Tokens t;
                size_t len = 4 + rng.uniform_index(4);
                for (size_t j = 0; j < len; ++j)
                    t.push_back(static_cast<int>(4 + rng.uniform_index(6)));
                caps.push_back(t);
            }
            double before = mutual_overlap(caps);
            std::vector<Tokens> with_dup = caps;
            with_dup.push_back(caps[rng.uniform_index(caps.size())]);
            CHECK(mutual_overlap(with_dup) >= before - 1e-12);
        }
    }
}

TEST_CASE("div_n") {
    WordIds w;
    SUBCASE("one caption of distinct words") {
        std::vector<Tokens> caps{w("a b c d")};
        CHECK(div_n(caps, 1) == doctest::Approx(1.0));
    }
    SUBCASE("two identical captions halve the ratio") {
        std::vector<Tokens> caps{w("a b c d e"), w("a b c d e")};
        CHECK(div_n(caps, 1) == doctest::Approx(0.5));
    }
    SUBCASE("div-1 never exceeds 1") {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Tokens> caps;
            size_t k = 1 + rng.uniform_index(5);
            for (size_t i = 0; i < k; ++i) {
                Tokens t;
                size_t len = 1 + rng.uniform_index(8);
                for (size_t j = 0; j < len; ++j)
                    t.push_back(static_cast<int>(4 + rng.uniform_index(10)));
                caps.push_back(t);
            }
            CHECK(div_n(caps, 1) <= 1.0 + 1e-15);
            CHECK(div_n(caps, 1) > 0.0);
        }
    }
    SUBCASE("bigram counting") {
        std::vector<Tokens> caps{w("a b a b")}; // bigrams: ab, ba, ab -> 2 distinct / 4 words
        CHECK(div_n(caps, 2) == doctest::Approx(0.5));
    }
}

TEST_CASE("novelty and uniqueness") {
    WordIds w;
    std::set<Tokens> train{w("a dog runs"), w("the cat sat")};
    SUBCASE("all copied from train") {
        std::vector<Tokens> caps{w("a dog runs"), w("the cat sat"), w("a dog runs")};
        CHECK(novelty(caps, train) == 0);
    }
    SUBCASE("all novel") {
        std::vector<Tokens> caps{w("a bird sang"), w("dogs sleep")};
        CHECK(novelty(caps, train) == 2);
    }
    SUBCASE("mixed fixture of 5 with 2 train copies") {
        std::vector<Tokens> caps{w("a dog runs"), w("a bird sang"), w("the cat sat"),
                                 w("dogs sleep"), w("cats nap")};
        CHECK(novelty(caps, train) == 3);
    }
    SUBCASE("uniqueness") {
        std::vector<Tokens> same(5, w("a dog runs"));
        CHECK(uniqueness(same) == doctest::Approx(0.2));
        std::vector<Tokens> distinct{w("a"), w("b"), w("c")};
        CHECK(uniqueness(distinct) == doctest::Approx(1.0));
    }
    SUBCASE("duplicates never increase uniqueness") {
        std::vector<Tokens> caps{w("a dog runs"), w("cats nap")};
        double before = uniqueness(caps);
        caps.push_back(caps[0]);
        CHECK(uniqueness(caps) <= before);
    }
}

TEST_CASE("diversity_report bundles the five statistics") {
    WordIds w;
    std::set<Tokens> train{w("a dog runs very fast")};
    std::vector<Tokens> caps{w("a dog runs very fast"), w("the cat sat on mats"),
                             w("the cat sat on mats")};
    DiversityReport r = diversity_report(caps, train);
    CHECK(r.k == 3);
    CHECK(r.uniqueness == doctest::Approx(2.0 / 3.0));
    CHECK(r.novel == 2);
    CHECK(r.div1 == doctest::Approx(10.0 / 15.0));
    CHECK(r.mbleu4 == doctest::Approx(2.0 / 3.0)); // the two copies see each other
}
