#ifndef POSCAP_TEST_MODELS_HPP
#define POSCAP_TEST_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "poscap/common.hpp"
#include "poscap/decode.hpp"
#include "poscap/seqmodel.hpp"

namespace poscap_test {

// Full-support tabular model with Gaussian logits drawn per context from a
// hash of (model seed, prefix); repeated queries of a context are identical.
class HashedRandomModel : public poscap::ConditionalModel {
public:
    HashedRandomModel(int vocab, uint64_t seed, double sigma)
        : vocab_(vocab), seed_(seed), sigma_(sigma) {}

    int vocab_size() const override { return vocab_; }

    std::vector<double> next_logprobs(const poscap::ModelContext& ctx) const override {
        uint64_t h = seed_ * 0x9e3779b97f4a7c15ull + 0x1234567;
        for (int t : ctx.prefix) h = (h ^ static_cast<uint64_t>(t + 1)) * 0x100000001b3ull;
        poscap::Rng rng(h);
        std::vector<double> logits(static_cast<size_t>(vocab_));
        for (double& v : logits) v = sigma_ * rng.normal();
        double z = poscap::logsumexp(logits);
        for (double& v : logits) v -= z;
        return logits;
    }

private:
    int vocab_;
    uint64_t seed_;
    double sigma_;
};

// Tabular model over an explicit sparse prefix tree with a bounded number of
// terminal sequences. Tokens outside a node's support have probability zero.
class SparseTreeModel : public poscap::ConditionalModel {
public:
    // Builds a random tree whose terminal-sequence count (EOS-finished plus
    // cut at max_len) equals `terminals`, clamped to what the tree shape can
    // host.
    SparseTreeModel(int vocab, int max_len, int terminals, uint64_t seed)
        : vocab_(vocab), max_len_(max_len) {
        fanout_ = std::min(3, vocab - poscap::kNumReserved);
        int budget = std::min(terminals, capacity(0));
        poscap::Rng rng(seed);
        build(std::vector<int>{}, std::max(1, budget), 0, rng);
    }

    int vocab_size() const override { return vocab_; }
    int terminal_count() const { return terminal_count_; }

    std::vector<double> next_logprobs(const poscap::ModelContext& ctx) const override {
        std::vector<int> key(ctx.prefix.begin() + 1, ctx.prefix.end());
        auto it = rows_.find(key);
        if (it == rows_.end()) throw std::invalid_argument("context not in tree");
        return it->second;
    }

private:
    // Most terminals a subtree rooted at this depth can host.
    int capacity(int depth) const {
        if (depth == max_len_) return 1;
        int below = capacity(depth + 1);
        long cap = 1 + static_cast<long>(fanout_) * below;
        return static_cast<int>(std::min(cap, 1000l));
    }

    void build(const std::vector<int>& prefix, int budget, int depth, poscap::Rng& rng) {
        if (depth == max_len_) { // cut leaf: one unfinished terminal
            ++terminal_count_;
            return;
        }
        int child_cap = capacity(depth + 1);
        // Decide whether this node also emits EOS (one terminal).
        bool eos_here;
        if (budget > static_cast<long>(fanout_) * child_cap) {
            eos_here = true; // children alone cannot host the budget
        } else {
            eos_here = rng.uniform() < 0.5;
        }
        int remaining = budget - (eos_here ? 1 : 0);
        std::vector<int> child_tokens;
        std::vector<int> child_budgets;
        if (remaining > 0) {
            int n_min = static_cast<int>((remaining + child_cap - 1) / child_cap);
            int n_max = std::min(fanout_, remaining);
            int n = n_min >= n_max
                        ? n_max
                        : n_min + static_cast<int>(rng.uniform_index(
                                      static_cast<size_t>(n_max - n_min + 1)));
            int real_words = vocab_ - poscap::kNumReserved;
            while (static_cast<int>(child_tokens.size()) < n) {
                int t = poscap::kNumReserved +
                        static_cast<int>(rng.uniform_index(static_cast<size_t>(real_words)));
                if (std::find(child_tokens.begin(), child_tokens.end(), t) ==
                    child_tokens.end())
                    child_tokens.push_back(t);
            }
            child_budgets.assign(child_tokens.size(), 1);
            int extra = remaining - n;
            while (extra > 0) {
                size_t pick = rng.uniform_index(child_budgets.size());
                if (child_budgets[pick] < child_cap) {
                    ++child_budgets[pick];
                    --extra;
                }
            }
        }
        // Random distribution over the node's support.
        std::vector<double> row(static_cast<size_t>(vocab_),
                                -std::numeric_limits<double>::infinity());
        double total = 0.0;
        std::vector<double> mass(child_tokens.size() + (eos_here ? 1 : 0));
        for (double& v : mass) {
            v = 0.05 + rng.uniform();
            total += v;
        }
        size_t mi = 0;
        if (eos_here) {
            row[poscap::kEosId] = std::log(mass[mi++] / total);
            ++terminal_count_;
        }
        for (size_t ci = 0; ci < child_tokens.size(); ++ci)
            row[static_cast<size_t>(child_tokens[ci])] = std::log(mass[mi++] / total);
        rows_[prefix] = std::move(row);
        for (size_t ci = 0; ci < child_tokens.size(); ++ci) {
            std::vector<int> next = prefix;
            next.push_back(child_tokens[ci]);
            build(next, child_budgets[ci], depth + 1, rng);
        }
    }

    int vocab_;
    int max_len_;
    int fanout_ = 1;
    int terminal_count_ = 0;
    std::map<std::vector<int>, std::vector<double>> rows_;
};

// Brute-force enumeration of every terminal sequence (finished by EOS within
// max_len emission steps, or cut unfinished at max_len words), ranked by
// log-probability. Accumulates scores in prefix order so sums are
// bit-identical to the decoder's.
inline std::vector<poscap::Hypothesis> enumerate_terminals(
    const poscap::ConditionalModel& model, const poscap::DecodeRoot& root, int max_len) {
    std::vector<poscap::Hypothesis> out;
    std::vector<int> prefix{poscap::kBosId};
    auto rec = [&](auto&& self, double lp) -> void {
        if (static_cast<int>(prefix.size()) - 1 == max_len) {
            poscap::Hypothesis h;
            h.tokens.assign(prefix.begin() + 1, prefix.end());
            h.logprob = lp;
            h.finished = false;
            out.push_back(std::move(h));
            return;
        }
        poscap::ModelContext ctx{root.features, root.medoid_index, prefix};
        std::vector<double> row = model.next_logprobs(ctx);
        for (int t = 0; t < static_cast<int>(row.size()); ++t) {
            double v = row[static_cast<size_t>(t)];
            if (v == -std::numeric_limits<double>::infinity()) continue;
            if (t == poscap::kEosId) {
                poscap::Hypothesis h;
                h.tokens.assign(prefix.begin() + 1, prefix.end());
                h.logprob = lp + v;
                h.finished = true;
                out.push_back(std::move(h));
            } else {
                prefix.push_back(t);
                self(self, lp + v);
                prefix.pop_back();
            }
        }
    };
    rec(rec, 0.0);
    std::stable_sort(out.begin(), out.end(),
                     [](const poscap::Hypothesis& a, const poscap::Hypothesis& b) {
                         if (a.logprob != b.logprob) return a.logprob > b.logprob;
                         return a.tokens < b.tokens;
                     });
    return out;
}

} // namespace poscap_test

#endif
