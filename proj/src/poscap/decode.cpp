#include "poscap/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

namespace poscap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> prefix_of(const Hypothesis& h) {
    std::vector<int> prefix;
    prefix.reserve(h.tokens.size() + 1);
    prefix.push_back(kBosId);
    prefix.insert(prefix.end(), h.tokens.begin(), h.tokens.end());
    return prefix;
}

Hypothesis run_greedy(const ConditionalModel& model, const DecodeRoot& root, int max_len,
                      DecodeStats& stats) {
    Hypothesis h;
    std::vector<int> prefix{kBosId};
    for (int step = 0; step < max_len; ++step) {
        ModelContext ctx{root.features, root.medoid_index, prefix};
        std::vector<double> lp = model.next_logprobs(ctx);
        ++stats.model_evals;
        int best = 0;
        for (int t = 1; t < static_cast<int>(lp.size()); ++t)
            if (lp[static_cast<size_t>(t)] > lp[static_cast<size_t>(best)]) best = t;
        ++stats.argmax_ops;
        h.logprob += lp[static_cast<size_t>(best)];
        if (best == kEosId) {
            h.finished = true;
            break;
        }
        h.tokens.push_back(best);
        prefix.push_back(best);
    }
    return h;
}

} // namespace

std::pair<Hypothesis, DecodeStats> greedy_decode(const ConditionalModel& model,
                                                 const DecodeRoot& root,
                                                 const DecodeConfig& config) {
    if (config.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    DecodeStats stats;
    auto start = Clock::now();
    Hypothesis h = run_greedy(model, root, config.max_len, stats);
    stats.seconds = elapsed_seconds(start);
    return {std::move(h), stats};
}

std::vector<std::vector<BeamCandidate>> expand_topk(const ConditionalModel& model,
                                                    std::span<const Hypothesis> beams,
                                                    const DecodeRoot& root, int k,
                                                    DecodeStats* stats) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::vector<std::vector<BeamCandidate>> out;
    out.reserve(beams.size());
    for (size_t bi = 0; bi < beams.size(); ++bi) {
        const Hypothesis& beam = beams[bi];
        if (beam.finished) {
            out.push_back({BeamCandidate{beam.logprob, static_cast<int>(bi), -1}});
            continue;
        }
        std::vector<int> prefix = prefix_of(beam);
        ModelContext ctx{root.features, root.medoid_index, prefix};
        std::vector<double> lp = model.next_logprobs(ctx);
        if (stats) ++stats->model_evals;
        std::vector<BeamCandidate> cands;
        cands.reserve(lp.size());
        for (int t = 0; t < static_cast<int>(lp.size()); ++t) {
            double s = lp[static_cast<size_t>(t)];
            if (s == kNegInf) continue; // impossible extension
            cands.push_back(BeamCandidate{beam.logprob + s, static_cast<int>(bi), t});
        }
        std::sort(cands.begin(), cands.end(), [](const BeamCandidate& a, const BeamCandidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.token < b.token;
        });
        if (cands.size() > static_cast<size_t>(k)) cands.resize(static_cast<size_t>(k));
        if (stats) ++stats->topk_ops;
        out.push_back(std::move(cands));
    }
    return out;
}

std::vector<BeamCandidate> merge(std::span<const std::vector<BeamCandidate>> lists, int k,
                                 DecodeStats* stats) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    for (const auto& list : lists) {
        for (size_t i = 1; i < list.size(); ++i)
            if (list[i - 1].score < list[i].score)
                throw std::invalid_argument("merge: input list not sorted");
    }
    // Merging k sorted arrays with a heap over the current heads.
    struct Head {
        double score;
        int beam;
        int token;
        size_t list;
        size_t pos;
    };
    auto worse = [](const Head& a, const Head& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.beam != b.beam) return a.beam > b.beam;
        return a.token > b.token;
    };
    std::priority_queue<Head, std::vector<Head>, decltype(worse)> heap(worse);
    for (size_t li = 0; li < lists.size(); ++li)
        if (!lists[li].empty())
            heap.push({lists[li][0].score, lists[li][0].beam, lists[li][0].token, li, 0});
    std::vector<BeamCandidate> out;
    while (!heap.empty() && out.size() < static_cast<size_t>(k)) {
        Head h = heap.top();
        heap.pop();
        out.push_back(BeamCandidate{h.score, h.beam, h.token});
        size_t next = h.pos + 1;
        if (next < lists[h.list].size()) {
            const BeamCandidate& c = lists[h.list][next];
            heap.push({c.score, c.beam, c.token, h.list, next});
        }
    }
    if (stats) ++stats->merge_ops;
    return out;
}

std::pair<std::vector<Hypothesis>, DecodeStats> beam_search(const ConditionalModel& model,
                                                            const DecodeRoot& root,
                                                            const DecodeConfig& config) {
    if (config.k < 1) throw std::invalid_argument("k must be >= 1");
    if (config.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    DecodeStats stats;
    auto start = Clock::now();

    std::vector<Hypothesis> beams{Hypothesis{}};
    for (int step = 0; step < config.max_len; ++step) {
        bool all_finished = true;
        for (const auto& b : beams)
            if (!b.finished) all_finished = false;
        if (all_finished) break;

        auto expanded = expand_topk(model, beams, root, config.k, &stats);
        auto merged = merge(expanded, config.k, &stats);
        std::vector<Hypothesis> next;
        next.reserve(merged.size());
        for (const auto& cand : merged) {
            const Hypothesis& parent = beams[static_cast<size_t>(cand.beam)];
            if (cand.token < 0) {
                next.push_back(parent); // finished hypothesis keeps its slot
            } else {
                Hypothesis h = parent;
                h.logprob = cand.score;
                if (cand.token == kEosId) {
                    h.finished = true;
                } else {
                    h.tokens.push_back(cand.token);
                }
                next.push_back(std::move(h));
            }
        }
        beams = std::move(next);
        if (beams.empty()) break;
    }
    stats.seconds = elapsed_seconds(start);
    return {std::move(beams), stats};
}

std::pair<std::vector<Hypothesis>, DecodeStats> diverse_beam_search(
    const ConditionalModel& model, const DecodeRoot& root, const DecodeConfig& config) {
    if (config.k < 1) throw std::invalid_argument("k must be >= 1");
    if (config.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (config.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    DecodeStats stats;
    auto start = Clock::now();

    std::vector<Hypothesis> groups(static_cast<size_t>(config.k));
    for (int step = 0; step < config.max_len; ++step) {
        bool any_active = false;
        std::unordered_map<int, int> chosen_here; // token -> times picked at this position
        for (auto& group : groups) {
            if (group.finished) continue;
            any_active = true;
            std::vector<int> prefix = prefix_of(group);
            ModelContext ctx{root.features, root.medoid_index, prefix};
            std::vector<double> lp = model.next_logprobs(ctx);
            ++stats.model_evals;
            int best = -1;
            double best_score = kNegInf;
            for (int t = 0; t < static_cast<int>(lp.size()); ++t) {
                double raw = lp[static_cast<size_t>(t)];
                if (raw == kNegInf) continue;
                auto it = chosen_here.find(t);
                double score = raw - config.lambda * (it == chosen_here.end() ? 0 : it->second);
                if (score > best_score) {
                    best_score = score;
                    best = t;
                }
            }
            ++stats.argmax_ops;
            if (best < 0) { // no possible extension; freeze as finished
                group.finished = true;
                continue;
            }
            group.logprob += lp[static_cast<size_t>(best)];
            ++chosen_here[best];
            if (best == kEosId) {
                group.finished = true;
            } else {
                group.tokens.push_back(best);
            }
        }
        if (!any_active) break;
    }
    stats.seconds = elapsed_seconds(start);
    return {std::move(groups), stats};
}

std::pair<std::vector<PosHypothesis>, DecodeStats> pos_guided_decode(
    const TabularCaptionModel& model, const PosClassifier& classifier,
    std::span<const double> features, const DecodeConfig& config, PosSelect select,
    uint64_t seed) {
    if (!model.pos_conditioned())
        throw std::invalid_argument("pos_guided_decode requires a POS-conditioned model");
    if (classifier.medoid_hash != model.medoid_hash())
        throw std::invalid_argument(
            "classifier/medoid-set mismatch: classifier was trained against a different "
            "medoid set");
    if (config.max_len < 1) throw std::invalid_argument("max_len must be >= 1");

    DecodeStats stats;
    auto start = Clock::now();
    std::vector<int> conditions;
    if (select == PosSelect::top_posterior) {
        conditions = topk_conditions(classifier, features, config.k);
    } else {
        Rng rng(seed);
        conditions = sample_conditions(classifier, features, config.k, rng);
    }
    std::vector<PosHypothesis> out;
    out.reserve(conditions.size());
    for (int medoid : conditions) {
        DecodeRoot root{features, medoid};
        PosHypothesis ph;
        ph.medoid_index = medoid;
        ph.hyp = run_greedy(model, root, config.max_len, stats);
        out.push_back(std::move(ph));
    }
    stats.seconds = elapsed_seconds(start);
    return {std::move(out), stats};
}

} // namespace poscap
