#include "poscap/posquant.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace poscap {

TagSequence TagSequence::from_tags(std::span<const int> tags, int max_len) {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    TagSequence seq;
    seq.tags_.assign(static_cast<size_t>(max_len), TagSet::kPadTag);
    bool saw_pad = false;
    for (size_t i = 0; i < tags.size() && i < static_cast<size_t>(max_len); ++i) {
        int t = tags[i];
        if (t < 0 || t >= TagSet::kNumTags) throw std::invalid_argument("tag id out of range");
        if (t == TagSet::kPadTag) {
            saw_pad = true;
        } else if (saw_pad) {
            throw std::invalid_argument("PAD before a non-PAD tag");
        }
        seq.tags_[i] = t;
    }
    return seq;
}

int TagSequence::nonpad_length() const {
    int n = length();
    while (n > 0 && tags_[static_cast<size_t>(n - 1)] == TagSet::kPadTag) --n;
    return n;
}

int hamming_distance(const TagSequence& a, const TagSequence& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("hamming_distance: length mismatch");
    int d = 0;
    for (int i = 0; i < a.length(); ++i)
        if (a.at(i) != b.at(i)) ++d;
    return d;
}

uint64_t MedoidSet::hash() const {
    uint64_t h = fnv1a(std::to_string(max_len));
    return fnv1a(serialize_medoids(*this), h);
}

namespace {

struct UniqueSet {
    std::vector<TagSequence> seqs; // first-appearance order
    std::vector<long> weights;
};

UniqueSet dedupe(std::span<const TagSequence> sequences) {
    UniqueSet u;
    std::map<TagSequence, size_t> seen;
    for (const auto& s : sequences) {
        auto [it, inserted] = seen.try_emplace(s, u.seqs.size());
        if (inserted) {
            u.seqs.push_back(s);
            u.weights.push_back(1);
        } else {
            ++u.weights[it->second];
        }
    }
    return u;
}

long weighted_cost(const UniqueSet& u, const std::vector<size_t>& medoids) {
    long cost = 0;
    for (size_t i = 0; i < u.seqs.size(); ++i) {
        int best = std::numeric_limits<int>::max();
        for (size_t m : medoids) best = std::min(best, hamming_distance(u.seqs[i], u.seqs[m]));
        cost += u.weights[i] * best;
    }
    return cost;
}

// Enumerate all C(n,k) medoid subsets; first minimum wins (lexicographically
// smallest index set).
std::vector<size_t> exhaustive_medoids(const UniqueSet& u, int k, long* out_cost) {
    size_t n = u.seqs.size();
    std::vector<size_t> comb(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) comb[static_cast<size_t>(i)] = static_cast<size_t>(i);
    std::vector<size_t> best = comb;
    long best_cost = weighted_cost(u, comb);
    while (true) {
        int i = k - 1;
        while (i >= 0 && comb[static_cast<size_t>(i)] == n - static_cast<size_t>(k - i)) --i;
        if (i < 0) break;
        ++comb[static_cast<size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            comb[static_cast<size_t>(j)] = comb[static_cast<size_t>(j - 1)] + 1;
        long c = weighted_cost(u, comb);
        if (c < best_cost) {
            best_cost = c;
            best = comb;
        }
    }
    if (out_cost) *out_cost = best_cost;
    return best;
}

// Number of k-subsets, saturating to avoid overflow.
double subset_count(size_t n, int k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) {
        c *= static_cast<double>(n - static_cast<size_t>(i)) / static_cast<double>(i + 1);
        if (c > 1e12) return 1e12;
    }
    return c;
}

std::vector<size_t> farthest_point_seed(const UniqueSet& u, int k, uint64_t seed) {
    Rng rng(seed);
    size_t n = u.seqs.size();
    std::vector<size_t> medoids;
    medoids.push_back(rng.uniform_index(n));
    std::vector<int> min_dist(n, std::numeric_limits<int>::max());
    while (medoids.size() < static_cast<size_t>(k)) {
        size_t last = medoids.back();
        for (size_t i = 0; i < n; ++i)
            min_dist[i] = std::min(min_dist[i], hamming_distance(u.seqs[i], u.seqs[last]));
        size_t far = 0;
        int far_d = -1;
        for (size_t i = 0; i < n; ++i) {
            if (min_dist[i] > far_d) {
                far_d = min_dist[i];
                far = i;
            }
        }
        medoids.push_back(far);
    }
    return medoids;
}

} // namespace

MedoidSet kmedoids(std::span<const TagSequence> sequences, int k, uint64_t seed,
                   int max_iters, std::vector<long>* cost_history) {
    if (sequences.empty()) throw std::invalid_argument("kmedoids: no sequences");
    if (k < 1) throw std::invalid_argument("kmedoids: k must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("kmedoids: max_iters must be >= 1");
    int max_len = sequences[0].length();
    for (const auto& s : sequences)
        if (s.length() != max_len) throw std::invalid_argument("kmedoids: mixed lengths");

    UniqueSet u = dedupe(sequences);
    size_t n = u.seqs.size();
    if (static_cast<size_t>(k) > n)
        throw std::invalid_argument("kmedoids: k exceeds number of distinct sequences (" +
                                    std::to_string(n) + ")");
    if (cost_history) cost_history->clear();

    std::vector<size_t> chosen;
    // Exact search when enumerating every medoid subset is cheaper than
    // iterating; alternation only finds a local optimum.
    constexpr double kExhaustiveBudget = 250000.0;
    if (subset_count(n, k) * static_cast<double>(n) <= kExhaustiveBudget) {
        long cost = 0;
        chosen = exhaustive_medoids(u, k, &cost);
        if (cost_history) cost_history->push_back(cost);
    } else {
        chosen = farthest_point_seed(u, k, seed);
        std::vector<size_t> assign(n);
        auto assign_all = [&]() -> long {
            long cost = 0;
            for (size_t i = 0; i < n; ++i) {
                int best_d = std::numeric_limits<int>::max();
                size_t best_m = 0;
                for (size_t m = 0; m < chosen.size(); ++m) {
                    int d = hamming_distance(u.seqs[i], u.seqs[chosen[m]]);
                    if (d < best_d) {
                        best_d = d;
                        best_m = m;
                    }
                }
                assign[i] = best_m;
                cost += u.weights[i] * best_d;
            }
            return cost;
        };
        long cost = assign_all();
        if (cost_history) cost_history->push_back(cost);
        for (int iter = 0; iter < max_iters; ++iter) {
            // Per cluster, the member minimizing the weighted summed distance.
            std::vector<std::vector<size_t>> clusters(chosen.size());
            for (size_t i = 0; i < n; ++i) clusters[assign[i]].push_back(i);
            std::vector<size_t> next = chosen;
            for (size_t m = 0; m < clusters.size(); ++m) {
                const auto& members = clusters[m];
                if (members.empty()) continue;
                long best_sum = std::numeric_limits<long>::max();
                size_t best_c = members[0];
                for (size_t c : members) {
                    long sum = 0;
                    for (size_t i : members)
                        sum += u.weights[i] * hamming_distance(u.seqs[i], u.seqs[c]);
                    if (sum < best_sum) {
                        best_sum = sum;
                        best_c = c;
                    }
                }
                next[m] = best_c;
            }
            chosen = next;
            long new_cost = assign_all();
            if (cost_history) cost_history->push_back(new_cost);
            if (new_cost == cost) break;
            cost = new_cost;
        }
    }

    MedoidSet set;
    set.max_len = max_len;
    for (size_t m : chosen) set.medoids.push_back(u.seqs[m]);
    return set;
}

Quantized quantize(const TagSequence& t, const MedoidSet& m) {
    if (m.medoids.empty()) throw std::invalid_argument("quantize: empty medoid set");
    Quantized q;
    q.index = 0;
    q.distance = hamming_distance(t, m.medoids[0]);
    for (int i = 1; i < m.k(); ++i) {
        int d = hamming_distance(t, m.medoids[static_cast<size_t>(i)]);
        if (d < q.distance) {
            q.distance = d;
            q.index = i;
        }
    }
    return q;
}

long assignment_cost(std::span<const TagSequence> sequences, const MedoidSet& m) {
    long cost = 0;
    for (const auto& s : sequences) cost += quantize(s, m).distance;
    return cost;
}

TightnessReport tightness_report(const MedoidSet& m, std::span<const TagSequence> sequences) {
    if (sequences.empty()) throw std::invalid_argument("tightness_report: no sequences");
    TightnessReport report;
    report.cluster_sizes.assign(static_cast<size_t>(m.k()), 0);
    std::vector<long> sums(static_cast<size_t>(m.k()), 0);
    for (const auto& s : sequences) {
        Quantized q = quantize(s, m);
        ++report.cluster_sizes[static_cast<size_t>(q.index)];
        sums[static_cast<size_t>(q.index)] += q.distance;
    }
    report.mean_distances.assign(static_cast<size_t>(m.k()), 0.0);
    for (int i = 0; i < m.k(); ++i) {
        size_t idx = static_cast<size_t>(i);
        if (report.cluster_sizes[idx] == 0) {
            report.empty_clusters.push_back(i);
        } else {
            report.mean_distances[idx] =
                static_cast<double>(sums[idx]) / report.cluster_sizes[idx];
        }
    }
    return report;
}

double TightnessReport::fraction_below(double threshold) const {
    int non_empty = 0;
    int below = 0;
    for (size_t i = 0; i < cluster_sizes.size(); ++i) {
        if (cluster_sizes[i] == 0) continue;
        ++non_empty;
        if (mean_distances[i] < threshold) ++below;
    }
    return non_empty == 0 ? 0.0 : static_cast<double>(below) / non_empty;
}

std::string serialize_medoids(const MedoidSet& m) {
    std::ostringstream out;
    for (int i = 0; i < m.k(); ++i) {
        const auto& seq = m.medoids[static_cast<size_t>(i)];
        out << i << '\t';
        int n = seq.nonpad_length();
        for (int j = 0; j < n; ++j) {
            if (j) out << ' ';
            out << TagSet::name_of(seq.at(j));
        }
        out << '\n';
    }
    return out.str();
}

MedoidSet parse_medoids(const std::string& text, int max_len, const std::string& path) {
    MedoidSet set;
    set.max_len = max_len;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    int expected = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_fields(line, '\t');
        if (cols.size() != 2) throw parse_error(path, lineno, "expected 2 columns");
        if (cols[0] != std::to_string(expected))
            throw parse_error(path, lineno, "medoid index out of order: '" + cols[0] + "'");
        auto names = split_ws(cols[1]);
        if (names.empty()) throw parse_error(path, lineno, "empty medoid");
        if (names.size() > static_cast<size_t>(max_len))
            throw parse_error(path, lineno, "medoid longer than max_len");
        std::vector<int> tags;
        for (const auto& name : names) {
            int id = TagSet::id_of(name);
            if (id < 0) throw parse_error(path, lineno, "unknown tag '" + name + "'");
            tags.push_back(id);
        }
        set.medoids.push_back(TagSequence::from_tags(tags, max_len));
        ++expected;
    }
    if (set.medoids.empty()) throw DataError(path + ": empty medoid file");
    return set;
}

MedoidSet load_medoids(const std::string& path, int max_len) {
    return parse_medoids(read_file(path), max_len, path);
}

std::vector<TagSequence> collect_tag_sequences(const Dataset& ds, int max_len) {
    std::vector<TagSequence> out;
    out.reserve(ds.items.size());
    for (const auto& item : ds.items) out.push_back(TagSequence::from_tags(item.tags, max_len));
    return out;
}

} // namespace poscap
