#ifndef POSCAP_BENCHMARK_HPP
#define POSCAP_BENCHMARK_HPP

#include <map>
#include <string>

#include "json.hpp"

namespace poscap {

// Flat key=value configuration ('#' starts a comment line).
//
// Required: corpus=, features=.
// Optional artifacts (built from the corpus when absent):
//   medoids=, model=, pos_model=, classifier=
// Experiment keys:
//   split=test strategies=beam,pos ks=10 max_len=20 lambda=0.5 seed=1
//   min_count=1 alpha=0.1 buckets=8 k_medoids=16 cluster_iters=50
//   classifier_lr=0.5 classifier_epochs=300 rerank_m=16 pos_select=top
struct BenchmarkConfig {
    std::map<std::string, std::string> values;

    static BenchmarkConfig parse(const std::string& text,
                                 const std::string& path = "<string>");
    static BenchmarkConfig load(const std::string& path);

    std::string get(const std::string& key, const std::string& fallback) const;
    bool has(const std::string& key) const { return values.count(key) > 0; }
};

// Runs every configured strategy at every configured k over the chosen split.
// Caption outputs and all non-timing fields are deterministic for a fixed
// config; timing fields come from a monotonic clock.
nlohmann::ordered_json run_benchmark(const BenchmarkConfig& config);

// Tabular rendering of the report (one row per strategy and k).
std::string benchmark_tsv(const nlohmann::ordered_json& report);

// Removes wall-clock fields in place; what remains must reproduce exactly
// across runs with the same config.
void strip_timing(nlohmann::ordered_json& report);

void write_benchmark_outputs(const nlohmann::ordered_json& report,
                             const std::string& out_prefix);

} // namespace poscap

#endif
