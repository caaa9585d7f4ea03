/* poscap - part-of-speech guided caption decoding and evaluation engine.
 *
 * C interface of the shared library. All functions that can fail return a
 * poscap_status and, on failure, write a NUL-terminated message into the
 * caller-provided err buffer (when errcap > 0). Handles are opaque and owned
 * by the caller; every *_open/*_train/*_run constructor has a matching
 * *_close.
 */
#ifndef POSCAP_H
#define POSCAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum poscap_status {
    POSCAP_OK = 0,
    POSCAP_USAGE_ERROR = 1, /* bad arguments or precondition violation */
    POSCAP_DATA_ERROR = 2   /* malformed or inconsistent data */
} poscap_status;

typedef struct poscap_corpus poscap_corpus;
typedef struct poscap_features poscap_features;
typedef struct poscap_medoids poscap_medoids;
typedef struct poscap_model poscap_model;
typedef struct poscap_classifier poscap_classifier;

const char* poscap_version(void);
const char* poscap_status_name(poscap_status status);

/* ---- corpus ---- */

poscap_status poscap_corpus_open(const char* path, int min_count, poscap_corpus** out,
                                 char* err, size_t errcap);
void poscap_corpus_close(poscap_corpus* corpus);
int poscap_corpus_vocab_size(const poscap_corpus* corpus);
/* split: "train" | "val" | "test"; returns -1 on unknown split. */
int poscap_corpus_item_count(const poscap_corpus* corpus, const char* split);

/* ---- image features ---- */

poscap_status poscap_features_open(const char* path, poscap_features** out, char* err,
                                   size_t errcap);
void poscap_features_close(poscap_features* features);
int poscap_features_dim(const poscap_features* features);
int poscap_features_count(const poscap_features* features);

/* ---- quantized POS sequences ---- */

poscap_status poscap_cluster_run(const poscap_corpus* corpus, int k, uint64_t seed,
                                 int max_iters, int max_len, poscap_medoids** out, char* err,
                                 size_t errcap);
poscap_status poscap_medoids_open(const char* path, int max_len, poscap_medoids** out,
                                  char* err, size_t errcap);
poscap_status poscap_medoids_save(const poscap_medoids* medoids, const char* path, char* err,
                                  size_t errcap);
void poscap_medoids_close(poscap_medoids* medoids);
int poscap_medoids_count(const poscap_medoids* medoids);

/* ---- caption model ---- */

/* medoids may be NULL for the unconditioned model. */
poscap_status poscap_model_train(const poscap_corpus* corpus, const poscap_features* features,
                                 const poscap_medoids* medoids, double alpha, int buckets,
                                 uint64_t seed, int max_len, poscap_model** out, char* err,
                                 size_t errcap);
poscap_status poscap_model_open(const char* path, poscap_model** out, char* err,
                                size_t errcap);
poscap_status poscap_model_save(const poscap_model* model, const char* path, char* err,
                                size_t errcap);
void poscap_model_close(poscap_model* model);
int poscap_model_is_pos_conditioned(const poscap_model* model);

/* ---- POS classifier ---- */

poscap_status poscap_classifier_train(const poscap_corpus* corpus,
                                      const poscap_features* features,
                                      const poscap_medoids* medoids, double lr, int epochs,
                                      uint64_t seed, int max_len, poscap_classifier** out,
                                      char* err, size_t errcap);
poscap_status poscap_classifier_open(const char* path, poscap_classifier** out, char* err,
                                     size_t errcap);
poscap_status poscap_classifier_save(const poscap_classifier* classifier, const char* path,
                                     char* err, size_t errcap);
void poscap_classifier_close(poscap_classifier* classifier);

/* ---- decoding ----
 *
 * strategy: "greedy" | "beam" | "dbs" | "pos". "pos" requires a classifier
 * and a POS-conditioned model. corpus+split restrict decoding to that
 * split's images; with corpus NULL every image in the feature table is
 * decoded. pos_sample != 0 samples POS conditions without replacement
 * instead of taking the top posterior. Writes the caption TSV
 * (image_id, rank, logprob, medoid_index|-, caption) and, when
 * out_stats_json is non-NULL, an operation-count/timing report. */
poscap_status poscap_decode_run(const poscap_model* model,
                                const poscap_classifier* classifier,
                                const poscap_features* features, const poscap_corpus* corpus,
                                const char* split, const char* strategy, int k, int max_len,
                                double lambda, uint64_t seed, int pos_sample,
                                const char* out_tsv, const char* out_stats_json, char* err,
                                size_t errcap);

/* ---- re-ranking ----
 *
 * mode: "oracle" | "consensus" | "likelihood"; metric (oracle only):
 * "bleu1".."bleu4" | "cider". Rewrites the decode TSV with ranks assigned by
 * the chosen mode. consensus requires features for neighbor retrieval. */
poscap_status poscap_rerank_run(const char* decode_tsv, const poscap_corpus* corpus,
                                const poscap_features* features, const char* mode,
                                const char* metric, int m, const char* out_tsv, char* err,
                                size_t errcap);

/* ---- evaluation ----
 *
 * Consumes a decode TSV plus the corpus; writes an aggregate diversity report
 * (JSON) and a per-image metric TSV. */
poscap_status poscap_evaluate_run(const char* decode_tsv, const poscap_corpus* corpus,
                                  const char* out_json, const char* out_tsv, char* err,
                                  size_t errcap);

/* ---- synthetic corpora ----
 *
 * templates_path NULL selects the built-in template inventory. Writes
 * <out_prefix>.corpus.tsv and <out_prefix>.features.tsv. */
poscap_status poscap_synth_run(const char* templates_path, uint64_t seed, int images,
                               int caps_per_image, int words_per_tag, int feature_dim,
                               double noise, const char* out_prefix, char* err,
                               size_t errcap);

/* ---- benchmark ----
 *
 * Runs the strategies configured in the flat key=value config file and writes
 * <out_prefix>.json / <out_prefix>.tsv. out_prefix NULL uses the config's
 * out_prefix key. */
poscap_status poscap_benchmark_run(const char* config_path, const char* out_prefix,
                                   char* err, size_t errcap);

#ifdef __cplusplus
}
#endif

#endif /* POSCAP_H */
