/*------------------------------------------------------------------------------
 *
 *   Copyright 2026 The relfuse Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 *
 *----------------------------------------------------------------------------*/

#ifndef RELFUSE_H
#define RELFUSE_H

/*
 * C interface to librelfuse.
 *
 * Every fallible call returns an rf_status. On failure a human-readable
 * message is available from rf_last_error() until the next call on the same
 * thread. Handles are opaque; each *_load/_create has a matching *_free that
 * accepts NULL. Strings returned by the library stay valid for the lifetime
 * of the handle they came from.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RELFUSE_BUILDING)
#    define RF_API __declspec(dllexport)
#  else
#    define RF_API __declspec(dllimport)
#  endif
#else
#  define RF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum rf_status
{
  RF_OK            = 0,
  RF_ERR_USAGE     = 1, /* bad argument or configuration */
  RF_ERR_DATA      = 2, /* malformed, missing or inconsistent data */
  RF_ERR_NUMERICAL = 3, /* divergence, non-finite values, degenerate vectors */
  RF_ERR_INTERNAL  = 4
} rf_status;

typedef enum rf_slot
{
  RF_SLOT_S = 0,
  RF_SLOT_R = 1,
  RF_SLOT_O = 2
} rf_slot;

typedef struct rf_vocab   rf_vocab;
typedef struct rf_model   rf_model;
typedef struct rf_testset rf_testset;

RF_API const char *rf_version(void);
RF_API const char *rf_last_error(void);

/* ---- vocabulary -------------------------------------------------------- */

/* Loads tokens.tsv and relations.tsv from a dataset directory. */
RF_API rf_status   rf_vocab_load(const char *dir, rf_vocab **out);
RF_API void        rf_vocab_free(rf_vocab *vocab);
RF_API size_t      rf_vocab_token_count(const rf_vocab *vocab);
RF_API size_t      rf_vocab_relation_count(const rf_vocab *vocab);
RF_API rf_status   rf_vocab_token_id(const rf_vocab *vocab, const char *surface, int32_t *id);
RF_API rf_status   rf_vocab_relation_id(const rf_vocab *vocab, const char *name, int32_t *id);
RF_API const char *rf_vocab_token_surface(const rf_vocab *vocab, int32_t id);
RF_API const char *rf_vocab_relation_name(const rf_vocab *vocab, int32_t id);
RF_API const char *rf_vocab_hash(const rf_vocab *vocab);

/* Fills up to `max` surfaces closest to `query` by common prefix; returns the
 * number written. */
RF_API size_t rf_vocab_suggest(const rf_vocab *vocab, const char *query, const char **out, size_t max);

/* ---- model ------------------------------------------------------------- */

RF_API rf_status   rf_model_load(const char *path, rf_model **out);
RF_API void        rf_model_free(rf_model *model);
RF_API size_t      rf_model_token_count(const rf_model *model);
RF_API size_t      rf_model_relation_count(const rf_model *model);
RF_API size_t      rf_model_dim(const rf_model *model);
RF_API const char *rf_model_vocab_hash(const rf_model *model);

RF_API rf_status rf_model_energy(const rf_model *model, int32_t s, int32_t r, int32_t o, double *energy);

/* Number of candidates for a free slot (relations for R, tokens otherwise). */
RF_API size_t rf_model_candidate_count(const rf_model *model, rf_slot slot);

/* Fixed ids follow triple order with the free slot removed: (r, o) for S,
 * (s, o) for R, (s, r) for O. `len` must equal the candidate count. */
RF_API rf_status rf_model_conditional(const rf_model *model, rf_slot slot, int32_t fixed_a, int32_t fixed_b,
                                      double *probabilities, size_t len);
RF_API rf_status rf_model_rank(const rf_model *model, rf_slot slot, int32_t fixed_a, int32_t fixed_b,
                               int32_t *ids, size_t len);

/* ---- evaluation -------------------------------------------------------- */

typedef struct rf_metrics
{
  double  mrr_best;
  double  probability_mass;
  double  baseline_mass;
  double  mean_correct_count;
  int64_t n_tasks;
} rf_metrics;

RF_API rf_status rf_testset_load(const char *path, rf_testset **out);
RF_API void      rf_testset_free(rf_testset *testset);
RF_API size_t    rf_testset_size(const rf_testset *testset);
RF_API rf_status rf_evaluate(const rf_model *model, const rf_testset *testset, rf_metrics *out);

/* ---- pipeline commands ------------------------------------------------- */

typedef struct rf_ingest_options
{
  const char *text_path;           /* optional */
  const char *structured_path;     /* optional */
  const char *lexicon_path;        /* optional */
  const char *number_classes_path; /* optional */
  uint64_t    min_round1;
  uint64_t    min_round2;
  uint64_t    top_k_relations;
  uint64_t    window;
  uint64_t    seed;
  const char *out_dir;
} rf_ingest_options;

/* Fills defaults: thresholds 100/50, top 20 relations, window 5. */
RF_API void      rf_ingest_options_init(rf_ingest_options *opts);
RF_API rf_status rf_ingest(const rf_ingest_options *opts);

typedef struct rf_carve_options
{
  const char        *data_dir;
  const char        *out_dir;
  rf_slot            slot;
  uint64_t           n_pairs;
  const char *const *transfer_tokens; /* non-empty selects the transfer split */
  size_t             n_transfer_tokens;
  uint64_t           seed;
  int                structured_only;
} rf_carve_options;

RF_API void      rf_carve_options_init(rf_carve_options *opts);
RF_API rf_status rf_carve(const rf_carve_options *opts);

RF_API rf_status rf_train(const char *data_dir, const char *config_path, const char *out_dir);

/* Writes JSON to out_path and CSV next to it; `out` may be NULL. */
RF_API rf_status rf_evaluate_files(const char *model_path, const char *testset_path, const char *out_path,
                                   rf_metrics *out);

typedef struct rf_synth_options
{
  uint64_t    n_tokens;
  uint64_t    n_relations;
  uint64_t    dim;
  uint64_t    n_triples;
  uint64_t    seed;
  const char *out_dir;
} rf_synth_options;

RF_API void      rf_synth_options_init(rf_synth_options *opts);
RF_API rf_status rf_synth(const rf_synth_options *opts);

#ifdef __cplusplus
}
#endif

#endif /* RELFUSE_H */
