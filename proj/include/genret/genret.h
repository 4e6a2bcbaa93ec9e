/* Copyright 2026 The genret Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the genret engine. Every fallible call returns a
 * genret_status; on failure genret_last_error() describes the error for the
 * calling thread. Strings returned through char** are owned by the caller and
 * released with genret_string_free. */

#ifndef GENRET_GENRET_H_
#define GENRET_GENRET_H_

#include <stddef.h>

#if defined(_WIN32)
#define GENRET_API __declspec(dllexport)
#else
#define GENRET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum genret_status {
  GENRET_OK = 0,
  GENRET_ERR_INVALID_ARGUMENT = 1,
  GENRET_ERR_IO = 2,
  GENRET_ERR_PARSE = 3,
  GENRET_ERR_DUPLICATE = 4,
  GENRET_ERR_NOT_FOUND = 5,
  GENRET_ERR_STATE = 6,
  GENRET_ERR_INTEGRITY = 7,
  GENRET_ERR_VERSION = 8,
  GENRET_ERR_NUMERIC = 9,
  GENRET_ERR_BACKEND_TRANSPORT = 10,
  GENRET_ERR_BACKEND_REQUEST = 11,
  GENRET_ERR_BACKEND_PROTOCOL = 12,
  GENRET_ERR_INTERNAL = 99
} genret_status;

typedef enum genret_log_level {
  GENRET_LOG_DEBUG = 0,
  GENRET_LOG_INFO = 1,
  GENRET_LOG_WARNING = 2,
  GENRET_LOG_ERROR = 3
} genret_log_level;

GENRET_API const char* genret_version(void);
GENRET_API const char* genret_last_error(void);
GENRET_API const char* genret_status_name(genret_status status);
GENRET_API void genret_string_free(char* s);
GENRET_API void genret_set_log_level(genret_log_level level);

/* ---- configuration ---------------------------------------------------- */

typedef struct genret_config genret_config;

/* Defaults only. */
GENRET_API genret_status genret_config_new(genret_config** out);
/* Defaults overlaid with a JSON file; relative paths resolve against the
 * file's directory. */
GENRET_API genret_status genret_config_load(const char* path,
                                            genret_config** out);
/* Sets a dotted key such as "train.lambda". The value is parsed as JSON
 * unless the key holds a string. The config is unchanged on failure. */
GENRET_API genret_status genret_config_set(genret_config* config,
                                           const char* dotted_key,
                                           const char* value);
GENRET_API genret_status genret_config_to_json(const genret_config* config,
                                               char** out_json);
GENRET_API genret_status genret_config_hash(const genret_config* config,
                                            char** out_hash);
GENRET_API genret_status genret_config_output_dir(const genret_config* config,
                                                  char** out_dir);
GENRET_API void genret_config_free(genret_config* config);

/* ---- pipeline stages (artifacts live in the config's output dir) ------- */

#define GENRET_CONNECTORS_DOCUMENTS 1
#define GENRET_CONNECTORS_QUERIES 2

GENRET_API genret_status genret_gen_connectors(const genret_config* config,
                                               int kinds);
GENRET_API genret_status genret_gen_pseudo(const genret_config* config);
GENRET_API genret_status genret_build_trie(const genret_config* config);
GENRET_API genret_status genret_pretrain(const genret_config* config);
GENRET_API genret_status genret_finetune(const genret_config* config);
/* Round-0 inference into run.jsonl; answers are decoded when with_answers is
 * non-zero. */
GENRET_API genret_status genret_retrieve(const genret_config* config,
                                         int with_answers);
GENRET_API genret_status genret_run_iter(const genret_config* config);
/* NULL or empty paths select the defaults. out_report_json may be NULL. */
GENRET_API genret_status genret_evaluate(const genret_config* config,
                                         const char* run_path,
                                         const char* queries_path,
                                         const char* report_path,
                                         char** out_report_json);
GENRET_API genret_status genret_curves(const genret_config* config);
GENRET_API genret_status genret_run_all(const genret_config* config,
                                        char** out_report_json);
GENRET_API genret_status genret_compare(size_t count,
                                        const char* const* labels,
                                        const char* const* report_paths,
                                        const char* out_json,
                                        const char* out_csv);

/* ---- loaded artifacts -------------------------------------------------- */

typedef struct genret_vocab genret_vocab;
typedef struct genret_trie genret_trie;
typedef struct genret_model genret_model;

GENRET_API genret_status genret_vocab_load(const char* path,
                                           genret_vocab** out);
GENRET_API size_t genret_vocab_size(const genret_vocab* vocab);
GENRET_API void genret_vocab_free(genret_vocab* vocab);

GENRET_API genret_status genret_trie_load(const char* path, genret_trie** out);
GENRET_API size_t genret_trie_size(const genret_trie* trie);
GENRET_API void genret_trie_free(genret_trie* trie);

/* Fails with GENRET_ERR_STATE when the checkpoint was trained with another
 * vocabulary. */
GENRET_API genret_status genret_model_load(const char* path,
                                           const genret_vocab* vocab,
                                           genret_model** out);
GENRET_API void genret_model_free(genret_model* model);

/* Ranked identifiers for one encoder input, as a JSON array of
 * {doc_id, score}. */
GENRET_API genret_status genret_model_retrieve(const genret_model* model,
                                               const genret_vocab* vocab,
                                               const genret_trie* trie,
                                               const char* input_text,
                                               int beam_size, char** out_json);
GENRET_API genret_status genret_model_answer(const genret_model* model,
                                             const genret_vocab* vocab,
                                             const char* input_text,
                                             int max_len, char** out_answer);

/* ---- prompts ----------------------------------------------------------- */

typedef enum genret_prompt_kind {
  GENRET_PROMPT_D_CONNECTOR = 0,
  GENRET_PROMPT_Q_CONNECTOR = 1,
  GENRET_PROMPT_ITER_Q_CONNECTOR = 2
} genret_prompt_kind;

/* bindings_json is an object of placeholder name to string value. */
GENRET_API genret_status genret_render_prompt(genret_prompt_kind kind,
                                              const char* bindings_json,
                                              char** out_prompt);

/* ---- metrics ----------------------------------------------------------- */

GENRET_API genret_status genret_metric_reciprocal_rank(
    const char* const* ranking, size_t ranking_len, const char* const* relevant,
    size_t relevant_len, int k, double* out);
GENRET_API genret_status genret_metric_recall(const char* const* ranking,
                                              size_t ranking_len,
                                              const char* const* relevant,
                                              size_t relevant_len, int k,
                                              double* out);
GENRET_API genret_status genret_metric_bleu1(const char* candidate,
                                             const char* const* references,
                                             size_t count, double* out);
GENRET_API genret_status genret_metric_rouge_l(const char* candidate,
                                               const char* reference,
                                               double beta, double* out);
GENRET_API genret_status genret_metric_exact_match(const char* prediction,
                                                   const char* const* golds,
                                                   size_t count, int* out);
GENRET_API genret_status genret_metric_token_f1(const char* prediction,
                                                const char* const* golds,
                                                size_t count, double* out);

#ifdef __cplusplus
}
#endif

#endif /* GENRET_GENRET_H_ */
