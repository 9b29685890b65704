/* C interface to the uedlab library. Every function returns a status code;
 * the message for the most recent failure on the calling thread is available
 * from ued_last_error(). Strings returned through char** outputs are owned by
 * the caller and released with ued_string_free(). */
#ifndef UEDLAB_H
#define UEDLAB_H

#include <stdint.h>

#if defined(_WIN32)
#define UED_API __declspec(dllexport)
#else
#define UED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ued_status {
  UED_OK = 0,
  UED_ERR_INVALID_ARGUMENT = 1,
  UED_ERR_INVALID_LEVEL = 2,
  UED_ERR_PARSE = 3,
  UED_ERR_SIZE_CAP = 4,
  UED_ERR_CONVERGENCE = 5,
  UED_ERR_NUMERIC = 6,
  UED_ERR_IO = 7,
  UED_ERR_CONFIG = 8,
  UED_ERR_INTERNAL = 9
} ued_status;

typedef struct ued_level ued_level;
typedef struct ued_policy ued_policy;
typedef struct ued_config ued_config;

UED_API const char* ued_version(void);
UED_API const char* ued_last_error(void);
UED_API const char* ued_status_name(ued_status status);
UED_API void ued_string_free(char* s);

/* Levels: ASCII text with a "dir: <heading>" header and a '#' border. */
UED_API ued_status ued_level_parse(const char* text, ued_level** out);
UED_API ued_status ued_level_load(const char* path, ued_level** out);
UED_API ued_status ued_level_save(const ued_level* level, const char* path);
UED_API ued_status ued_level_serialize(const ued_level* level, char** out);
UED_API ued_status ued_level_is_solvable(const ued_level* level, int* out);
UED_API void ued_level_free(ued_level* level);

UED_API ued_status ued_level_generate(int width, int height, int block_budget, uint64_t seed, ued_level** out);
/* Writes level_000.lvl ... into out_dir (created if needed). */
UED_API ued_status ued_gen_levels(int width, int height, int block_budget, uint64_t seed, int count,
                                  const char* out_dir);

UED_API ued_status ued_policy_load(const char* path, ued_policy** out);
UED_API ued_status ued_policy_save(const ued_policy* policy, const char* path);
UED_API ued_status ued_policy_input_size(const ued_policy* policy, int* out);
UED_API void ued_policy_free(ued_policy* policy);

/* Experiment configuration. Field names are "section.key" or a bare key. */
UED_API ued_status ued_config_default(ued_config** out);
UED_API ued_status ued_config_load(const char* path, ued_config** out);
UED_API ued_status ued_config_set(ued_config* config, const char* name, const char* value);
UED_API ued_status ued_config_get(const ued_config* config, const char* name, char** out);
UED_API ued_status ued_config_has(const char* name, int* out);
UED_API ued_status ued_config_to_ini(const ued_config* config, char** out);
UED_API ued_status ued_config_validate(const ued_config* config);
UED_API void ued_config_free(ued_config* config);

typedef void (*ued_record_callback)(const char* json_record, void* user);

/* Runs a full experiment into the configured output directory. */
UED_API ued_status ued_train(const ued_config* config, int overwrite, ued_record_callback callback, void* user);

/* Per-level CSV: level,seed,solved_rate,mean_return. suite is NULL or
 * "default" for the built-in mazes, otherwise a directory of .lvl files.
 * config may be NULL (defaults). */
UED_API ued_status ued_evaluate(const char* checkpoint, const char* suite, const ued_config* config, int episodes,
                                int stochastic, uint64_t seed, char** csv_out);
/* Aggregate CSV with one row per run directory and one per algorithm. */
UED_API ued_status ued_compare(const char* const* run_dirs, int count, double norm_lo, double norm_hi,
                               char** csv_out);

/* Distance between the occupancy distributions the policy induces on two
 * levels. config may be NULL. */
UED_API ued_status ued_level_distance(const ued_level* a, const ued_level* b, const ued_policy* policy,
                                      const ued_config* config, uint64_t seed, double* out);
/* Pairwise distance CSV over every .lvl file in level_dir. */
UED_API ued_status ued_distance_matrix_csv(const char* level_dir, const ued_policy* policy,
                                           const ued_config* config, uint64_t seed, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif
