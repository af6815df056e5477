#ifndef FLATSTEER_H
#define FLATSTEER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_UTF8 = 2,
  FS_STATUS_SCHEMA = 3,
  FS_STATUS_NUMERIC = 4,
  FS_STATUS_BUFFER_TOO_SMALL = 5,
  FS_STATUS_PANIC = 6,
} FsStatus;

// Reachability verdicts.
typedef enum FsVerdict {
  FS_VERDICT_REACHABLE = 0,
  FS_VERDICT_UNREACHABLE = 1,
  FS_VERDICT_UNDETERMINED = 2,
} FsVerdict;

// Parsed experiment configuration.
typedef struct FsConfig FsConfig;

// Outcome of a full synthesis and replay.
typedef struct FsResult FsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t fs_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *fs_version(void);

// e^{1/(2e)}.
double fs_r0(void);

// Parses a JSON experiment configuration.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum FsStatus fs_config_from_json(const char *json, struct FsConfig **out);

// # Safety
// `cfg` must come from `fs_config_from_json` and not be used afterwards.
void fs_config_free(struct FsConfig *cfg);

// Reachability verdict for the configured target and setting.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum FsStatus fs_classify(const struct FsConfig *cfg, enum FsVerdict *out);

// Synthesizes the controls, replays them and measures the terminal error.
// `precision_bits` = 0 keeps the configured precision; `tolerance` ≤ 0 keeps
// the configured tolerance.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum FsStatus fs_verify(const struct FsConfig *cfg,
                        uint32_t precision_bits,
                        double tolerance,
                        struct FsResult **out);

// # Safety
// `res` must come from `fs_verify` and not be used afterwards.
void fs_result_free(struct FsResult *res);

// # Safety
// `res` must be a live handle or null.
double fs_result_rel_error(const struct FsResult *res);

// # Safety
// `res` must be a live handle or null.
double fs_result_abs_error(const struct FsResult *res);

// 1 if the terminal error met the tolerance, 0 otherwise (or for null).
//
// # Safety
// `res` must be a live handle or null.
int32_t fs_result_passed(const struct FsResult *res);

// Truncation order used for the series.
//
// # Safety
// `res` must be a live handle or null.
size_t fs_result_order(const struct FsResult *res);

// Number of grid nodes in the terminal profile.
//
// # Safety
// `res` must be a live handle or null.
size_t fs_result_len(const struct FsResult *res);

// Copies nodes and simulated terminal values; either buffer may be null.
//
// # Safety
// Non-null buffers must hold `len` doubles.
enum FsStatus fs_result_terminal(const struct FsResult *res,
                                 double *xs,
                                 double *values,
                                 size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLATSTEER_H */
