/* SPDX-License-Identifier: Apache-2.0 */
/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SPIKEFABRIC_H
#define SPIKEFABRIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_PARSE = 3,
  SF_STATUS_CHECKSUM = 4,
  SF_STATUS_TRUNCATED = 5,
  SF_STATUS_VERSION = 6,
  SF_STATUS_FORMAT = 7,
  SF_STATUS_COMPILE = 8,
  SF_STATUS_VERIFY_MISMATCH = 9,
  SF_STATUS_CONFIG = 10,
  SF_STATUS_ENGINE = 11,
  SF_STATUS_PANIC = 12,
} SfStatus;

/**
 * Simulation configuration.
 */
typedef struct SfConfig SfConfig;

/**
 * Compiled routing tables.
 */
typedef struct SfProgram SfProgram;

/**
 * Results of one run.
 */
typedef struct SfReport SfReport;

/**
 * Byte buffer owned by the library; release with `sf_buffer_free`.
 */
typedef struct SfBuffer {
  uint8_t *data;
  size_t len;
} SfBuffer;

typedef struct SfLatency {
  uint64_t count;
  uint64_t p1_ns;
  uint64_t p50_ns;
  uint64_t p99_ns;
  uint64_t max_ns;
} SfLatency;

typedef struct SfCounts {
  uint64_t generated;
  uint64_t replicated;
  uint64_t traced;
  uint64_t dropped;
  uint64_t filtered;
  uint64_t in_flight;
} SfCounts;

typedef struct SfTraceRecord {
  uint16_t label;
  uint64_t emitted_ns;
  uint64_t link_arrived_ns;
  uint64_t arrived_ns;
} SfTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sf_last_error(void);

/**
 * Releases a buffer returned by the library. NULL data is ignored.
 *
 * # Safety
 * `buffer` must come from this library and not have been freed.
 */
void sf_buffer_free(struct SfBuffer buffer);

/**
 * Compiles connectivity text for `node_count` nodes.
 *
 * # Safety
 * `connectivity` must be a NUL-terminated string; `out` must be writable.
 */
enum SfStatus sf_program_compile(const char *connectivity,
                                 uint32_t node_count,
                                 struct SfProgram **out);

/**
 * Loads a program file image.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
enum SfStatus sf_program_load(const uint8_t *bytes, size_t len, struct SfProgram **out);

/**
 * Serializes a program into the program file format.
 *
 * # Safety
 * `program` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_program_store(const struct SfProgram *program, struct SfBuffer *out);

/**
 * Checks a program against connectivity text. Returns `VerifyMismatch`
 * with the differences as JSON in `sf_last_error()` when they disagree.
 *
 * # Safety
 * `program` must be a live handle; `connectivity` a NUL-terminated string.
 */
enum SfStatus sf_program_verify(const struct SfProgram *program, const char *connectivity);

/**
 * # Safety
 * `program` must be NULL or a live handle; it is invalid afterwards.
 */
void sf_program_free(struct SfProgram *program);

/**
 * Parses a TOML config.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum SfStatus sf_config_parse(const char *text, struct SfConfig **out);

/**
 * Applies one `key = value` override; keys without a top-level section are calibration keys.
 *
 * # Safety
 * `config` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum SfStatus sf_config_override(struct SfConfig *config, const char *key, const char *value);

/**
 * # Safety
 * `config` must be NULL or a live handle; it is invalid afterwards.
 */
void sf_config_free(struct SfConfig *config);

/**
 * Runs a simulation to completion.
 *
 * # Safety
 * `config` and `program` must be live handles; `out` must be writable.
 */
enum SfStatus sf_run(const struct SfConfig *config,
                     const struct SfProgram *program,
                     struct SfReport **out);

/**
 * # Safety
 * `report` must be NULL or a live handle; it is invalid afterwards.
 */
void sf_report_free(struct SfReport *report);

/**
 * Chip-to-chip latency percentiles; all zero when nothing was traced.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_report_latency(const struct SfReport *report, struct SfLatency *out);

/**
 * Event-balance terms of the run.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_report_counts(const struct SfReport *report, struct SfCounts *out);

/**
 * Number of trace records at receiver `node`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_report_trace_len(const struct SfReport *report, uint32_t node, size_t *out);

/**
 * Trace record `index` at receiver `node`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_report_trace_get(const struct SfReport *report,
                                  uint32_t node,
                                  size_t index,
                                  struct SfTraceRecord *out);

/**
 * The report summary (counters and latency distributions, no traces) as JSON.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_report_json(const struct SfReport *report, struct SfBuffer *out);

/**
 * Frames a 15-bit payload as an MGT word; `is_command` sets the command flag.
 *
 * # Safety
 * `out` must be writable.
 */
enum SfStatus sf_mgt_frame(bool is_command, uint32_t payload, uint16_t *out);

/**
 * Encodes one byte; `rd` is the running disparity (-1 or +1) and is updated.
 *
 * # Safety
 * `rd` and `out_bits` must be writable.
 */
enum SfStatus sf_8b10b_encode(uint8_t byte, bool is_control, int32_t *rd, uint16_t *out_bits);

/**
 * Decodes one 10-bit code group; `rd` is checked and updated.
 *
 * # Safety
 * `rd`, `out_byte` and `out_is_control` must be writable.
 */
enum SfStatus sf_8b10b_decode(uint16_t bits, int32_t *rd, uint8_t *out_byte, bool *out_is_control);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPIKEFABRIC_H */
