#ifndef CRT_ARRAY_H
#define CRT_ARRAY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum CrtStatus {
  CRT_STATUS_OK = 0,
  CRT_STATUS_NULL_POINTER = 1,
  CRT_STATUS_INVALID_ARGUMENT = 2,
  CRT_STATUS_UNSUPPORTED_PRIME = 3,
  CRT_STATUS_UNSUPPORTED_RING = 4,
  CRT_STATUS_INVALID_DESIGN = 5,
  CRT_STATUS_INVALID_INPUT = 6,
  CRT_STATUS_OVERFLOW = 7,
  CRT_STATUS_INDEX_OUT_OF_RANGE = 8,
  CRT_STATUS_PANIC = 9,
} CrtStatus;

/*
 Opaque sensor array.
 */
typedef struct CrtArray CrtArray;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *crt_version(void);

/*
 Copy of the calling thread's last error message, or NULL if the last
 call succeeded. Free with `crt_string_free`.
 */
char *crt_last_error_message(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void crt_string_free(char *s);

/*
 Whether `m = m_a + m_b q` and `n = n_a + n_b q` generate coprime ideals
 of `Z[q]/(q² + B q + C)`.

 # Safety
 `out` must be a valid pointer.
 */
enum CrtStatus crt_is_coprime(int64_t ring_b,
                              int64_t ring_c,
                              int64_t m_a,
                              int64_t m_b,
                              int64_t n_a,
                              int64_t n_b,
                              bool *out);

/*
 Builds a prime-indexed design (`hscrt`, `t_array`, `spinner`, `z2_cross`,
 `a2_cross`) over the ring `(B, C)`.

 # Safety
 `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrtStatus crt_design_new(const char *kind,
                              int64_t ring_b,
                              int64_t ring_c,
                              uint64_t p,
                              struct CrtArray **out);

/*
 Builds any design from `key=value` lines, as in the command-line config
 (`kind`, `ring`, `p`, `generators`, `n1`, `n2`, `sensors`, `pitch`).

 # Safety
 `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrtStatus crt_design_from_config(const char *config, struct CrtArray **out);

/*
 Releases an array. NULL is ignored.

 # Safety
 `h` must come from this library and not be freed twice.
 */
void crt_array_free(struct CrtArray *h);

/*
 Number of sensors.

 # Safety
 `h` must be a live handle and `out` a valid pointer.
 */
enum CrtStatus crt_array_len(const struct CrtArray *h, size_t *out);

/*
 Lattice coordinates of sensor `index` (sensors are sorted).

 # Safety
 `h` must be a live handle; `x` and `y` valid pointers.
 */
enum CrtStatus crt_array_sensor(const struct CrtArray *h, size_t index, int64_t *x, int64_t *y);

/*
 Physical position of sensor `index` in wavelengths.

 # Safety
 `h` must be a live handle; `x` and `y` valid pointers.
 */
enum CrtStatus crt_array_position(const struct CrtArray *h, size_t index, double *x, double *y);

/*
 JSON serialisation of the array. Free with `crt_string_free`.

 # Safety
 `h` must be a live handle and `out` a valid pointer.
 */
enum CrtStatus crt_array_to_json(const struct CrtArray *h, char **out);

/*
 Fragility as the fraction `essential / total`.

 # Safety
 `h` must be a live handle; the outputs valid pointers.
 */
enum CrtStatus crt_array_fragility(const struct CrtArray *h, uint64_t *essential, uint64_t *total);

/*
 Whether the difference coarray covers `Λ ∩ V̄(pΛ)`; `p = 0` uses the
 array's own prime. `missing` receives the hole count.

 # Safety
 `h` must be a live handle; the outputs valid pointers.
 */
enum CrtStatus crt_array_hole_free(const struct CrtArray *h,
                                   uint64_t p,
                                   bool *out,
                                   size_t *missing);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRT_ARRAY_H */
