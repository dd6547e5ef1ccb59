#ifndef SUMPROD_H
#define SUMPROD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_INVALID_INPUT = 1,
  SP_STATUS_DOMAIN = 2,
  SP_STATUS_SCALE_MISMATCH = 3,
  SP_STATUS_GENERATION = 4,
  SP_STATUS_HYPOTHESIS = 5,
  SP_STATUS_IO = 6,
  SP_STATUS_JSON = 7,
  SP_STATUS_NULL_POINTER = 8,
  SP_STATUS_OVERFLOW = 9,
  SP_STATUS_PANIC = 10,
} SpStatus;

/*
 Binary operation for [`sp_set_arithmetic`].
 */
typedef enum SpArithOp {
  SP_ARITH_OP_SUM = 0,
  SP_ARITH_OP_DIFF = 1,
  SP_ARITH_OP_PROD = 2,
  SP_ARITH_OP_QUOT = 3,
} SpArithOp;

/*
 Fiber combination for energies.
 */
typedef enum SpFiberMode {
  SP_FIBER_MODE_DIFFERENCE = 0,
  SP_FIBER_MODE_SUM = 1,
} SpFiberMode;

/*
 Frostman condition variant.
 */
typedef enum SpFrostmanKind {
  /*
   Relative to the set size.
   */
  SP_FROSTMAN_KIND_SET = 0,
  /*
   Katz–Tao (absolute) form.
   */
  SP_FROSTMAN_KIND_KT = 1,
} SpFrostmanKind;

/*
 Opaque set of grid cells at scale `2^-m`.
 */
typedef struct SpGridSet SpGridSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *sp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sp_version(void);

/*
 Builds a set from `len` cell indices at scale `m`.

 # Safety
 `cells` must point to `len` readable values (or be null with `len == 0`)
 and `out` must be writable.
 */
enum SpStatus sp_set_new(uint32_t m, const int64_t *cells, size_t len, struct SpGridSet **out);

/*
 Generates a set from a JSON generator spec such as
 `{"kind": "cantor", "base": 4, "digits": [0, 2]}`.

 # Safety
 `spec_json` must be a NUL-terminated string and `out` writable.
 */
enum SpStatus sp_set_generate(const char *spec_json, uint32_t m, struct SpGridSet **out);

/*
 Releases a set; null is ignored.

 # Safety
 `set` must come from this library and not be used afterwards.
 */
void sp_set_free(struct SpGridSet *set);

/*
 Number of cells, or 0 for null.

 # Safety
 `set` must be null or a live handle.
 */
size_t sp_set_len(const struct SpGridSet *set);

/*
 Scale exponent `m`, or 0 for null.

 # Safety
 `set` must be null or a live handle.
 */
uint32_t sp_set_scale(const struct SpGridSet *set);

/*
 Copies up to `cap` sorted cells into `buf` and stores the full count in
 `len`.

 # Safety
 `buf` must have room for `cap` values (or be null with `cap == 0`).
 */
enum SpStatus sp_set_cells(const struct SpGridSet *set, int64_t *buf, size_t cap, size_t *len);

/*
 `N_{2^-j}` of the set.

 # Safety
 `set` must be a live handle and `out` writable.
 */
enum SpStatus sp_set_covering_number(const struct SpGridSet *set, uint32_t j, size_t *out);

/*
 Sum, difference, product or quotient set.

 # Safety
 `a` and `b` must be live handles and `out` writable.
 */
enum SpStatus sp_set_arithmetic(const struct SpGridSet *a,
                                const struct SpGridSet *b,
                                enum SpArithOp op,
                                struct SpGridSet **out);

/*
 `E_k(A, B)` with window `w`, as a double.

 # Safety
 `a` and `b` must be live handles and `out` writable.
 */
enum SpStatus sp_energy(const struct SpGridSet *a,
                        const struct SpGridSet *b,
                        double k,
                        enum SpFiberMode mode,
                        uint64_t w,
                        double *out);

/*
 Exact `E_k(A, B)` for integer `k`; fails with `Overflow` past `u64`.

 # Safety
 `a` and `b` must be live handles and `out` writable.
 */
enum SpStatus sp_energy_exact(const struct SpGridSet *a,
                              const struct SpGridSet *b,
                              uint32_t k,
                              enum SpFiberMode mode,
                              uint64_t w,
                              uint64_t *out);

/*
 Quadruples `(a, b, a′, b′)` with `|(a ∘ b) − (a′ ∘ b′)| ≤ w`.

 # Safety
 `a` and `b` must be live handles and `out` writable.
 */
enum SpStatus sp_quadruple_count(const struct SpGridSet *a,
                                 const struct SpGridSet *b,
                                 enum SpFiberMode mode,
                                 uint64_t w,
                                 uint64_t *out);

/*
 Smallest Frostman constant of the set at exponent `s`.

 # Safety
 `set` must be a live handle and `out` writable.
 */
enum SpStatus sp_frostman_constant(const struct SpGridSet *set,
                                   double s,
                                   enum SpFrostmanKind kind,
                                   double *out);

/*
 Dyadic `α`-content of the set.

 # Safety
 `set` must be a live handle and `out` writable.
 */
enum SpStatus sp_dyadic_content(const struct SpGridSet *set, double alpha, double *out);

/*
 Runs the pipeline described by `config_json`, writes the report files
 into `out_dir` when it is not null, and stores 0 (all hard invariants
 hold) or 2 in `exit_code`. A failed hypothesis returns `Hypothesis`.

 # Safety
 `config_json` must be a NUL-terminated string, `out_dir` null or a
 NUL-terminated string, and `exit_code` writable.
 */
enum SpStatus sp_run_experiment(const char *config_json, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUMPROD_H */
