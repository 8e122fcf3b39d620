#ifndef CYCLIA_H
#define CYCLIA_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared with the command-line exit codes where they overlap.
 */
typedef enum CycliaStatus {
  CYCLIA_STATUS_OK = 0,
  CYCLIA_STATUS_NULL_POINTER = 1,
  CYCLIA_STATUS_INVALID_ARGUMENT = 2,
  CYCLIA_STATUS_REGION = 3,
  CYCLIA_STATUS_SPECTRAL = 4,
  CYCLIA_STATUS_NUMERICAL = 5,
  CYCLIA_STATUS_PANIC = 6,
} CycliaStatus;

/**
 * Opaque model handle.
 */
typedef struct CycliaModel CycliaModel;

/**
 * Model parameters rounded to binary64.
 */
typedef struct CycliaParams {
  double k1;
  double k2;
  double k3;
  double k4;
  double k5;
  double eps;
} CycliaParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *cyclia_last_error(void);

/**
 * Library version as a static string.
 */
const char *cyclia_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void cyclia_string_free(char *s);

/**
 * Creates a model from exact rational strings (`"1/10"`, `"0.065"`).
 * `eps`, `k2` and `k1` may be null, in which case the normalizations
 * derive them. The region is checked before normalization.
 *
 * # Safety
 * String arguments are null or valid NUL-terminated strings; `out` is
 * valid for writes.
 */
enum CycliaStatus cyclia_model_new(const char *k3,
                                   const char *k4,
                                   const char *k5,
                                   const char *eps,
                                   const char *k2,
                                   const char *k1,
                                   struct CycliaModel **out);

/**
 * Releases a model.
 *
 * # Safety
 * `model` is null or was created by [`cyclia_model_new`] and not yet freed.
 */
void cyclia_model_free(struct CycliaModel *model);

/**
 * Writes the parameters rounded to binary64.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for writes.
 */
enum CycliaStatus cyclia_model_params(const struct CycliaModel *model, struct CycliaParams *out);

/**
 * Real part of the complex eigenvalue pair at the equilibrium.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for writes.
 */
enum CycliaStatus cyclia_model_alpha(const struct CycliaModel *model, double *out);

/**
 * Computes `g_1 .. g_n` exactly and writes their binary64 values to
 * `out[0 .. n]`.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for `n` writes.
 */
enum CycliaStatus cyclia_model_focus_quantities(const struct CycliaModel *model,
                                                size_t n,
                                                double *out);

/**
 * Computes `g_1 .. g_n` and returns them as a JSON array of
 * `{"exact": "n/d", "decimal": x}` objects in `*out`.
 *
 * # Safety
 * `model` is a live handle; `out` is valid for writes.
 */
enum CycliaStatus cyclia_model_focus_quantities_json(const struct CycliaModel *model,
                                                     size_t n,
                                                     char **out);

/**
 * Evaluates the closed form of `g_1` at exact rational strings.
 *
 * # Safety
 * String arguments are valid NUL-terminated strings; `out` is valid for
 * writes.
 */
enum CycliaStatus cyclia_g1_closed_form(const char *k3,
                                        const char *k4,
                                        const char *k5,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CYCLIA_H */
