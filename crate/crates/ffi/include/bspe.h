#ifndef BSPE_H
#define BSPE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BspeStatus {
  BspeStatus_Ok = 0,
  BspeStatus_NullPointer = 1,
  BspeStatus_InvalidArgument = 2,
  BspeStatus_ValueTooLarge = 3,
  BspeStatus_DuplicateAgent = 4,
  BspeStatus_ReservedAgentId = 5,
  BspeStatus_InvalidBias = 6,
  BspeStatus_ZeroUnits = 7,
  BspeStatus_IndexOutOfRange = 8,
  BspeStatus_Panic = 9,
} BspeStatus;

// Opaque allocation and payments.
typedef struct BspeOutcome BspeOutcome;

// Opaque bid profile.
typedef struct BspeProfile BspeProfile;

typedef struct BspeEfo {
  size_t winner_count;
  uint64_t uniform_price;
  uint64_t revenue;
} BspeEfo;

typedef struct BspeFactors {
  double p;
  double r1;
  double r2;
  double ratio;
} BspeFactors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *bspe_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bspe_version(void);

// Builds a profile from `len` values. `ids` may be NULL (agents are then
// numbered 1..=len); otherwise it must hold `len` distinct ids below 2^31.
//
// # Safety
// `values` (and `ids` if non-NULL) must point to `len` readable elements;
// `out` must be writable.
enum BspeStatus bspe_profile_new(const uint64_t *values,
                                 size_t len,
                                 const uint32_t *ids,
                                 struct BspeProfile **out);

// # Safety
// `profile` must be NULL or a handle from [`bspe_profile_new`] not yet
// freed.
void bspe_profile_free(struct BspeProfile *profile);

// Number of bidders, 0 for NULL.
//
// # Safety
// `profile` must be NULL or a live handle.
size_t bspe_profile_len(const struct BspeProfile *profile);

// Envy-free optimal fixed-price revenue with `units` units.
//
// # Safety
// `profile` must be a live handle and `out` writable.
enum BspeStatus bspe_efo(const struct BspeProfile *profile, size_t units, struct BspeEfo *out);

// One run of the mechanism with bias `p`, drawing its coins from stream
// `stream` of the source seeded with `seed`.
//
// # Safety
// `profile` must be a live handle and `out` writable.
enum BspeStatus bspe_run(const struct BspeProfile *profile,
                         size_t units,
                         double p,
                         uint64_t seed,
                         uint64_t stream,
                         struct BspeOutcome **out);

// Profit extractor targeting `target`, run on `bids`.
//
// # Safety
// Both profiles must be live handles and `out` writable.
enum BspeStatus bspe_profit_extract(const struct BspeProfile *target,
                                    const struct BspeProfile *bids,
                                    size_t units,
                                    struct BspeOutcome **out);

// Single-unit second-price auction.
//
// # Safety
// `profile` must be a live handle and `out` writable.
enum BspeStatus bspe_vickrey_1unit(const struct BspeProfile *profile, struct BspeOutcome **out);

// # Safety
// `outcome` must be NULL or a live handle.
void bspe_outcome_free(struct BspeOutcome *outcome);

// Total payments, 0 for NULL.
//
// # Safety
// `outcome` must be NULL or a live handle.
uint64_t bspe_outcome_revenue(const struct BspeOutcome *outcome);

// Number of served agents, 0 for NULL.
//
// # Safety
// `outcome` must be NULL or a live handle.
size_t bspe_outcome_served_count(const struct BspeOutcome *outcome);

// The `index`-th served agent (in increasing id order) and its payment.
//
// # Safety
// `outcome` must be a live handle; `agent` and `payment` writable.
enum BspeStatus bspe_outcome_entry(const struct BspeOutcome *outcome,
                                   size_t index,
                                   uint32_t *agent,
                                   uint64_t *payment);

// `r1`, `r2` and the approximation ratio for bias `p` in (0, 0.5).
//
// # Safety
// `out` must be writable.
enum BspeStatus bspe_factors(double p, struct BspeFactors *out);

// Infinite-horizon ruin probability from 0 and from +1.
//
// # Safety
// `q` and `q_conditional` must be writable.
enum BspeStatus bspe_ruin_closed_form(double p, double *q, double *q_conditional);

// Minimises the approximation ratio over `[lo, hi]` to tolerance `tol`.
//
// # Safety
// `p_star` and `ratio_star` must be writable.
enum BspeStatus bspe_minimize_ratio(double lo,
                                    double hi,
                                    double tol,
                                    double *p_star,
                                    double *ratio_star);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSPE_H */
