#ifndef RESERVE_LAB_H
#define RESERVE_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_DOMAIN = 2,
  RL_STATUS_CONTRACT = 3,
  RL_STATUS_CONFIG = 4,
  RL_STATUS_INFORMATION_LEAK = 5,
  RL_STATUS_SCALE = 6,
  RL_STATUS_IO = 7,
  RL_STATUS_PANIC = 8,
} RlStatus;

typedef enum RlBackend {
  RL_BACKEND_ONE_FOLD = 0,
  RL_BACKEND_TWO_FOLD = 1,
} RlBackend;

typedef struct RlBanditEngine RlBanditEngine;

typedef struct RlPricingEngine RlPricingEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *rl_last_error(void);

/**
 * Creates a full-information engine. A negative `sigma` selects the
 * calibrated noise scale.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RlStatus rl_pricing_new(double alpha,
                             size_t horizon,
                             double epsilon,
                             enum RlBackend backend,
                             double sigma,
                             uint64_t seed,
                             struct RlPricingEngine **out);

/**
 * Posts the price for the next round.
 *
 * # Safety
 * `engine` must come from [`rl_pricing_new`]; `price` must be writable.
 */
enum RlStatus rl_pricing_choose(struct RlPricingEngine *engine, double *price);

/**
 * Reports the round's bid. `payment` may be null.
 *
 * # Safety
 * `engine` must come from [`rl_pricing_new`]; `payment` must be null or writable.
 */
enum RlStatus rl_pricing_observe(struct RlPricingEngine *engine, double bid, double *payment);

/**
 * # Safety
 * `engine` must come from [`rl_pricing_new`] and not be used afterwards. Null is ignored.
 */
void rl_pricing_free(struct RlPricingEngine *engine);

/**
 * Creates a bandit-feedback engine. A negative `sigma` selects the
 * calibrated noise scale.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RlStatus rl_bandit_new(double alpha,
                            size_t horizon,
                            double epsilon,
                            double sigma,
                            uint64_t seed,
                            struct RlBanditEngine **out);

/**
 * Posts the price for the next round.
 *
 * # Safety
 * `engine` must come from [`rl_bandit_new`]; `price` must be writable.
 */
enum RlStatus rl_bandit_choose(struct RlBanditEngine *engine, double *price);

/**
 * Reports only whether the posted price sold and what was paid.
 *
 * # Safety
 * `engine` must come from [`rl_bandit_new`].
 */
enum RlStatus rl_bandit_observe(struct RlBanditEngine *engine, bool sold, double payment);

/**
 * # Safety
 * `engine` must come from [`rl_bandit_new`] and not be used afterwards. Null is ignored.
 */
void rl_bandit_free(struct RlBanditEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESERVE_LAB_H */
