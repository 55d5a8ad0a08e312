#ifndef PROXMETA_H
#define PROXMETA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ProxStatus {
  ProxStatus_Ok = 0,
  /**
   * Malformed input (JSON, rationals, parameters).
   */
  ProxStatus_ConfigError = 1,
  /**
   * The computation itself failed (caps, guards, solver).
   */
  ProxStatus_RuntimeError = 2,
  /**
   * A required pointer was null or not valid UTF-8.
   */
  ProxStatus_NullArgument = 3,
} ProxStatus;

/**
 * Opaque scenario handle.
 */
typedef struct ProxScenario ProxScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Owned by the
 * caller; release with `prox_string_free`.
 */
char *prox_last_error(void);

/**
 * Release a string returned by this library. Null is a no-op.
 */
void prox_string_free(char *s);

/**
 * Parse a scenario from its JSON document. Returns null on failure.
 */
struct ProxScenario *prox_scenario_parse(const char *json);

/**
 * Release a scenario handle. Null is a no-op.
 */
void prox_scenario_free(struct ProxScenario *sc);

/**
 * Run the iteration and export the trajectory as CSV.
 */
char *prox_run_csv(const struct ProxScenario *sc, uint64_t steps);

/**
 * Run the iteration and export the trajectory as JSON.
 */
char *prox_run_json(const struct ProxScenario *sc, uint64_t steps);

/**
 * The approximate fixed-point modulus Phi(k), as a decimal string.
 */
char *prox_phi(const struct ProxScenario *sc, uint64_t k);

/**
 * The total-boundedness count alpha(k), as a decimal string.
 */
char *prox_alpha(const struct ProxScenario *sc, uint64_t k);

/**
 * The metastability bound Psi(k, g) as a decimal string. `g` is either the
 * shorthand (`const:N`, `idplus:N`, `doubling`, `table:a,b,c`) or a JSON
 * rate-function AST.
 */
char *prox_psi(const struct ProxScenario *sc, uint64_t k, const char *g);

/**
 * The metastability bound Omega(k, g); see `prox_psi` for the g format.
 */
char *prox_omega(const struct ProxScenario *sc, uint64_t k, const char *g);

/**
 * Certify the Psi bound on one (k, g) trial. `g` uses the shorthand format.
 * Writes whether the trial holds into `holds`; when `report_json` is
 * non-null it receives the full trial report (caller-owned string).
 */
enum ProxStatus prox_certify_psi(const struct ProxScenario *sc,
                                 uint64_t k,
                                 const char *g,
                                 uint64_t search_cap,
                                 bool *holds,
                                 char **report_json);

/**
 * Certify the Omega bound on one (k, g) trial; see `prox_certify_psi`.
 */
enum ProxStatus prox_certify_omega(const struct ProxScenario *sc,
                                   uint64_t k,
                                   const char *g,
                                   uint64_t search_cap,
                                   bool *holds,
                                   char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROXMETA_H */
