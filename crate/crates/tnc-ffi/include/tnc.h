#ifndef TNC_H
#define TNC_H

/* Generated by cbindgen from the tnc-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an interface call.
typedef enum TncStatus {
  TncStatus_Ok = 0,
  TncStatus_NullArgument = 1,
  TncStatus_InvalidUtf8 = 2,
  TncStatus_Parse = 3,
  TncStatus_Compile = 4,
  TncStatus_Simulate = 5,
  TncStatus_Verify = 6,
  TncStatus_Estimate = 7,
  TncStatus_Internal = 8,
} TncStatus;

// A compiled transcriptional network together with the file it came from.
typedef struct TncNetwork TncNetwork;

// A parsed system file: the source ODEs plus events, bindings, and
// simulation settings.
typedef struct TncSystem TncSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse system-file text into a handle. `text` may describe either an ODE
// system or a reaction network in the `.crn` dialect.
enum TncStatus tnc_system_parse(const char *text, struct TncSystem **out);

void tnc_system_free(struct TncSystem *sys);

// Compile the system into a transcriptional network. `gamma` may be null,
// in which case the file's `gamma` line applies, or failing that an
// estimate from the original trajectory with safety margin 1.1.
enum TncStatus tnc_system_compile(const struct TncSystem *sys,
                                  const char *gamma,
                                  bool warmup,
                                  struct TncNetwork **out);

void tnc_network_free(struct TncNetwork *net);

// Render the network in the system-file format, suitable for reloading.
enum TncStatus tnc_network_print(const struct TncNetwork *net, char **out);

// Simulate the original system and return the trajectory as CSV text.
// Pass `t_end <= 0` or `points == 0` to keep the file's settings.
enum TncStatus tnc_system_simulate_csv(const struct TncSystem *sys,
                                       double t_end,
                                       uint32_t points,
                                       char **out);

// Simulate the network and return the raw species trajectory as CSV text.
enum TncStatus tnc_network_simulate_csv(const struct TncNetwork *net,
                                        double t_end,
                                        uint32_t points,
                                        char **out);

// Simulate the network and return the ratio view, the reconstruction of
// the original variables from the pair species, as CSV text.
enum TncStatus tnc_network_ratio_csv(const struct TncNetwork *net,
                                     double t_end,
                                     uint32_t points,
                                     char **out);

// Run the verification battery of the network against its source system.
// `passed` receives the verdict; the report text is line-oriented
// `key = value` pairs. Pass tolerances `<= 0` for the defaults.
enum TncStatus tnc_network_verify(const struct TncNetwork *net,
                                  double ratio_tol,
                                  double slack,
                                  char **report,
                                  bool *passed);

// Estimate a sufficient decay constant from the original trajectory and
// return it as an exact rational string. A `margin <= 0` means 1.1.
enum TncStatus tnc_system_estimate_gamma(const struct TncSystem *sys, double margin, char **out);

// Release a string returned through an out parameter.
void tnc_string_free(char *text);

// Message for the most recent failure on this thread. The pointer stays
// valid until the next interface call from the same thread.
const char *tnc_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TNC_H */
