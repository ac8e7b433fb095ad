#ifndef ICAVITY_H
#define ICAVITY_H

/* C interface to the ion-cavity simulation library.
 *
 * A session owns one flat configuration (see the `selftest` tool or
 * icq_session_dump for the full key table).  All functions returning
 * icq_status leave a human-readable message in icq_last_error() on failure;
 * the message is thread-local and cleared by the next successful call on the
 * same thread.
 *
 * Unit conventions at this boundary match the configuration file: frequencies
 * in MHz (omega / 2 pi), positions in nm, times in us, temperatures in mK,
 * voltages in V.
 *
 * Strings returned through a char** parameter are owned by the caller and
 * must be released with icq_string_free().
 */

#if defined(_WIN32)
#define ICQ_API
#else
#define ICQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the command-line tool uses them verbatim as exit codes. */
typedef enum icq_status {
  ICQ_OK = 0,
  ICQ_STATUS_VALIDATION = 2, /* inconsistent parameters or input data */
  ICQ_STATUS_NUMERICAL = 3   /* a well-posed computation failed to converge */
} icq_status;

ICQ_API const char* icq_version(void);

/* Message for this thread's most recent failure; "" after a success. */
ICQ_API const char* icq_last_error(void);

typedef struct icq_session icq_session;

/* A fresh session carries the measured-system defaults (g0 17.3 MHz,
 * kappa 8.2 MHz, gamma 11.5 MHz, ...).  Returns NULL only on allocation
 * failure.  Sessions are not thread-safe; share nothing or lock. */
ICQ_API icq_session* icq_session_new(void);
ICQ_API void icq_session_free(icq_session* session);

/* Merge a JSON configuration file / literal over the current values.
 * Unknown keys and type mismatches are rejected by name. */
ICQ_API icq_status icq_session_load(icq_session* session, const char* config_path);
ICQ_API icq_status icq_session_apply(icq_session* session, const char* config_json);

/* One key=value override; the value string is parsed per the key's type. */
ICQ_API icq_status icq_session_set(icq_session* session, const char* key,
                                   const char* value);

/* Full configuration as a JSON object in schema order. */
ICQ_API icq_status icq_session_dump(icq_session* session, char** json_out);

ICQ_API void icq_string_free(char* text);

/* ---- direct quantities ------------------------------------------------- */

/* rms spread (sqrt(2) sigma) of the thermal position distribution at the
 * session's trap parameters. */
ICQ_API icq_status icq_thermal_spread_nm(icq_session* session,
                                         double temperature_mk, double* out_nm);

/* First-moment effective coupling <g> at an antinode for a Gaussian
 * localisation width sigma. */
ICQ_API icq_status icq_effective_coupling_mhz(icq_session* session,
                                              double sigma_nm, double* out_mhz);

/* Photons emitted through the cavity mirrors during one probe window, for a
 * point-localised ion at the session's position parameters. */
ICQ_API icq_status icq_photon_probability(icq_session* session,
                                          double* out_probability);

/* Blackman-Nuttall window value at time t inside a flank of length
 * `duration`; 0 outside, 1 at the centre.  Session-free. */
ICQ_API icq_status icq_window_value(double t_us, double duration_us, double* out);

/* ---- scenario runners -------------------------------------------------- */
/* Each runner writes the listed artifacts (a NULL or empty path skips that
 * file) and, when summary_out is non-NULL, returns the same JSON summary the
 * command-line tool prints. */

/* Standing-wave emission scan, optionally fitted (config keys sw_*). */
ICQ_API icq_status icq_run_standing_wave(icq_session* session,
                                         const char* csv_path,
                                         const char* svg_path,
                                         char** summary_out);

/* Raman-resonance scan at the configured probe detuning, with Lorentzian
 * fit and extracted shift (config keys raman_*). */
ICQ_API icq_status icq_run_raman_scan(icq_session* session, const char* csv_path,
                                      const char* svg_path, char** summary_out);

/* Shift-versus-coupling map over the configured grids (config keys map_*). */
ICQ_API icq_status icq_run_delta_map(icq_session* session, const char* json_path,
                                     char** summary_out);

/* Coupling fit: measured shifts (config key shifts_csv) against a persisted
 * map (config key map_json). */
ICQ_API icq_status icq_run_fit_g0(icq_session* session, const char* report_path,
                                  char** summary_out);

/* Shuttle waveform samples plus the spectral-leakage adiabaticity report
 * (config keys shuttle_*, leakage_freqs_mhz). */
ICQ_API icq_status icq_run_waveform(icq_session* session, const char* csv_path,
                                    const char* report_path, char** summary_out);

/* Pulse-sequence phase table (config keys seq_*).  check_rate != 0 verifies
 * the cycle total against the configured rate, defaulting to the published
 * 91 kHz when none is set. */
ICQ_API icq_status icq_run_sequence(icq_session* session, int check_rate,
                                    const char* json_path, char** summary_out);

/* Fast internal consistency checks; fails on the first broken invariant. */
ICQ_API icq_status icq_run_selftest(icq_session* session, char** summary_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ICAVITY_H */
