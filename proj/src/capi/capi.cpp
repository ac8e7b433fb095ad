#include "icavity/icavity.h"

#include <cstring>
#include <new>
#include <string>

#include "core/error.hpp"
#include "core/localize.hpp"
#include "core/model.hpp"
#include "core/shuttle.hpp"
#include "core/units.hpp"
#include "io/config.hpp"
#include "io/run.hpp"

struct icq_session {
  icq::io::Config config;
};

namespace {

thread_local std::string g_last_error;

template <typename Body>
icq_status guarded(const Body& body) {
  try {
    body();
    g_last_error.clear();
    return ICQ_OK;
  } catch (const icq::Error& err) {
    g_last_error = err.what();
    return err.kind() == icq::ErrorKind::validation ? ICQ_STATUS_VALIDATION
                                                    : ICQ_STATUS_NUMERICAL;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ICQ_STATUS_NUMERICAL;
  } catch (const std::exception& err) {
    g_last_error = err.what();
    return ICQ_STATUS_NUMERICAL;
  }
}

icq::io::Config& config_of(icq_session* session) {
  icq::require(session != nullptr, "null session handle");
  return session->config;
}

const char* checked(const char* text, const char* what) {
  icq::require(text != nullptr, std::string("null ") + what);
  return text;
}

std::string optional_path(const char* path) {
  return path == nullptr ? std::string() : std::string(path);
}

void copy_out(char** slot, const std::string& text) {
  if (slot == nullptr) return;
  char* copy = new char[text.size() + 1];
  std::memcpy(copy, text.c_str(), text.size() + 1);
  *slot = copy;
}

void clear_out(char** slot) {
  if (slot != nullptr) *slot = nullptr;
}

template <typename Out>
Out* checked_out(Out* out) {
  icq::require(out != nullptr, "null output pointer");
  return out;
}

} // namespace

extern "C" {

const char* icq_version(void) { return "1.0.0"; }

const char* icq_last_error(void) { return g_last_error.c_str(); }

icq_session* icq_session_new(void) {
  try {
    icq_session* session = new icq_session{};
    g_last_error.clear();
    return session;
  } catch (...) {
    g_last_error = "out of memory";
    return nullptr;
  }
}

void icq_session_free(icq_session* session) { delete session; }

icq_status icq_session_load(icq_session* session, const char* config_path) {
  return guarded([&] {
    config_of(session).apply_file(checked(config_path, "config path"));
  });
}

icq_status icq_session_apply(icq_session* session, const char* config_json) {
  return guarded([&] {
    config_of(session).apply_text(checked(config_json, "config text"));
  });
}

icq_status icq_session_set(icq_session* session, const char* key,
                           const char* value) {
  return guarded([&] {
    config_of(session).set(checked(key, "config key"), checked(value, "config value"));
  });
}

icq_status icq_session_dump(icq_session* session, char** json_out) {
  clear_out(json_out);
  return guarded([&] {
    copy_out(checked_out(json_out), config_of(session).to_json());
  });
}

void icq_string_free(char* text) { delete[] text; }

icq_status icq_thermal_spread_nm(icq_session* session, double temperature_mk,
                                 double* out_nm) {
  return guarded([&] {
    const icq::model::SystemParams params = config_of(session).system_params();
    const double sigma =
        icq::localize::thermal_sigma(temperature_mk * 1.0e-3, params.trap);
    *checked_out(out_nm) = icq::localize::spread(sigma) / icq::units::nm;
  });
}

icq_status icq_effective_coupling_mhz(icq_session* session, double sigma_nm,
                                      double* out_mhz) {
  return guarded([&] {
    const icq::model::SystemParams params = config_of(session).system_params();
    const double g = icq::localize::effective_coupling(
        params.cavity.g0, sigma_nm * icq::units::nm, params.cavity.wavenumber());
    *checked_out(out_mhz) = icq::units::rad_to_mhz(g);
  });
}

icq_status icq_photon_probability(icq_session* session, double* out_probability) {
  return guarded([&] {
    const icq::io::Config& config = config_of(session);
    const icq::model::SystemParams params = config.system_params();
    *checked_out(out_probability) = icq::model::photon_probability(
        params, config.number("duration_us") * icq::units::us,
        config.number("tol"));
  });
}

icq_status icq_window_value(double t_us, double duration_us, double* out) {
  return guarded([&] {
    *checked_out(out) =
        icq::shuttle::bnw(t_us * icq::units::us, duration_us * icq::units::us);
  });
}

icq_status icq_run_standing_wave(icq_session* session, const char* csv_path,
                                 const char* svg_path, char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_standing_wave(config_of(session), optional_path(csv_path),
                                        optional_path(svg_path)));
  });
}

icq_status icq_run_raman_scan(icq_session* session, const char* csv_path,
                              const char* svg_path, char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_raman_scan(config_of(session), optional_path(csv_path),
                                     optional_path(svg_path)));
  });
}

icq_status icq_run_delta_map(icq_session* session, const char* json_path,
                             char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_delta_map(config_of(session), optional_path(json_path)));
  });
}

icq_status icq_run_fit_g0(icq_session* session, const char* report_path,
                          char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_fit_g0(config_of(session), optional_path(report_path)));
  });
}

icq_status icq_run_waveform(icq_session* session, const char* csv_path,
                            const char* report_path, char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_waveform(config_of(session), optional_path(csv_path),
                                   optional_path(report_path)));
  });
}

icq_status icq_run_sequence(icq_session* session, int check_rate,
                            const char* json_path, char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out,
             icq::io::run_sequence(config_of(session), check_rate != 0,
                                   optional_path(json_path)));
  });
}

icq_status icq_run_selftest(icq_session* session, char** summary_out) {
  clear_out(summary_out);
  return guarded([&] {
    copy_out(summary_out, icq::io::run_selftest(config_of(session)));
  });
}

} // extern "C"
