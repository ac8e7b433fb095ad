#pragma once
// CSV serialization for scans, shift lists and waveforms. Every file starts
// with a '#' comment stating the units (MHz for frequencies, nm for
// positions, us for times, V for voltages), followed by the mandatory header
// line; readers verify the header and reject malformed rows by line number.
// Numbers are written with %.10g, so identical data produce identical bytes.

#include <string>
#include <vector>

#include "core/localize.hpp"
#include "core/shuttle.hpp"
#include "core/spectro.hpp"

namespace icq::io {

// columns: position_ctrl,emission,stderr (positions written by the CLI are
// nm from a node; the reader accepts any control units)
void write_standing_wave_csv(const std::string& path,
                             const localize::StandingWaveScan& scan);
localize::StandingWaveScan read_standing_wave_csv(const std::string& path);

// columns: delta_c_mhz,emission,stderr
void write_raman_csv(const std::string& path, const spectro::RamanScan& scan);

// columns: delta_p_mhz,delta_mhz,stderr
void write_shift_csv(const std::string& path,
                     const std::vector<spectro::ShiftPoint>& points);
std::vector<spectro::ShiftPoint> read_shift_csv(const std::string& path);

// columns: time_us,voltage_v
void write_waveform_csv(const std::string& path,
                        const std::vector<shuttle::WaveformSample>& samples);

} // namespace icq::io
