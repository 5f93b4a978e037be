// SPDX-License-Identifier: Apache-2.0
//
// srspos - single-anchor positioning laboratory with 5G SRS waveforms
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <optional>
#include <string>

#include "srspos/common.hpp"
#include "srspos/waveform.hpp"

namespace srspos {

inline constexpr int num_rx_channels = 4;

/// Three-element half-wavelength ULA fed into three of the four receiver
/// channels. Channel pairs {0,1} and {2,3} share a daughterboard.
struct UlaGeometry {
    int num_elements = 3;
    double element_spacing_wavelengths = 0.5;
    /// Receiver channel carrying each ULA element. Channel 0 is reserved
    /// for the dedicated cal-tone feed.
    std::array<int, 3> element_channel_map = {1, 2, 3};
};

/// Receiver impairments the calibration procedure must undo.
/// The intra-pair offsets rotate channels 0 (pair A) and 2 (pair B)
/// against their pair partners; the LO differential rotates both pair-B
/// channels and is redrawn every run.
struct ImpairmentState {
    double intra_pair_offset_a_rad = 0.0;
    double intra_pair_offset_b_rad = 0.0;
    double lo_differential_rad = 0.0;
    double cfo_hz = 0.0;
    std::size_t timing_offset_samples = 0;
    /// Per-occupied-subcarrier SNR on ULA element 0. +infinity disables noise.
    double snr_db = std::numeric_limits<double>::infinity();

    bool noiseless() const { return std::isinf(snr_db) && snr_db > 0; }
};

/// One propagation ray. The number of rays is the channel order the
/// receiver should recover.
struct Ray {
    double aoa_deg = 0.0;
    double delay_samples = 0.0;
    cd complex_gain = {1.0, 0.0};
};

/// Continuous calibration tone on an SRS-empty comb subcarrier.
struct CalToneSpec {
    /// Grid subcarrier index; must satisfy k mod comb_ktc != comb_offset.
    int subcarrier = 0;
    /// Time-domain amplitude; <= 0 selects the default, which puts the
    /// tone bin ~12 dB above a pilot bin.
    double amplitude = 0.0;

    double effective_amplitude(const WaveformConfig &config) const {
        return amplitude > 0.0 ? amplitude : 4.0 / std::sqrt(static_cast<double>(config.fft_size));
    }

    /// Default spec: odd subcarrier next to the band center.
    static CalToneSpec default_for(const WaveformConfig &config);
};

/// Four-channel baseband capture.
struct MultiChannelCapture {
    std::array<cvec, num_rx_channels> channels;
    double sample_rate_hz = 0.0;

    std::size_t num_samples() const { return channels[0].size(); }
};

/// Array response for a plane wave from `aoa_deg` off broadside:
/// element m = exp(+j * 2*pi * spacing * m * sin(aoa)).
cvec steering_vector(double aoa_deg, const UlaGeometry &geometry);

/// Complex exponential at the tone subcarrier's baseband frequency.
/// Rejects subcarriers occupied by the SRS comb.
TimeDomainSignal generate_cal_tone(const WaveformConfig &config, const CalToneSpec &spec,
                                   std::size_t num_samples);

/// Multi-ray reception on the ULA with N310-like impairments. Layout per
/// the calibration wiring model: channel 0 carries only the cal tone,
/// channel 2 carries ULA element 1 plus the tone, channels 1 and 3 carry
/// elements 0 and 2. The tone spans the capture after the noise-only
/// timing prefix.
MultiChannelCapture simulate_reception(const TimeDomainSignal &tx, const std::vector<Ray> &rays,
                                       const UlaGeometry &geometry, const ImpairmentState &impairments,
                                       const std::optional<CalToneSpec> &cal_tone,
                                       const WaveformConfig &config, std::uint64_t seed);

/// Offline calibration capture: a 1-4 splitter feeds the same tone into
/// all four channels. snr_db is tone-relative; +infinity disables noise.
MultiChannelCapture simulate_splitter_capture(const WaveformConfig &config, const CalToneSpec &spec,
                                              const ImpairmentState &impairments, std::size_t num_samples,
                                              double snr_db, std::uint64_t seed);

/// Applies integer + fractional (frequency-domain phase ramp) delay.
cvec delay_signal(const cvec &x, double delay_samples);

} // namespace srspos
