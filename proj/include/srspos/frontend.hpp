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

#include <optional>
#include <span>
#include <string>

#include "srspos/common.hpp"
#include "srspos/simchannel.hpp"
#include "srspos/waveform.hpp"

namespace srspos {

/// Stored receiver phase state. The intra-pair offsets come from the
/// offline 1-4-splitter run and survive restarts; the LO differential is
/// re-measured every run.
struct CalibrationTable {
    double intra_pair_offset_a_rad = 0.0;
    double intra_pair_offset_b_rad = 0.0;
    std::optional<double> lo_differential_rad;

    bool complete() const { return lo_differential_rad.has_value(); }

    /// Plain-text record (phases in radians).
    std::string serialize() const;
    static CalibrationTable deserialize(const std::string &text);
};

struct SyncResult {
    std::size_t start_offset = 0;
    double peak_metric = 0.0;
    double cfo_hz = 0.0;
};

/// Maximum-likelihood constant phase between two sequences carrying the
/// same signal: arg(sum a[n] * conj(b[n])).
double estimate_pair_phase(std::span<const cd> ch_a, std::span<const cd> ch_b);

/// Intra-pair offsets from a capture where all four channels carry the
/// same tone: phase(ch0 vs ch1) and phase(ch2 vs ch3).
CalibrationTable offline_calibrate(const MultiChannelCapture &capture_1to4);

/// Measures the per-run LO differential from the cal tone on channels 0
/// and 2, subtracting the stored intra-pair contributions.
CalibrationTable runtime_calibrate(const MultiChannelCapture &capture, const CalibrationTable &table,
                                   const CalToneSpec &tone_spec, const WaveformConfig &config);

/// Rotates channels so all ULA channels share a common phase reference.
MultiChannelCapture apply_phase_compensation(const MultiChannelCapture &capture,
                                             const CalibrationTable &table);

/// Normalized replica cross-correlation along one channel:
/// metric[lag] = |corr| / (||replica|| * ||capture window||), in [0, 1].
std::vector<double> timing_metric(const cvec &channel, const cvec &replica);

/// Timing synchronization by cross-correlation with the stored replica on
/// the reference ULA channel (receiver channel 1).
SyncResult timing_sync(const MultiChannelCapture &capture, const TimeDomainSignal &replica,
                       double threshold = 0.2);

/// CP-based CFO estimate accumulated over the SRS symbols of all full
/// slots after start_offset. Unambiguous range +-scs/2.
double cfo_estimate_cp(const MultiChannelCapture &capture, const WaveformConfig &config,
                       std::size_t start_offset);

/// Rotates every channel by exp(-j*2*pi*cfo*n/fs).
MultiChannelCapture cfo_correct(const MultiChannelCapture &capture, double cfo_hz);

} // namespace srspos
