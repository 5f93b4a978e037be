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
#include <cstddef>
#include <string>
#include <vector>

#include "srspos/common.hpp"

namespace srspos {

/// The eight supported uplink waveform configurations.
enum class ConfigId { I, II, III, IV, V, VI, VII, VIII };

ConfigId config_id_from_string(const std::string &name);
std::string to_string(ConfigId id);

inline constexpr int symbols_per_slot = 14;

/// One waveform configuration: the catalog row (carrier / SCS / bandwidth)
/// plus the derived CP-OFDM numerology.
struct WaveformConfig {
    ConfigId config_id = ConfigId::I;
    double carrier_freq_hz = 0.0;
    double scs_hz          = 0.0;
    double bandwidth_hz    = 0.0;
    double sample_rate_hz  = 0.0;
    int fft_size = 0;
    int num_prb  = 0;
    int comb_ktc = 2;
    int comb_offset = 0;
    std::array<int, 4> srs_symbols = {0, 1, 2, 3};
    int zc_root = 25;

    /// Per-symbol CP lengths for a slot that opens a half-subframe
    /// (entry 0 holds the long CP).
    std::vector<int> cp_lengths;

    int num_subcarriers() const { return num_prb * 12; }
    int pilots_per_symbol() const { return num_subcarriers() / comb_ktc; }

    /// Slots per half-subframe: 1 at 30 kHz SCS, 2 at 60 kHz.
    int slots_per_half_subframe() const { return static_cast<int>(scs_hz / 30.0e3); }

    /// Effective CP of a symbol. Only the first symbol of a half-subframe
    /// carries the long CP; other slots start with the short CP.
    int cp_length(int symbol_in_slot, int slot_index) const;

    /// Sample count of one slot at the given slot index.
    std::size_t slot_samples(int slot_index) const;
    std::size_t symbol_samples(int symbol_in_slot, int slot_index) const {
        return static_cast<std::size_t>(fft_size + cp_length(symbol_in_slot, slot_index));
    }

    /// Offset of a symbol from the start of its multi-slot signal.
    std::size_t symbol_offset(int symbol_in_slot, int slot_index) const;

    bool is_srs_symbol(int symbol_in_slot) const {
        return symbol_in_slot >= srs_symbols[0] && symbol_in_slot <= srs_symbols[3];
    }
};

/// Frequency-domain pilot container covering num_slots * 14 symbols.
struct ResourceGrid {
    int num_subcarriers = 0;
    int num_symbols     = 0;
    /// Column-major per symbol: data[l][k].
    std::vector<cvec> data;
    std::vector<std::vector<bool>> used_mask;

    cd &at(int subcarrier, int symbol) { return data[symbol][subcarrier]; }
    const cd &at(int subcarrier, int symbol) const { return data[symbol][subcarrier]; }
    bool used(int subcarrier, int symbol) const { return used_mask[symbol][subcarrier]; }
};

struct TimeDomainSignal {
    cvec samples;
    double sample_rate_hz = 0.0;
};

/// Returns the fully derived configuration for one catalog row.
WaveformConfig config_from_catalog(ConfigId id);

/// All eight catalog entries, in order I..VIII.
std::vector<WaveformConfig> full_catalog();

/// Low-PAPR SRS pilot sequence for one SRS symbol: Zadoff-Chu base
/// sequence of the largest prime length <= pilot count, cyclically
/// extended. Each SRS symbol hops the root so the four symbols of a
/// slot decorrelate in the timing metric.
cvec generate_srs_sequence(const WaveformConfig &config, int symbol_index);

/// Pilot grid over num_slots slots: comb-K_TC subcarriers of the first
/// four symbols of every slot, all other entries zero.
ResourceGrid build_srs_grid(const WaveformConfig &config, int num_slots);

/// Empty grid of matching dimensions (all zeros, SRS mask set).
ResourceGrid empty_grid(const WaveformConfig &config, int num_slots);

/// CP-OFDM modulation: per symbol, center-map the subcarriers into the
/// FFT, inverse transform (unitary), prepend the cyclic prefix.
TimeDomainSignal ofdm_modulate(const ResourceGrid &grid, const WaveformConfig &config);

/// Inverse of ofdm_modulate at the correct start offset: strip CP,
/// forward transform, extract the occupied band.
ResourceGrid ofdm_demodulate(const TimeDomainSignal &signal, const WaveformConfig &config,
                             std::size_t start_offset, int num_slots);

/// Largest prime <= n (n >= 2).
int largest_prime_leq(int n);

} // namespace srspos
