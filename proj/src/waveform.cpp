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

#include "srspos/waveform.hpp"

#include <algorithm>
#include <map>

#include "srspos/errors.hpp"
#include "srspos/fft.hpp"

namespace srspos {

namespace {

struct CatalogRow {
    ConfigId id;
    double carrier_ghz;
    double scs_khz;
    double bw_mhz;
    int fft;
    int prb;
};

// Carrier / SCS / bandwidth per configuration; FFT size and PRB count
// follow the standard transmission-bandwidth tables for 30/60 kHz SCS.
constexpr std::array<CatalogRow, 8> catalog_rows = {{
    {ConfigId::I, 2.4, 30.0, 20.0, 1024, 51},
    {ConfigId::II, 2.4, 30.0, 50.0, 2048, 133},
    {ConfigId::III, 3.5, 30.0, 20.0, 1024, 51},
    {ConfigId::IV, 3.5, 30.0, 50.0, 2048, 133},
    {ConfigId::V, 3.5, 60.0, 20.0, 512, 24},
    {ConfigId::VI, 3.5, 60.0, 50.0, 1024, 65},
    {ConfigId::VII, 5.8, 60.0, 20.0, 512, 24},
    {ConfigId::VIII, 5.8, 60.0, 50.0, 1024, 65},
}};

constexpr std::array<const char *, 8> config_names = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};

} // namespace

ConfigId config_id_from_string(const std::string &name) {
    for (std::size_t i = 0; i < config_names.size(); ++i)
        if (name == config_names[i])
            return static_cast<ConfigId>(i);
    throw config_error("unknown waveform configuration '" + name + "' (expected I..VIII)");
}

std::string to_string(ConfigId id) { return config_names[static_cast<std::size_t>(id)]; }

int WaveformConfig::cp_length(int symbol_in_slot, int slot_index) const {
    const bool long_cp = symbol_in_slot == 0 && slot_index % slots_per_half_subframe() == 0;
    return long_cp ? cp_lengths[0] : cp_lengths[1];
}

std::size_t WaveformConfig::slot_samples(int slot_index) const {
    std::size_t total = 0;
    for (int l = 0; l < symbols_per_slot; ++l)
        total += symbol_samples(l, slot_index);
    return total;
}

std::size_t WaveformConfig::symbol_offset(int symbol_in_slot, int slot_index) const {
    std::size_t off = 0;
    for (int s = 0; s < slot_index; ++s)
        off += slot_samples(s);
    for (int l = 0; l < symbol_in_slot; ++l)
        off += symbol_samples(l, slot_index);
    return off;
}

WaveformConfig config_from_catalog(ConfigId id) {
    const auto idx = static_cast<std::size_t>(id);
    if (idx >= catalog_rows.size())
        throw config_error("waveform configuration id out of range");
    const CatalogRow &row = catalog_rows[idx];

    WaveformConfig cfg;
    cfg.config_id       = row.id;
    cfg.carrier_freq_hz = row.carrier_ghz * 1e9;
    cfg.scs_hz          = row.scs_khz * 1e3;
    cfg.bandwidth_hz    = row.bw_mhz * 1e6;
    cfg.fft_size        = row.fft;
    cfg.num_prb         = row.prb;
    cfg.sample_rate_hz  = cfg.scs_hz * cfg.fft_size;

    // Normal CP scaled to the FFT size; the first symbol of each
    // half-subframe absorbs the residual so a half-subframe is exactly
    // 0.5 ms of samples.
    const int cp_short = 144 * cfg.fft_size / 2048;
    const auto half_subframe_samples = static_cast<std::size_t>(cfg.sample_rate_hz / 2000.0);
    const int syms_per_half = symbols_per_slot * cfg.slots_per_half_subframe();
    const int cp_long = cp_short + static_cast<int>(half_subframe_samples -
                                                    static_cast<std::size_t>(syms_per_half) *
                                                        static_cast<std::size_t>(cfg.fft_size + cp_short));
    cfg.cp_lengths.assign(symbols_per_slot, cp_short);
    cfg.cp_lengths[0] = cp_long;
    return cfg;
}

std::vector<WaveformConfig> full_catalog() {
    std::vector<WaveformConfig> out;
    out.reserve(catalog_rows.size());
    for (const CatalogRow &row : catalog_rows)
        out.push_back(config_from_catalog(row.id));
    return out;
}

int largest_prime_leq(int n) {
    auto is_prime = [](int k) {
        if (k < 2)
            return false;
        for (int d = 2; d * d <= k; ++d)
            if (k % d == 0)
                return false;
        return true;
    };
    while (!is_prime(n))
        --n;
    return n;
}

cvec generate_srs_sequence(const WaveformConfig &config, int symbol_index) {
    const bool in_set = std::find(config.srs_symbols.begin(), config.srs_symbols.end(), symbol_index) !=
                        config.srs_symbols.end();
    if (!in_set)
        throw usage_error("SRS sequence requested for non-SRS symbol " + std::to_string(symbol_index));

    const int m_sc = config.pilots_per_symbol();
    const int n_zc = largest_prime_leq(m_sc);
    // Distinct root per SRS symbol. A cyclic shift of a chirp is just a
    // time shift of the OFDM symbol and would leave strong timing-metric
    // sidelobes; hopping the root keeps the cross-symbol correlation at
    // the 1/sqrt(n_zc) floor for every lag.
    const int q = 1 + (config.zc_root - 1 + symbol_index) % (n_zc - 1);

    cvec seq(static_cast<std::size_t>(m_sc));
    for (int n = 0; n < m_sc; ++n) {
        const long m = static_cast<long>(n) % n_zc;
        const double phase = -pi * static_cast<double>(q) * static_cast<double>(m) *
                             static_cast<double>(m + 1) / static_cast<double>(n_zc);
        seq[static_cast<std::size_t>(n)] = std::polar(1.0, phase);
    }
    return seq;
}

ResourceGrid empty_grid(const WaveformConfig &config, int num_slots) {
    if (num_slots < 1)
        throw usage_error("grid needs at least one slot");
    ResourceGrid grid;
    grid.num_subcarriers = config.num_subcarriers();
    grid.num_symbols     = num_slots * symbols_per_slot;
    grid.data.assign(static_cast<std::size_t>(grid.num_symbols),
                     cvec(static_cast<std::size_t>(grid.num_subcarriers), cd{0.0, 0.0}));
    grid.used_mask.assign(static_cast<std::size_t>(grid.num_symbols),
                          std::vector<bool>(static_cast<std::size_t>(grid.num_subcarriers), false));
    for (int l = 0; l < grid.num_symbols; ++l) {
        if (!config.is_srs_symbol(l % symbols_per_slot))
            continue;
        for (int k = config.comb_offset; k < grid.num_subcarriers; k += config.comb_ktc)
            grid.used_mask[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = true;
    }
    return grid;
}

ResourceGrid build_srs_grid(const WaveformConfig &config, int num_slots) {
    ResourceGrid grid = empty_grid(config, num_slots);
    for (int slot = 0; slot < num_slots; ++slot) {
        for (int sym : config.srs_symbols) {
            const cvec seq = generate_srs_sequence(config, sym);
            const int l    = slot * symbols_per_slot + sym;
            for (int p = 0; p < config.pilots_per_symbol(); ++p) {
                const int k = config.comb_offset + p * config.comb_ktc;
                grid.at(k, l) = seq[static_cast<std::size_t>(p)];
            }
        }
    }
    return grid;
}

TimeDomainSignal ofdm_modulate(const ResourceGrid &grid, const WaveformConfig &config) {
    const int K = grid.num_subcarriers;
    const int N = config.fft_size;
    if (K > N)
        throw config_error("resource grid wider than the FFT size");

    std::size_t total = 0;
    for (int l = 0; l < grid.num_symbols; ++l)
        total += config.symbol_samples(l % symbols_per_slot, l / symbols_per_slot);

    TimeDomainSignal sig;
    sig.sample_rate_hz = config.sample_rate_hz;
    sig.samples.assign(total, cd{0.0, 0.0});

    cvec bins(static_cast<std::size_t>(N));
    std::size_t pos = 0;
    for (int l = 0; l < grid.num_symbols; ++l) {
        std::fill(bins.begin(), bins.end(), cd{0.0, 0.0});
        // Center mapping: subcarrier k sits at frequency index k - K/2.
        for (int k = 0; k < K; ++k) {
            const int f   = k - K / 2;
            const int bin = (f + N) % N;
            bins[static_cast<std::size_t>(bin)] = grid.at(k, l);
        }
        fft_inplace(bins.data(), static_cast<std::size_t>(N), true);
        const double scale = 1.0 / std::sqrt(static_cast<double>(N));

        const int cp = config.cp_length(l % symbols_per_slot, l / symbols_per_slot);
        for (int n = 0; n < cp; ++n)
            sig.samples[pos + static_cast<std::size_t>(n)] =
                bins[static_cast<std::size_t>(N - cp + n)] * scale;
        for (int n = 0; n < N; ++n)
            sig.samples[pos + static_cast<std::size_t>(cp + n)] = bins[static_cast<std::size_t>(n)] * scale;
        pos += static_cast<std::size_t>(cp + N);
    }
    return sig;
}

ResourceGrid ofdm_demodulate(const TimeDomainSignal &signal, const WaveformConfig &config,
                             std::size_t start_offset, int num_slots) {
    const int N = config.fft_size;
    const int K = config.num_subcarriers();

    std::size_t needed = 0;
    for (int slot = 0; slot < num_slots; ++slot)
        needed += config.slot_samples(slot);
    if (start_offset + needed > signal.samples.size())
        throw truncation_error("capture too short: need " + std::to_string(start_offset + needed) +
                               " samples, have " + std::to_string(signal.samples.size()));

    ResourceGrid grid = empty_grid(config, num_slots);
    cvec bins(static_cast<std::size_t>(N));
    std::size_t pos = start_offset;
    for (int l = 0; l < grid.num_symbols; ++l) {
        const int cp = config.cp_length(l % symbols_per_slot, l / symbols_per_slot);
        for (int n = 0; n < N; ++n)
            bins[static_cast<std::size_t>(n)] = signal.samples[pos + static_cast<std::size_t>(cp + n)];
        fft_inplace(bins.data(), static_cast<std::size_t>(N), false);
        const double scale = 1.0 / std::sqrt(static_cast<double>(N));
        for (int k = 0; k < K; ++k) {
            const int f   = k - K / 2;
            const int bin = (f + N) % N;
            grid.at(k, l) = bins[static_cast<std::size_t>(bin)] * scale;
        }
        pos += static_cast<std::size_t>(cp + N);
    }
    return grid;
}

} // namespace srspos
