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

#include "srspos/frontend.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "srspos/errors.hpp"
#include "srspos/fft.hpp"

namespace srspos {

std::string CalibrationTable::serialize() const {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "intra_pair_offset_a_rad = %.17g\n", intra_pair_offset_a_rad);
    out += buf;
    std::snprintf(buf, sizeof(buf), "intra_pair_offset_b_rad = %.17g\n", intra_pair_offset_b_rad);
    out += buf;
    if (lo_differential_rad) {
        std::snprintf(buf, sizeof(buf), "lo_differential_rad = %.17g\n", *lo_differential_rad);
        out += buf;
    }
    return out;
}

CalibrationTable CalibrationTable::deserialize(const std::string &text) {
    CalibrationTable table;
    std::istringstream in(text);
    std::string line;
    bool have_a = false;
    bool have_b = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "intra_pair_offset_a_rad") {
            table.intra_pair_offset_a_rad = std::stod(val);
            have_a = true;
        } else if (key == "intra_pair_offset_b_rad") {
            table.intra_pair_offset_b_rad = std::stod(val);
            have_b = true;
        } else if (key == "lo_differential_rad") {
            table.lo_differential_rad = std::stod(val);
        }
    }
    if (!have_a || !have_b)
        throw format_error("calibration record missing intra-pair offsets");
    return table;
}

double estimate_pair_phase(std::span<const cd> ch_a, std::span<const cd> ch_b) {
    if (ch_a.size() != ch_b.size())
        throw usage_error("pair phase estimate needs equal-length sequences");
    if (ch_a.size() < 64)
        throw usage_error("pair phase estimate needs at least 64 samples");

    cd acc{0.0, 0.0};
    double e_a = 0.0;
    double e_b = 0.0;
    for (std::size_t n = 0; n < ch_a.size(); ++n) {
        acc += ch_a[n] * std::conj(ch_b[n]);
        e_a += std::norm(ch_a[n]);
        e_b += std::norm(ch_b[n]);
    }
    const double denom = std::sqrt(e_a * e_b);
    if (denom <= 0.0)
        throw low_confidence_error("pair phase estimate on all-zero input");
    // Incoherent sequences give |acc|/denom ~ 1/sqrt(N); require 10x that.
    const double coherence = std::abs(acc) / denom;
    const double floor = 10.0 / std::sqrt(static_cast<double>(ch_a.size()));
    if (coherence < floor)
        throw low_confidence_error("pair correlation magnitude near the noise floor");
    return std::arg(acc);
}

CalibrationTable offline_calibrate(const MultiChannelCapture &capture_1to4) {
    CalibrationTable table;
    table.intra_pair_offset_a_rad = estimate_pair_phase(capture_1to4.channels[0], capture_1to4.channels[1]);
    table.intra_pair_offset_b_rad = estimate_pair_phase(capture_1to4.channels[2], capture_1to4.channels[3]);
    return table;
}

namespace {

/// Tone-bin projections over consecutive FFT-length windows.
std::vector<cd> tone_projections(const cvec &channel, const WaveformConfig &config,
                                 const CalToneSpec &spec) {
    const auto window = static_cast<std::size_t>(config.fft_size);
    const int f       = spec.subcarrier - config.num_subcarriers() / 2;
    const double step = two_pi * static_cast<double>(f) / static_cast<double>(config.fft_size);
    std::vector<cd> projections;
    projections.reserve(channel.size() / window);
    for (std::size_t base = 0; base + window <= channel.size(); base += window) {
        cd acc{0.0, 0.0};
        for (std::size_t n = 0; n < window; ++n)
            acc += channel[base + n] * std::polar(1.0, -step * static_cast<double>(base + n));
        projections.push_back(acc / std::sqrt(static_cast<double>(window)));
    }
    return projections;
}

} // namespace

CalibrationTable runtime_calibrate(const MultiChannelCapture &capture, const CalibrationTable &table,
                                   const CalToneSpec &tone_spec, const WaveformConfig &config) {
    const std::vector<cd> p0 = tone_projections(capture.channels[0], config, tone_spec);
    const std::vector<cd> p2 = tone_projections(capture.channels[2], config, tone_spec);
    if (p0.size() < 2)
        throw calibration_failure("capture too short for tone isolation");

    cd acc{0.0, 0.0};
    double e0 = 0.0;
    double e2 = 0.0;
    for (std::size_t w = 0; w < p0.size(); ++w) {
        acc += p2[w] * std::conj(p0[w]);
        e0 += std::norm(p0[w]);
        e2 += std::norm(p2[w]);
    }
    if (e0 <= 0.0 || e2 <= 0.0)
        throw calibration_failure("cal tone absent on channel 0 or 2");
    const double coherence = std::abs(acc) / std::sqrt(e0 * e2);
    if (coherence < 0.5)
        throw calibration_failure("cal tone too weak for a reliable LO measurement");

    // arg(acc) = (intra_b + lo) - intra_a per the wiring model.
    const double raw = std::arg(acc);
    CalibrationTable out = table;
    out.lo_differential_rad =
        wrap_phase(raw - table.intra_pair_offset_b_rad + table.intra_pair_offset_a_rad);
    return out;
}

MultiChannelCapture apply_phase_compensation(const MultiChannelCapture &capture,
                                             const CalibrationTable &table) {
    if (!table.complete())
        throw usage_error("phase compensation needs a complete calibration table (intra + LO)");
    const double lo = *table.lo_differential_rad;

    MultiChannelCapture out = capture;
    const cd r0 = std::polar(1.0, -table.intra_pair_offset_a_rad);
    const cd r2 = std::polar(1.0, -(table.intra_pair_offset_b_rad + lo));
    const cd r3 = std::polar(1.0, -lo);
    for (cd &v : out.channels[0])
        v *= r0;
    for (cd &v : out.channels[2])
        v *= r2;
    for (cd &v : out.channels[3])
        v *= r3;
    return out;
}

std::vector<double> timing_metric(const cvec &channel, const cvec &replica) {
    const std::vector<cd> corr = cross_correlate(channel, replica);

    // Sliding window energy via prefix sums.
    std::vector<double> prefix(channel.size() + 1, 0.0);
    for (std::size_t n = 0; n < channel.size(); ++n)
        prefix[n + 1] = prefix[n] + std::norm(channel[n]);
    const double e_replica = energy(replica);

    std::vector<double> metric(corr.size(), 0.0);
    for (std::size_t lag = 0; lag < corr.size(); ++lag) {
        const double e_win = prefix[lag + replica.size()] - prefix[lag];
        const double denom = std::sqrt(e_replica * e_win);
        metric[lag] = denom > 0.0 ? std::abs(corr[lag]) / denom : 0.0;
    }
    return metric;
}

SyncResult timing_sync(const MultiChannelCapture &capture, const TimeDomainSignal &replica,
                       double threshold) {
    // Reference: the pair-A ULA channel, which never carries the cal tone.
    const cvec &ref = capture.channels[1];
    if (replica.samples.empty() || replica.samples.size() >= ref.size())
        throw usage_error("replica must be shorter than the capture");

    const std::vector<double> metric = timing_metric(ref, replica.samples);
    const auto it = std::max_element(metric.begin(), metric.end());
    SyncResult result;
    result.start_offset = static_cast<std::size_t>(std::distance(metric.begin(), it));
    result.peak_metric  = *it;
    if (result.peak_metric < threshold)
        throw sync_failure("correlation peak " + std::to_string(result.peak_metric) +
                           " below threshold " + std::to_string(threshold));
    return result;
}

double cfo_estimate_cp(const MultiChannelCapture &capture, const WaveformConfig &config,
                       std::size_t start_offset) {
    const auto fft = static_cast<std::size_t>(config.fft_size);
    const std::size_t n_total = capture.num_samples();

    cd acc{0.0, 0.0};
    int symbols_used = 0;
    for (int slot = 0;; ++slot) {
        bool any = false;
        for (int l : config.srs_symbols) {
            const std::size_t sym_begin = start_offset + config.symbol_offset(l, slot);
            const auto cp = static_cast<std::size_t>(config.cp_length(l, slot));
            if (sym_begin + cp + fft > n_total)
                continue;
            any = true;
            ++symbols_used;
            for (int m = 0; m < 3; ++m) {
                const cvec &ch = capture.channels[static_cast<std::size_t>(m + 1)];
                for (std::size_t n = sym_begin; n < sym_begin + cp; ++n)
                    acc += std::conj(ch[n]) * ch[n + fft];
            }
        }
        if (!any)
            break;
        if (start_offset + config.symbol_offset(0, slot) + config.slot_samples(slot) >= n_total)
            break;
    }
    if (symbols_used < 4)
        throw truncation_error("CFO estimation needs at least 4 full SRS symbols after start_offset");
    return config.scs_hz * std::arg(acc) / two_pi;
}

MultiChannelCapture cfo_correct(const MultiChannelCapture &capture, double cfo_hz) {
    MultiChannelCapture out = capture;
    if (cfo_hz == 0.0)
        return out;
    const double step = -two_pi * cfo_hz / capture.sample_rate_hz;
    for (cvec &ch : out.channels)
        for (std::size_t n = 0; n < ch.size(); ++n)
            ch[n] *= std::polar(1.0, step * static_cast<double>(n));
    return out;
}

} // namespace srspos
