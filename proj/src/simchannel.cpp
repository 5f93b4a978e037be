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

#include "srspos/simchannel.hpp"

#include <cmath>

#include "srspos/errors.hpp"
#include "srspos/fft.hpp"
#include "srspos/rng.hpp"

namespace srspos {

CalToneSpec CalToneSpec::default_for(const WaveformConfig &config) {
    CalToneSpec spec;
    // Odd subcarrier next to the band center: comb-empty for comb_offset 0,
    // maximal margin from the band edges.
    spec.subcarrier = config.num_subcarriers() / 2 + 1;
    if (spec.subcarrier % config.comb_ktc == config.comb_offset)
        spec.subcarrier += 1;
    return spec;
}

cvec steering_vector(double aoa_deg, const UlaGeometry &geometry) {
    if (std::abs(aoa_deg) >= 90.0)
        throw std::domain_error("steering angle must satisfy |aoa| < 90 deg");
    const double s = std::sin(deg2rad(aoa_deg));
    cvec a(static_cast<std::size_t>(geometry.num_elements));
    for (int m = 0; m < geometry.num_elements; ++m)
        a[static_cast<std::size_t>(m)] =
            std::polar(1.0, two_pi * geometry.element_spacing_wavelengths * static_cast<double>(m) * s);
    return a;
}

TimeDomainSignal generate_cal_tone(const WaveformConfig &config, const CalToneSpec &spec,
                                   std::size_t num_samples) {
    const int K = config.num_subcarriers();
    if (spec.subcarrier < 0 || spec.subcarrier >= K)
        throw config_error("cal tone subcarrier " + std::to_string(spec.subcarrier) + " outside the grid");
    if (spec.subcarrier % config.comb_ktc == config.comb_offset)
        throw config_error("cal tone subcarrier " + std::to_string(spec.subcarrier) +
                           " collides with the SRS comb");

    const double amp = spec.effective_amplitude(config);
    const int f      = spec.subcarrier - K / 2;
    TimeDomainSignal tone;
    tone.sample_rate_hz = config.sample_rate_hz;
    tone.samples.resize(num_samples);
    const double step = two_pi * static_cast<double>(f) / static_cast<double>(config.fft_size);
    for (std::size_t n = 0; n < num_samples; ++n)
        tone.samples[n] = std::polar(amp, step * static_cast<double>(n));
    return tone;
}

cvec delay_signal(const cvec &x, double delay_samples) {
    if (delay_samples < 0.0)
        throw usage_error("ray delay must be non-negative");
    const auto d_int  = static_cast<std::size_t>(std::floor(delay_samples));
    const double frac = delay_samples - static_cast<double>(d_int);

    cvec shifted(x.size(), cd{0.0, 0.0});
    if (frac < 1e-12) {
        for (std::size_t n = d_int; n < x.size(); ++n)
            shifted[n] = x[n - d_int];
        return shifted;
    }

    const std::size_t n_fft = next_pow2(x.size() + d_int + 64);
    cvec work(n_fft, cd{0.0, 0.0});
    std::copy(x.begin(), x.end(), work.begin());
    fft_inplace(work.data(), n_fft, false);
    for (std::size_t k = 0; k < n_fft; ++k) {
        // Signed bin index so the ramp is conjugate-symmetric.
        const double f = (k < n_fft / 2) ? static_cast<double>(k)
                                         : static_cast<double>(k) - static_cast<double>(n_fft);
        work[k] *= std::polar(1.0, -two_pi * f * delay_samples / static_cast<double>(n_fft));
    }
    fft_inplace(work.data(), n_fft, true);
    const double scale = 1.0 / static_cast<double>(n_fft);
    for (std::size_t n = 0; n < x.size(); ++n)
        shifted[n] = work[n] * scale;
    return shifted;
}

namespace {

/// Mean power of the ideal element-0 signal per occupied subcarrier.
/// Element 0 has unit steering gain for every angle, so the per-bin
/// reference is sum |gain|^2 times the per-bin power of the replica.
double reference_bin_power(const TimeDomainSignal &tx, const std::vector<Ray> &rays,
                           const WaveformConfig &config) {
    double srs_energy = 0.0;
    std::size_t srs_samples = 0;
    int slot = 0;
    std::size_t slot_base = 0;
    while (slot_base < tx.samples.size()) {
        for (int l = 0; l < symbols_per_slot && config.is_srs_symbol(l); ++l) {
            const std::size_t begin = slot_base + config.symbol_offset(l, slot) -
                                      config.symbol_offset(0, slot);
            const std::size_t len = config.symbol_samples(l, slot);
            if (begin + len > tx.samples.size())
                break;
            for (std::size_t n = begin; n < begin + len; ++n)
                srs_energy += std::norm(tx.samples[n]);
            srs_samples += len;
        }
        slot_base += config.slot_samples(slot);
        ++slot;
    }
    if (srs_samples == 0)
        return 0.0;
    const double per_sample = srs_energy / static_cast<double>(srs_samples);
    const double per_bin_tx = per_sample * static_cast<double>(config.fft_size) /
                              static_cast<double>(config.pilots_per_symbol());
    double gain_sq = 0.0;
    for (const Ray &ray : rays)
        gain_sq += std::norm(ray.complex_gain);
    return per_bin_tx * gain_sq;
}

} // namespace

MultiChannelCapture simulate_reception(const TimeDomainSignal &tx, const std::vector<Ray> &rays,
                                       const UlaGeometry &geometry, const ImpairmentState &impairments,
                                       const std::optional<CalToneSpec> &cal_tone,
                                       const WaveformConfig &config, std::uint64_t seed) {
    if (rays.empty())
        throw usage_error("simulate_reception needs at least one ray");
    for (const Ray &ray : rays)
        if (std::abs(ray.complex_gain) <= 0.0)
            throw usage_error("ray gain must be nonzero");

    const std::size_t prefix = impairments.timing_offset_samples;
    const std::size_t n_total = prefix + tx.samples.size();

    MultiChannelCapture cap;
    cap.sample_rate_hz = tx.sample_rate_hz;
    for (cvec &ch : cap.channels)
        ch.assign(n_total, cd{0.0, 0.0});

    // Element signals: sum of steered, delayed rays.
    std::vector<cvec> elements(static_cast<std::size_t>(geometry.num_elements),
                               cvec(tx.samples.size(), cd{0.0, 0.0}));
    for (const Ray &ray : rays) {
        const cvec delayed = delay_signal(tx.samples, ray.delay_samples);
        const cvec a       = steering_vector(ray.aoa_deg, geometry);
        for (int m = 0; m < geometry.num_elements; ++m) {
            const cd w = ray.complex_gain * a[static_cast<std::size_t>(m)];
            cvec &dst  = elements[static_cast<std::size_t>(m)];
            for (std::size_t n = 0; n < delayed.size(); ++n)
                dst[n] += w * delayed[n];
        }
    }
    for (int m = 0; m < geometry.num_elements; ++m) {
        const int ch = geometry.element_channel_map[static_cast<std::size_t>(m)];
        for (std::size_t n = 0; n < tx.samples.size(); ++n)
            cap.channels[static_cast<std::size_t>(ch)][prefix + n] =
                elements[static_cast<std::size_t>(m)][n];
    }

    // Cal tone: same waveform into channel 0 (dedicated) and channel 2
    // (superimposed), phase-identical at the splitter.
    if (cal_tone) {
        const TimeDomainSignal tone = generate_cal_tone(config, *cal_tone, tx.samples.size());
        for (std::size_t n = 0; n < tone.samples.size(); ++n) {
            cap.channels[0][prefix + n] += tone.samples[n];
            cap.channels[2][prefix + n] += tone.samples[n];
        }
    }

    // Impairments: intra-pair offsets on channels 0 and 2 (channels 1 and 3
    // are the unrotated references), LO differential on pair B, CFO on all.
    const cd rot_a  = std::polar(1.0, impairments.intra_pair_offset_a_rad);
    const cd rot_b  = std::polar(1.0, impairments.intra_pair_offset_b_rad);
    const cd rot_lo = std::polar(1.0, impairments.lo_differential_rad);
    for (cd &v : cap.channels[0])
        v *= rot_a;
    for (cd &v : cap.channels[2])
        v *= rot_b * rot_lo;
    for (cd &v : cap.channels[3])
        v *= rot_lo;
    if (impairments.cfo_hz != 0.0) {
        const double step = two_pi * impairments.cfo_hz / cap.sample_rate_hz;
        for (cvec &ch : cap.channels)
            for (std::size_t n = 0; n < ch.size(); ++n)
                ch[n] *= std::polar(1.0, step * static_cast<double>(n));
    }

    if (!impairments.noiseless()) {
        const double ref = reference_bin_power(tx, rays, config);
        const double variance = ref * std::pow(10.0, -impairments.snr_db / 10.0);
        Rng rng(seed);
        for (cvec &ch : cap.channels)
            for (cd &v : ch)
                v += rng.complex_gaussian(variance);
    }
    return cap;
}

MultiChannelCapture simulate_splitter_capture(const WaveformConfig &config, const CalToneSpec &spec,
                                              const ImpairmentState &impairments, std::size_t num_samples,
                                              double snr_db, std::uint64_t seed) {
    const TimeDomainSignal tone = generate_cal_tone(config, spec, num_samples);

    MultiChannelCapture cap;
    cap.sample_rate_hz = config.sample_rate_hz;
    for (cvec &ch : cap.channels)
        ch = tone.samples;

    const cd rot_a  = std::polar(1.0, impairments.intra_pair_offset_a_rad);
    const cd rot_b  = std::polar(1.0, impairments.intra_pair_offset_b_rad);
    const cd rot_lo = std::polar(1.0, impairments.lo_differential_rad);
    for (cd &v : cap.channels[0])
        v *= rot_a;
    for (cd &v : cap.channels[2])
        v *= rot_b * rot_lo;
    for (cd &v : cap.channels[3])
        v *= rot_lo;

    if (!(std::isinf(snr_db) && snr_db > 0)) {
        const double amp = spec.effective_amplitude(config);
        const double variance = amp * amp * std::pow(10.0, -snr_db / 10.0);
        Rng rng(seed);
        for (cvec &ch : cap.channels)
            for (cd &v : ch)
                v += rng.complex_gaussian(variance);
    }
    return cap;
}

} // namespace srspos
