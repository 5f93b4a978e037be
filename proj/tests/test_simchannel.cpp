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

#include <doctest.h>

#include "srspos/errors.hpp"
#include "srspos/simchannel.hpp"
#include "test_util.hpp"

using namespace srspos;

namespace {

TimeDomainSignal srs_signal(const WaveformConfig &cfg, int slots = 1) {
    return ofdm_modulate(build_srs_grid(cfg, slots), cfg);
}

double max_channel_diff(const cvec &a, const cvec &b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        worst = std::max(worst, std::abs(a[n] - b[n]));
    return worst;
}

} // namespace

TEST_CASE("steering vector: broadside, 30 degrees, conjugate symmetry") {
    const UlaGeometry geo;

    const cvec broadside = steering_vector(0.0, geo);
    for (const cd &v : broadside)
        CHECK(std::abs(v - cd{1.0, 0.0}) < 1e-15);

    const cvec a30 = steering_vector(30.0, geo);
    CHECK(std::abs(a30[0] - cd{1.0, 0.0}) < 1e-12);
    CHECK(std::abs(a30[1] - cd{0.0, 1.0}) < 1e-12);
    CHECK(std::abs(a30[2] - cd{-1.0, 0.0}) < 1e-12);

    const cvec am30 = steering_vector(-30.0, geo);
    for (std::size_t m = 0; m < a30.size(); ++m)
        CHECK(std::abs(am30[m] - std::conj(a30[m])) < 1e-12);

    CHECK_THROWS_AS(steering_vector(90.0, geo), std::domain_error);
    CHECK_THROWS_AS(steering_vector(-95.0, geo), std::domain_error);
}

TEST_CASE("simulate_reception: ideal broadside ray reproduces the input") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;
    const ImpairmentState ideal;

    const auto cap = simulate_reception(tx, {{0.0, 0.0, {1.0, 0.0}}}, geo, ideal, std::nullopt, cfg, 1);
    for (int ch : {1, 2, 3})
        CHECK(max_channel_diff(cap.channels[static_cast<std::size_t>(ch)], tx.samples) < 1e-12);
    CHECK(energy(cap.channels[0]) == 0.0);

    CHECK_THROWS_AS(simulate_reception(tx, {}, geo, ideal, std::nullopt, cfg, 1), usage_error);
}

TEST_CASE("simulate_reception: 30-degree ray applies the steering phases") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;
    const ImpairmentState ideal;

    const auto cap = simulate_reception(tx, {{30.0, 0.0, {1.0, 0.0}}}, geo, ideal, std::nullopt, cfg, 1);
    // Element 1 (channel 2) = element 0 (channel 1) rotated by +90 deg.
    for (std::size_t n = 0; n < cap.num_samples(); ++n)
        CHECK(std::abs(cap.channels[2][n] - cap.channels[1][n] * cd{0.0, 1.0}) < 1e-12);
}

TEST_CASE("simulate_reception: impairment injection points") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;

    const ImpairmentState ideal;
    const auto clean = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, ideal, std::nullopt, cfg, 1);

    ImpairmentState lo_only;
    lo_only.lo_differential_rad = pi / 3.0;
    const auto skewed = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, lo_only, std::nullopt, cfg, 1);
    const cd rot = std::polar(1.0, pi / 3.0);
    for (int ch : {2, 3})
        for (std::size_t n = 0; n < clean.num_samples(); ++n)
            CHECK(std::abs(skewed.channels[static_cast<std::size_t>(ch)][n] -
                           clean.channels[static_cast<std::size_t>(ch)][n] * rot) < 1e-12);
    // Pair A untouched by the LO differential.
    CHECK(max_channel_diff(skewed.channels[1], clean.channels[1]) < 1e-15);
}

TEST_CASE("simulate_reception: linearity and superposition") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;
    const ImpairmentState ideal;

    const Ray r1{-20.0, 3.0, {0.8, 0.1}};
    const Ray r2{35.0, 11.5, {0.3, -0.4}};
    Ray r1_double = r1;
    r1_double.complex_gain *= 2.0;

    const auto cap1 = simulate_reception(tx, {r1}, geo, ideal, std::nullopt, cfg, 1);
    const auto cap1x2 = simulate_reception(tx, {r1_double}, geo, ideal, std::nullopt, cfg, 1);
    const auto cap2 = simulate_reception(tx, {r2}, geo, ideal, std::nullopt, cfg, 1);
    const auto both = simulate_reception(tx, {r1, r2}, geo, ideal, std::nullopt, cfg, 1);

    for (std::size_t ch = 0; ch < 4; ++ch)
        for (std::size_t n = 0; n < cap1.num_samples(); ++n) {
            CHECK(std::abs(cap1x2.channels[ch][n] - 2.0 * cap1.channels[ch][n]) < 1e-12);
            CHECK(std::abs(both.channels[ch][n] - cap1.channels[ch][n] - cap2.channels[ch][n]) < 1e-12);
        }
}

TEST_CASE("simulate_reception: noise calibration against the configured SNR") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::II);
    const TimeDomainSignal tx = srs_signal(cfg, 4); // 122880 samples
    const UlaGeometry geo;

    ImpairmentState imp;
    imp.snr_db = 15.0;
    const auto cap = simulate_reception(tx, {{0.0, 0.0, {1.0, 0.0}}}, geo, imp, std::nullopt, cfg, 77);

    // Independent measurement: demodulate element 0 and compare used vs
    // empty bin powers.
    TimeDomainSignal rx;
    rx.sample_rate_hz = cap.sample_rate_hz;
    rx.samples = cap.channels[1];
    const ResourceGrid grid = ofdm_demodulate(rx, cfg, 0, 4);
    double used = 0.0, empty = 0.0;
    std::size_t used_n = 0, empty_n = 0;
    for (int l = 0; l < grid.num_symbols; ++l) {
        if (!cfg.is_srs_symbol(l % symbols_per_slot))
            continue;
        for (int k = 0; k < grid.num_subcarriers; ++k) {
            if (grid.used(k, l)) {
                used += std::norm(grid.at(k, l));
                ++used_n;
            } else {
                empty += std::norm(grid.at(k, l));
                ++empty_n;
            }
        }
    }
    const double snr_meas = (used / used_n - empty / empty_n) / (empty / empty_n);
    CHECK(std::abs(10.0 * std::log10(snr_meas) - imp.snr_db) < 0.3);
}

TEST_CASE("simulate_reception: timing prefix is noise-only and shifts the signal") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;

    ImpairmentState imp;
    imp.timing_offset_samples = 500;
    const auto cap = simulate_reception(tx, {{0.0, 0.0, {1.0, 0.0}}}, geo, imp, std::nullopt, cfg, 1);
    REQUIRE(cap.num_samples() == tx.samples.size() + 500);
    for (std::size_t n = 0; n < 500; ++n)
        CHECK(cap.channels[1][n] == cd{0.0, 0.0});
    for (std::size_t n = 0; n < tx.samples.size(); ++n)
        CHECK(cap.channels[1][500 + n] == tx.samples[n]);
}

TEST_CASE("fractional ray delay shows the right frequency-domain slope") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;
    const ImpairmentState ideal;
    const double delay = 10.5;

    ImpairmentState padded = ideal;
    padded.timing_offset_samples = 64; // headroom so the delayed slot stays complete
    const auto cap = simulate_reception(tx, {{0.0, delay, {1.0, 0.0}}}, geo, padded, std::nullopt, cfg, 1);
    TimeDomainSignal rx;
    rx.sample_rate_hz = cap.sample_rate_hz;
    rx.samples = cap.channels[1];
    rx.samples.resize(rx.samples.size() + 16, cd{0.0, 0.0}); // delayed tail of empty symbols
    // Demodulate at the integer part; the residual half sample must show
    // as a phase ramp across pilots.
    const ResourceGrid grid = ofdm_demodulate(rx, cfg, 74, 1);
    const cvec seq = generate_srs_sequence(cfg, 0);
    cd slope{0.0, 0.0};
    for (int p = 0; p + 1 < cfg.pilots_per_symbol(); ++p) {
        const cd h0 = grid.at(cfg.comb_offset + 2 * p, 0) / seq[static_cast<std::size_t>(p)];
        const cd h1 = grid.at(cfg.comb_offset + 2 * (p + 1), 0) / seq[static_cast<std::size_t>(p + 1)];
        slope += h1 * std::conj(h0);
    }
    const double residual = -std::arg(slope) * cfg.fft_size / (two_pi * cfg.comb_ktc);
    CHECK(std::abs(residual - 0.5) < 0.01);
}

TEST_CASE("cal tone: comb validation and single-bin concentration") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);

    CalToneSpec on_odd;
    on_odd.subcarrier = 1;
    CHECK_NOTHROW(generate_cal_tone(cfg, on_odd, 64));

    CalToneSpec on_comb;
    on_comb.subcarrier = 0;
    CHECK_THROWS_AS(generate_cal_tone(cfg, on_comb, 64), config_error);
    CalToneSpec outside;
    outside.subcarrier = cfg.num_subcarriers();
    CHECK_THROWS_AS(generate_cal_tone(cfg, outside, 64), config_error);

    const CalToneSpec spec = CalToneSpec::default_for(cfg);
    const TimeDomainSignal tone = generate_cal_tone(cfg, spec, cfg.slot_samples(0));
    const ResourceGrid grid = ofdm_demodulate(tone, cfg, 0, 1);

    double total = 0.0;
    double in_bin = 0.0;
    for (int k = 0; k < grid.num_subcarriers; ++k) {
        total += std::norm(grid.at(k, 0));
        if (k == spec.subcarrier)
            in_bin += std::norm(grid.at(k, 0));
    }
    CHECK(in_bin >= 0.99 * total);
}

TEST_CASE("cal tone: splitter capture has exact pair alignment") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const CalToneSpec spec = CalToneSpec::default_for(cfg);
    const ImpairmentState ideal;
    const auto cap = simulate_splitter_capture(cfg, spec, ideal, 4096,
                                               std::numeric_limits<double>::infinity(), 1);
    // Zero impairments: all four channels carry the identical tone.
    for (std::size_t ch = 1; ch < 4; ++ch)
        CHECK(max_channel_diff(cap.channels[ch], cap.channels[0]) == 0.0);
}
