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
#include "srspos/frontend.hpp"
#include "srspos/rng.hpp"
#include "test_util.hpp"

using namespace srspos;

namespace {

TimeDomainSignal srs_signal(const WaveformConfig &cfg, int slots = 1) {
    return ofdm_modulate(build_srs_grid(cfg, slots), cfg);
}

MultiChannelCapture capture_with(const WaveformConfig &cfg, const ImpairmentState &imp,
                                 bool with_tone, std::uint64_t seed, double aoa_deg = 10.0,
                                 int slots = 1) {
    const TimeDomainSignal tx = srs_signal(cfg, slots);
    const UlaGeometry geo;
    const auto tone = with_tone ? std::optional<CalToneSpec>(CalToneSpec::default_for(cfg)) : std::nullopt;
    return simulate_reception(tx, {{aoa_deg, 0.0, {1.0, 0.0}}}, geo, imp, tone, cfg, seed);
}

} // namespace

TEST_CASE("estimate_pair_phase: identity, known rotation, validation") {
    Rng rng(11);
    const cvec a = rng.complex_gaussian_vector(512, 1.0);

    CHECK(estimate_pair_phase(a, a) == 0.0);

    cvec b(a.size());
    for (std::size_t n = 0; n < a.size(); ++n)
        b[n] = a[n] * std::polar(1.0, -pi / 3.0);
    CHECK(estimate_pair_phase(a, b) == doctest::Approx(pi / 3.0).epsilon(1e-9));

    cvec shorter(a.begin(), a.begin() + 100);
    CHECK_THROWS_AS(estimate_pair_phase(a, shorter), usage_error);
    cvec tiny(a.begin(), a.begin() + 32);
    CHECK_THROWS_AS(estimate_pair_phase(tiny, tiny), usage_error);

    // Independent noise sequences have no stable phase.
    const cvec n1 = rng.complex_gaussian_vector(4096, 1.0);
    const cvec n2 = rng.complex_gaussian_vector(4096, 1.0);
    CHECK_THROWS_AS(estimate_pair_phase(n1, n2), low_confidence_error);
}

TEST_CASE("estimate_pair_phase: accuracy at 20 dB tone SNR") {
    // 1000 samples, 20 dB per-sample SNR: |error| < 0.01 rad in >= 99%.
    const int trials = 1000;
    int good = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(static_cast<std::uint64_t>(t) + 1);
        const double phi = rng.phase();
        cvec a(1000), b(1000);
        for (std::size_t n = 0; n < a.size(); ++n) {
            const cd tone = std::polar(1.0, 0.003 * static_cast<double>(n));
            a[n] = tone + rng.complex_gaussian(0.01);
            b[n] = tone * std::polar(1.0, -phi) + rng.complex_gaussian(0.01);
        }
        const double err = std::abs(wrap_phase(estimate_pair_phase(a, b) - phi));
        good += err < 0.01;
    }
    CHECK(good >= 990);
}

TEST_CASE("offline_calibrate: recovers injected intra-pair offsets") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const CalToneSpec spec = CalToneSpec::default_for(cfg);
    const double inf = std::numeric_limits<double>::infinity();

    const ImpairmentState clean;
    const auto ideal_cap = simulate_splitter_capture(cfg, spec, clean, 8192, inf, 1);
    const CalibrationTable ideal_table = offline_calibrate(ideal_cap);
    CHECK(ideal_table.intra_pair_offset_a_rad == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ideal_table.intra_pair_offset_b_rad == doctest::Approx(0.0).epsilon(1e-12));

    ImpairmentState imp;
    imp.intra_pair_offset_a_rad = 0.4;
    imp.intra_pair_offset_b_rad = -1.1;
    imp.lo_differential_rad = 2.2; // cancels within pairs
    const auto cap = simulate_splitter_capture(cfg, spec, imp, 8192, inf, 1);
    const CalibrationTable table = offline_calibrate(cap);
    CHECK(table.intra_pair_offset_a_rad == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(table.intra_pair_offset_b_rad == doctest::Approx(-1.1).epsilon(1e-6));
    CHECK_FALSE(table.complete());

    // 30 dB tone SNR keeps the offsets within 0.005 rad.
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto noisy = simulate_splitter_capture(cfg, spec, imp, 15360, 30.0, seed);
        const CalibrationTable t = offline_calibrate(noisy);
        CHECK(std::abs(wrap_phase(t.intra_pair_offset_a_rad - 0.4)) < 0.005);
        CHECK(std::abs(wrap_phase(t.intra_pair_offset_b_rad + 1.1)) < 0.005);
    }
}

TEST_CASE("runtime_calibrate: isolates the LO differential") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const CalToneSpec tone = CalToneSpec::default_for(cfg);
    const UlaGeometry geo;

    // Tone-only capture (all-zero transmit signal): exact measurement.
    TimeDomainSignal silent;
    silent.sample_rate_hz = cfg.sample_rate_hz;
    silent.samples.assign(cfg.slot_samples(0) * 2, cd{0.0, 0.0});

    ImpairmentState imp;
    imp.lo_differential_rad = pi / 3.0;
    CalibrationTable zero_table;
    auto cap = simulate_reception(silent, {{0.0, 0.0, {1.0, 0.0}}}, geo, imp, tone, cfg, 1);
    CalibrationTable measured = runtime_calibrate(cap, zero_table, tone, cfg);
    REQUIRE(measured.complete());
    CHECK(*measured.lo_differential_rad == doctest::Approx(pi / 3.0).epsilon(1e-6));

    // Same with intra-pair offsets and the matching stored table.
    imp.intra_pair_offset_a_rad = 0.4;
    imp.intra_pair_offset_b_rad = -1.1;
    CalibrationTable stored;
    stored.intra_pair_offset_a_rad = 0.4;
    stored.intra_pair_offset_b_rad = -1.1;
    cap = simulate_reception(silent, {{0.0, 0.0, {1.0, 0.0}}}, geo, imp, tone, cfg, 1);
    measured = runtime_calibrate(cap, stored, tone, cfg);
    CHECK(*measured.lo_differential_rad == doctest::Approx(pi / 3.0).epsilon(1e-6));

    // No tone in the capture -> failure.
    const auto no_tone = simulate_reception(silent, {{0.0, 0.0, {1.0, 0.0}}}, geo, imp, std::nullopt, cfg, 1);
    CHECK_THROWS_AS(runtime_calibrate(no_tone, stored, tone, cfg), calibration_failure);
}

TEST_CASE("runtime_calibrate: tone coexisting with SRS at 20 dB") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const CalToneSpec tone = CalToneSpec::default_for(cfg);

    int good = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        Rng draw(static_cast<std::uint64_t>(t) + 500);
        ImpairmentState imp;
        imp.intra_pair_offset_a_rad = draw.phase();
        imp.intra_pair_offset_b_rad = draw.phase();
        imp.lo_differential_rad = draw.phase();
        imp.snr_db = 20.0;
        const auto cap = capture_with(cfg, imp, true, static_cast<std::uint64_t>(t) + 1, 25.0, 2);
        CalibrationTable stored;
        stored.intra_pair_offset_a_rad = imp.intra_pair_offset_a_rad;
        stored.intra_pair_offset_b_rad = imp.intra_pair_offset_b_rad;
        const CalibrationTable measured = runtime_calibrate(cap, stored, tone, cfg);
        const double err = std::abs(wrap_phase(*measured.lo_differential_rad - imp.lo_differential_rad));
        good += err < 0.02;
    }
    CHECK(good >= 95);
}

TEST_CASE("apply_phase_compensation: inverse of the injection") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);

    ImpairmentState imp;
    imp.intra_pair_offset_a_rad = 0.7;
    imp.intra_pair_offset_b_rad = -2.0;
    imp.lo_differential_rad = 1.3;
    const auto impaired = capture_with(cfg, imp, false, 1);
    const auto clean = capture_with(cfg, ImpairmentState{}, false, 1);

    CalibrationTable table;
    table.intra_pair_offset_a_rad = imp.intra_pair_offset_a_rad;
    table.intra_pair_offset_b_rad = imp.intra_pair_offset_b_rad;
    table.lo_differential_rad = imp.lo_differential_rad;
    const auto compensated = apply_phase_compensation(impaired, table);
    for (std::size_t ch = 0; ch < 4; ++ch)
        for (std::size_t n = 0; n < clean.num_samples(); ++n)
            CHECK(std::abs(compensated.channels[ch][n] - clean.channels[ch][n]) < 1e-9);

    // Zero table is the identity; magnitudes always preserved.
    CalibrationTable zeros;
    zeros.lo_differential_rad = 0.0;
    const auto same = apply_phase_compensation(impaired, zeros);
    for (std::size_t ch = 0; ch < 4; ++ch)
        for (std::size_t n = 0; n < clean.num_samples(); ++n) {
            CHECK(same.channels[ch][n] == impaired.channels[ch][n]);
            CHECK(std::abs(std::abs(compensated.channels[ch][n]) -
                           std::abs(impaired.channels[ch][n])) < 1e-15);
        }

    CalibrationTable incomplete;
    CHECK_THROWS_AS(apply_phase_compensation(impaired, incomplete), usage_error);
}

TEST_CASE("apply_phase_compensation: round trip over random draws") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    Rng draw(99);
    for (int t = 0; t < 100; ++t) {
        ImpairmentState imp;
        imp.intra_pair_offset_a_rad = draw.phase();
        imp.intra_pair_offset_b_rad = draw.phase();
        imp.lo_differential_rad = draw.phase();
        const auto impaired = capture_with(cfg, imp, false, 7);
        const auto clean = capture_with(cfg, ImpairmentState{}, false, 7);

        CalibrationTable table;
        table.intra_pair_offset_a_rad = imp.intra_pair_offset_a_rad;
        table.intra_pair_offset_b_rad = imp.intra_pair_offset_b_rad;
        table.lo_differential_rad = imp.lo_differential_rad;
        const auto compensated = apply_phase_compensation(impaired, table);
        double worst = 0.0;
        for (std::size_t ch = 0; ch < 4; ++ch)
            for (std::size_t n = 0; n < clean.num_samples(); n += 97)
                worst = std::max(worst, std::abs(compensated.channels[ch][n] - clean.channels[ch][n]));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("calibration table: text round trip") {
    CalibrationTable table;
    table.intra_pair_offset_a_rad = 0.4;
    table.intra_pair_offset_b_rad = -1.1;
    table.lo_differential_rad = 0.25;
    const CalibrationTable back = CalibrationTable::deserialize(table.serialize());
    CHECK(back.intra_pair_offset_a_rad == table.intra_pair_offset_a_rad);
    CHECK(back.intra_pair_offset_b_rad == table.intra_pair_offset_b_rad);
    CHECK(*back.lo_differential_rad == *table.lo_differential_rad);
    CHECK_THROWS_AS(CalibrationTable::deserialize("lo_differential_rad = 1\n"), format_error);
}

TEST_CASE("timing_sync: exact offset, unit metric, noise rejection") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal replica = srs_signal(cfg);
    const UlaGeometry geo;

    ImpairmentState ideal;
    MultiChannelCapture cap = simulate_reception(replica, {{0.0, 0.0, {1.0, 0.0}}}, geo, ideal,
                                                 std::nullopt, cfg, 1);
    // Pad so the replica is shorter than the capture.
    for (auto &ch : cap.channels)
        ch.resize(ch.size() + 64, cd{0.0, 0.0});
    const SyncResult aligned = timing_sync(cap, replica);
    CHECK(aligned.start_offset == 0);
    CHECK(aligned.peak_metric == doctest::Approx(1.0).epsilon(1e-6));

    ImpairmentState shifted;
    shifted.timing_offset_samples = 1000;
    shifted.snr_db = 0.0;
    int exact = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto noisy = simulate_reception(replica, {{0.0, 0.0, {1.0, 0.0}}}, geo, shifted,
                                              std::nullopt, cfg, seed);
        const SyncResult r = timing_sync(noisy, replica);
        exact += r.start_offset == 1000;
    }
    CHECK(exact >= 99);

    MultiChannelCapture noise_only;
    noise_only.sample_rate_hz = cfg.sample_rate_hz;
    Rng rng(3);
    for (auto &ch : noise_only.channels)
        ch = rng.complex_gaussian_vector(replica.samples.size() + 4096, 1.0);
    CHECK_THROWS_AS(timing_sync(noise_only, replica), sync_failure);
}

TEST_CASE("timing metric: peak dominance outside the comb ambiguity") {
    // Comb-2 SRS repeats within each symbol at fft/2, which caps the
    // sidelobe there near -5.5 dB; everywhere else the peak must lead by
    // at least 6 dB.
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal replica = srs_signal(cfg);
    const UlaGeometry geo;

    ImpairmentState imp;
    imp.timing_offset_samples = 700;
    imp.snr_db = 0.0;
    int pass = 0;
    const int trials = 40;
    for (std::uint64_t seed = 1; seed <= trials; ++seed) {
        const auto cap = simulate_reception(replica, {{15.0, 0.0, {1.0, 0.0}}}, geo, imp,
                                            std::nullopt, cfg, seed);
        const std::vector<double> metric = timing_metric(cap.channels[1], replica.samples);
        const std::size_t peak_lag = 700;
        const double peak = metric[peak_lag];

        const long half = cfg.fft_size / 2;
        const long guard = cfg.cp_lengths[0] + 4;
        double worst = 0.0;
        for (long lag = 0; lag < static_cast<long>(metric.size()); ++lag) {
            const long d = lag - static_cast<long>(peak_lag);
            if (std::labs(d) <= guard)
                continue; // main lobe
            if (std::labs(d - half) <= guard || std::labs(d + half) <= guard)
                continue; // comb self-similarity ambiguity
            worst = std::max(worst, metric[static_cast<std::size_t>(lag)]);
        }
        pass += 20.0 * std::log10(peak / worst) >= 6.0;

        // The ambiguity sidelobe itself stays clearly below the peak.
        const double side = metric[peak_lag + static_cast<std::size_t>(half)];
        CHECK(20.0 * std::log10(peak / side) > 4.0);
    }
    CHECK(pass >= 38); // >= 95%
}

TEST_CASE("cfo_estimate_cp: zero, injected, aliased") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::III); // 30 kHz SCS
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;

    const ImpairmentState ideal;
    const auto clean = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, ideal, std::nullopt, cfg, 1);
    CHECK(std::abs(cfo_estimate_cp(clean, cfg, 0)) < 1e-6 * cfg.scs_hz);

    ImpairmentState wrapped;
    wrapped.cfo_hz = 16e3; // > scs/2, aliases to -14 kHz
    const auto aliased = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, wrapped, std::nullopt, cfg, 1);
    CHECK(cfo_estimate_cp(aliased, cfg, 0) == doctest::Approx(-14e3).epsilon(1e-6));

    // At 20 dB per-bin SNR the CP metric of one slot carries ~29 Hz of
    // phase-noise std (computed with the Monte-Carlo oracle below), so the
    // tight 30 Hz bound needs a deeper accumulation: 8 slots reach ~10 Hz.
    ImpairmentState noisy;
    noisy.cfo_hz = 1e3;
    noisy.snr_db = 20.0;
    const TimeDomainSignal tx8 = srs_signal(cfg, 8);
    int good_tight = 0;
    int good_slot = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto deep = simulate_reception(tx8, {{10.0, 0.0, {1.0, 0.0}}}, geo, noisy, std::nullopt,
                                             cfg, seed);
        good_tight += std::abs(cfo_estimate_cp(deep, cfg, 0) - 1e3) < 30.0;
        const auto one = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, noisy, std::nullopt,
                                            cfg, seed);
        good_slot += std::abs(cfo_estimate_cp(one, cfg, 0) - 1e3) < 90.0;
    }
    CHECK(good_tight >= 95);
    CHECK(good_slot >= 95);

    MultiChannelCapture stub;
    stub.sample_rate_hz = cfg.sample_rate_hz;
    for (auto &ch : stub.channels)
        ch.assign(cfg.symbol_samples(0, 0) * 2, cd{0.0, 0.0});
    CHECK_THROWS_AS(cfo_estimate_cp(stub, cfg, 0), truncation_error);
}

TEST_CASE("cfo_correct: identity and inverse") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg);
    const UlaGeometry geo;

    ImpairmentState imp;
    imp.cfo_hz = 750.0;
    const auto injected = simulate_reception(tx, {{5.0, 0.0, {1.0, 0.0}}}, geo, imp, std::nullopt, cfg, 1);
    const auto clean = simulate_reception(tx, {{5.0, 0.0, {1.0, 0.0}}}, geo, ImpairmentState{},
                                          std::nullopt, cfg, 1);

    const auto same = cfo_correct(injected, 0.0);
    for (std::size_t n = 0; n < injected.num_samples(); ++n)
        CHECK(same.channels[1][n] == injected.channels[1][n]);

    const auto corrected = cfo_correct(injected, 750.0);
    for (std::size_t ch = 1; ch < 4; ++ch)
        for (std::size_t n = 0; n < clean.num_samples(); ++n)
            CHECK(std::abs(corrected.channels[ch][n] - clean.channels[ch][n]) < 1e-9);
}

TEST_CASE("cfo estimate + correct leaves a small residual at 20 dB") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    const TimeDomainSignal tx = srs_signal(cfg, 2);
    const UlaGeometry geo;

    ImpairmentState imp;
    imp.cfo_hz = 0.3 * cfg.scs_hz;
    imp.snr_db = 20.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto cap = simulate_reception(tx, {{10.0, 0.0, {1.0, 0.0}}}, geo, imp, std::nullopt, cfg, seed);
        const double est = cfo_estimate_cp(cap, cfg, 0);
        const auto corrected = cfo_correct(cap, est);
        const double residual = cfo_estimate_cp(corrected, cfg, 0);
        CHECK(std::abs(residual) < 0.005 * cfg.scs_hz);
    }
}

TEST_CASE("cfo correction and phase compensation commute") {
    const WaveformConfig cfg = config_from_catalog(ConfigId::V);
    ImpairmentState imp;
    imp.intra_pair_offset_a_rad = 0.9;
    imp.intra_pair_offset_b_rad = -0.3;
    imp.lo_differential_rad = 1.7;
    imp.cfo_hz = 400.0;
    const auto cap = capture_with(cfg, imp, false, 5);

    CalibrationTable table;
    table.intra_pair_offset_a_rad = imp.intra_pair_offset_a_rad;
    table.intra_pair_offset_b_rad = imp.intra_pair_offset_b_rad;
    table.lo_differential_rad = imp.lo_differential_rad;

    const auto a = cfo_correct(apply_phase_compensation(cap, table), imp.cfo_hz);
    const auto b = apply_phase_compensation(cfo_correct(cap, imp.cfo_hz), table);
    for (std::size_t ch = 0; ch < 4; ++ch)
        for (std::size_t n = 0; n < a.num_samples(); n += 53)
            CHECK(std::abs(a.channels[ch][n] - b.channels[ch][n]) < 1e-12);
}
