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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srspos/errors.hpp"
#include "srspos/harness.hpp"
#include "srspos/rng.hpp"

namespace srspos {

namespace {

// Seed stream tags so every stochastic draw has its own derived seed.
enum SeedStream : std::uint64_t {
    stream_intra = 1,
    stream_lo = 2,
    stream_offline = 3,
    stream_uwb = 4,
    stream_snapshot_base = 1000,
};

std::vector<std::string> split_csv_fields(const std::string &value) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream in(value);
    while (std::getline(in, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
    }
    return fields;
}

double parse_double(const std::string &value, const std::string &key) {
    if (value == "inf" || value == "+inf")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception &) {
        throw config_error("key '" + key + "': cannot parse number '" + value + "'");
    }
}

std::optional<TrajectoryTruth> parse_trajectory_keys(const std::multimap<std::string, std::string> &kv) {
    const auto traj_it = kv.find("trajectory");
    const auto lm_range = kv.equal_range("landmark");
    if (traj_it == kv.end() && lm_range.first == lm_range.second)
        return std::nullopt;
    if (traj_it != kv.end() && traj_it->second == "default")
        return default_trajectory();

    std::vector<std::tuple<std::string, double, double, double>> points;
    TrajectoryTruth explicit_truth;
    bool explicit_times = false;
    for (auto it = lm_range.first; it != lm_range.second; ++it) {
        const auto f = split_csv_fields(it->second);
        if (f.size() == 4) {
            points.emplace_back(f[0], parse_double(f[1], "landmark.x"), parse_double(f[2], "landmark.y"),
                                parse_double(f[3], "landmark.dwell"));
        } else if (f.size() == 5) {
            explicit_times = true;
            explicit_truth.landmarks.push_back({f[0], parse_double(f[1], "landmark.x"),
                                                parse_double(f[2], "landmark.y"),
                                                parse_double(f[3], "landmark.arrival"),
                                                parse_double(f[4], "landmark.dwell")});
        } else {
            throw config_error("landmark needs 'label, x, y, dwell' or 'label, x, y, arrival, dwell'");
        }
    }
    if (explicit_times) {
        if (!points.empty())
            throw config_error("mix of 4-field and 5-field landmark entries");
        for (std::size_t i = 1; i < explicit_truth.landmarks.size(); ++i)
            if (explicit_truth.landmarks[i].arrival_time_s <=
                explicit_truth.landmarks[i - 1].arrival_time_s)
                throw config_error("landmark arrival times must be strictly increasing");
        return explicit_truth;
    }
    if (points.empty())
        throw config_error("trajectory requested without landmark entries");
    double speed_kmh = 4.0;
    if (const auto it = kv.find("speed_kmh"); it != kv.end())
        speed_kmh = parse_double(it->second, "speed_kmh");
    return make_trajectory(points, speed_kmh / 3.6);
}

} // namespace

ScenarioConfig ScenarioConfig::from_text(const std::string &text) {
    const auto kv = parse_key_value_text(text);
    ScenarioConfig cfg;

    auto opt = [&](const std::string &key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end())
            return std::nullopt;
        return it->second;
    };

    if (const auto v = opt("waveform"))
        cfg.config_id = config_id_from_string(*v);
    if (const auto v = opt("estimator"))
        cfg.estimator = estimator_from_string(*v);
    if (const auto v = opt("seed"))
        cfg.seed = std::stoull(*v);
    if (const auto v = opt("snapshot_slots")) {
        cfg.snapshot_slots = std::stoi(*v);
        if (cfg.snapshot_slots < 1)
            throw config_error("snapshot_slots must be >= 1");
    }
    if (const auto v = opt("cadence_s")) {
        cfg.cadence_s = parse_double(*v, "cadence_s");
        if (!(cfg.cadence_s > 0.0))
            throw config_error("cadence_s must be positive");
    }
    if (const auto v = opt("grid_step_deg"))
        cfg.grid_step_deg = parse_double(*v, "grid_step_deg");
    if (const auto v = opt("snr_db"))
        cfg.snr_db = parse_double(*v, "snr_db");
    if (const auto v = opt("cfo_max_hz"))
        cfg.cfo_max_hz = parse_double(*v, "cfo_max_hz");
    if (const auto v = opt("timing_offset_min"))
        cfg.timing_offset_min = std::stoull(*v);
    if (const auto v = opt("timing_offset_max"))
        cfg.timing_offset_max = std::stoull(*v);
    if (cfg.timing_offset_max < cfg.timing_offset_min)
        throw config_error("timing_offset_max < timing_offset_min");
    if (const auto v = opt("intra_pair_offset_a_rad"); v && *v != "random")
        cfg.intra_pair_offset_a_rad = parse_double(*v, "intra_pair_offset_a_rad");
    if (const auto v = opt("intra_pair_offset_b_rad"); v && *v != "random")
        cfg.intra_pair_offset_b_rad = parse_double(*v, "intra_pair_offset_b_rad");
    if (const auto v = opt("lo_differential_rad"); v && *v != "random")
        cfg.lo_differential_rad = parse_double(*v, "lo_differential_rad");
    if (const auto v = opt("cal_tone_subcarrier"); v && *v != "auto")
        cfg.cal_tone.subcarrier = std::stoi(*v);
    else
        cfg.cal_tone.subcarrier = -1; // resolved against the waveform later
    if (const auto v = opt("cal_tone_amplitude"))
        cfg.cal_tone.amplitude = parse_double(*v, "cal_tone_amplitude");
    if (const auto v = opt("cal_tone"))
        cfg.cal_tone_enabled = (*v != "off" && *v != "0" && *v != "false");

    if (const auto v = opt("user_angle_deg"))
        cfg.user_angle_deg = parse_double(*v, "user_angle_deg");
    if (const auto v = opt("user_range_m"))
        cfg.user_range_m = parse_double(*v, "user_range_m");
    if (const auto v = opt("duration_s"))
        cfg.duration_s = parse_double(*v, "duration_s");
    const auto rays = kv.equal_range("multipath");
    for (auto it = rays.first; it != rays.second; ++it) {
        const auto f = split_csv_fields(it->second);
        if (f.size() != 4)
            throw config_error("multipath needs 'aoa_deg, delay_samples, gain_re, gain_im'");
        cfg.extra_rays.push_back({parse_double(f[0], "multipath.aoa"),
                                  parse_double(f[1], "multipath.delay"),
                                  {parse_double(f[2], "multipath.re"), parse_double(f[3], "multipath.im")}});
    }

    cfg.trajectory = parse_trajectory_keys(kv);
    if (!cfg.trajectory && (!cfg.user_angle_deg || !cfg.user_range_m))
        throw config_error("scenario needs either a trajectory or user_angle_deg + user_range_m");

    if (const auto v = opt("uwb_rate_hz"))
        cfg.uwb_rate_hz = parse_double(*v, "uwb_rate_hz");
    if (const auto v = opt("uwb_sigma_m"))
        cfg.uwb_sigma_m = parse_double(*v, "uwb_sigma_m");
    if (const auto v = opt("uwb_dropout_pmax"))
        cfg.uwb_dropout.p_max = parse_double(*v, "uwb_dropout_pmax");
    if (const auto v = opt("range_window_s"))
        cfg.range_window_s = parse_double(*v, "range_window_s");
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open scenario config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return from_text(buffer.str());
    } catch (const format_error &e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

PipelineResult process_snapshot(const MultiChannelCapture &capture, const WaveformConfig &config,
                                const TimeDomainSignal &replica, const CalibrationTable &intra_table,
                                const CalToneSpec &tone, bool tone_enabled, Estimator estimator,
                                double grid_step_deg, double timestamp_s) {
    const UlaGeometry geometry;

    // Steps 1-2: the capture is already loaded; measure the per-run LO
    // differential from the cal tone, then align channel phases.
    CalibrationTable table = intra_table;
    if (tone_enabled) {
        table = runtime_calibrate(capture, intra_table, tone, config);
    } else if (!table.lo_differential_rad) {
        table.lo_differential_rad = 0.0;
    }
    const MultiChannelCapture aligned = apply_phase_compensation(capture, table);

    // Step 3: replica correlation.
    const SyncResult sync = timing_sync(aligned, replica);

    // Step 4: CP-based CFO estimate and correction.
    const double cfo = cfo_estimate_cp(aligned, config, sync.start_offset);
    const MultiChannelCapture corrected = cfo_correct(aligned, cfo);

    // Demodulate the ULA channels and equalize by the known pilots.
    const std::size_t remaining = corrected.num_samples() - sync.start_offset;
    int slots = 0;
    std::size_t used = 0;
    while (used + config.slot_samples(slots) <= remaining) {
        used += config.slot_samples(slots);
        ++slots;
    }
    if (slots < 1)
        throw truncation_error("capture too short for one slot after sync offset");

    const int n_pilots = config.pilots_per_symbol();
    const int n_obs    = slots * static_cast<int>(config.srs_symbols.size());
    Eigen::MatrixXcd snapshots(geometry.num_elements, static_cast<Eigen::Index>(n_pilots) * n_obs);
    Eigen::MatrixXcd grid_obs(static_cast<Eigen::Index>(geometry.num_elements) * n_pilots, n_obs);

    ResourceGrid ref_grid;
    for (int m = 0; m < geometry.num_elements; ++m) {
        const int ch = geometry.element_channel_map[static_cast<std::size_t>(m)];
        TimeDomainSignal one;
        one.sample_rate_hz = corrected.sample_rate_hz;
        one.samples = corrected.channels[static_cast<std::size_t>(ch)];
        ResourceGrid grid = ofdm_demodulate(one, config, sync.start_offset, slots);
        int obs = 0;
        for (int slot = 0; slot < slots; ++slot) {
            for (int sym : config.srs_symbols) {
                const cvec seq = generate_srs_sequence(config, sym);
                const int l    = slot * symbols_per_slot + sym;
                for (int p = 0; p < n_pilots; ++p) {
                    const int k = config.comb_offset + p * config.comb_ktc;
                    const cd h  = grid.at(k, l) / seq[static_cast<std::size_t>(p)];
                    snapshots(m, static_cast<Eigen::Index>(obs) * n_pilots + p) = h;
                    grid_obs(static_cast<Eigen::Index>(p) * geometry.num_elements + m, obs) = h;
                }
                ++obs;
            }
        }
        if (m == 0)
            ref_grid = std::move(grid);
    }

    // Steps 5-7: order selection, angle estimation, LCMV arbitration.
    const SpatialCovariance cov = sample_covariance(snapshots);
    const int raw_order = aic_model_order(cov);
    const int order = std::clamp(raw_order, 1, geometry.num_elements - 1);
    const AngleCandidates cands =
        run_estimator(estimator, cov, grid_obs, order, geometry, config, grid_step_deg);
    if (cands.angles_deg.empty())
        throw numeric_error("estimator returned no candidates");
    const double angle = cands.angles_deg.size() > 1 ? lcmv_select(cands.angles_deg, cov, geometry)
                                                     : cands.angles_deg.front();

    // Step 8: SINR from used vs empty subcarriers on the reference channel.
    const int tone_bin = tone_enabled ? tone.subcarrier : -1;
    const double sinr = sinr_estimate(ref_grid, config, tone_bin);

    PipelineResult result;
    result.sync = sync;
    result.cfo_est_hz = cfo;
    result.estimate.angle_deg = angle;
    result.estimate.estimator = estimator;
    result.estimate.channel_order = order;
    result.estimate.raw_aic_order = raw_order;
    result.estimate.candidates_deg = cands.angles_deg;
    result.estimate.sinr_db = sinr;
    result.estimate.timestamp_s = timestamp_s;
    return result;
}

ExperimentReport run_scenario(const ScenarioConfig &cfg,
                              const std::optional<std::filesystem::path> &emit_dir) {
    const WaveformConfig config = config_from_catalog(cfg.config_id);
    const UlaGeometry geometry;

    CalToneSpec tone = cfg.cal_tone;
    if (tone.subcarrier < 0)
        tone.subcarrier = CalToneSpec::default_for(config).subcarrier;

    const ResourceGrid tx_grid = build_srs_grid(config, cfg.snapshot_slots);
    const TimeDomainSignal replica = ofdm_modulate(tx_grid, config);

    // Static hardware state for this scenario.
    Rng intra_rng(mix_seed(cfg.seed, stream_intra));
    ImpairmentState impairments;
    impairments.intra_pair_offset_a_rad = cfg.intra_pair_offset_a_rad.value_or(intra_rng.phase());
    impairments.intra_pair_offset_b_rad = cfg.intra_pair_offset_b_rad.value_or(intra_rng.phase());
    Rng lo_rng(mix_seed(cfg.seed, stream_lo));
    impairments.lo_differential_rad = cfg.lo_differential_rad.value_or(lo_rng.phase());
    impairments.snr_db = cfg.snr_db;

    // Offline 1-4-splitter run: measures the intra-pair offsets. Its LO
    // draw is independent of the runtime one and cancels within pairs.
    const bool noiseless = impairments.noiseless();
    ImpairmentState offline_imp = impairments;
    Rng offline_rng(mix_seed(cfg.seed, stream_offline));
    offline_imp.lo_differential_rad = offline_rng.phase();
    offline_imp.cfo_hz = 0.0;
    offline_imp.timing_offset_samples = 0;
    const MultiChannelCapture splitter = simulate_splitter_capture(
        config, tone, offline_imp, config.slot_samples(0), noiseless ? impairments.snr_db : 40.0,
        mix_seed(cfg.seed, stream_offline + 100));
    const CalibrationTable intra_table = offline_calibrate(quantize_capture(splitter));

    // Ground truth and the UWB range stream.
    TrajectoryTruth truth;
    if (cfg.trajectory) {
        truth = *cfg.trajectory;
    } else {
        const auto [x, y] = polar_to_position(*cfg.user_angle_deg, *cfg.user_range_m);
        truth.landmarks.push_back({"user", x, y, 0.0, cfg.duration_s});
    }
    const std::vector<RangeMeasurement> ranges = simulate_uwb_ranges(
        truth, cfg.uwb_rate_hz, cfg.uwb_sigma_m, cfg.uwb_dropout, mix_seed(cfg.seed, stream_uwb));

    ExperimentReport report;
    report.truth = truth;

    std::vector<AoAEstimate> estimates;
    const auto n_snapshots =
        static_cast<std::size_t>(std::floor((truth.end_time_s() - truth.start_time_s()) / cfg.cadence_s)) + 1;
    for (std::size_t i = 0; i < n_snapshots; ++i) {
        const double t = truth.start_time_s() + static_cast<double>(i) * cfg.cadence_s;
        Rng snap_rng(mix_seed(cfg.seed, stream_snapshot_base + 4 * i));

        const auto [ux, uy] = interpolate_truth(truth, std::min(t, truth.end_time_s()));
        const double true_angle = rad2deg(std::atan2(ux, uy));
        const double true_range = std::hypot(ux, uy);

        std::vector<Ray> rays;
        Ray los;
        los.aoa_deg = true_angle;
        los.delay_samples = true_range / speed_of_light_mps * config.sample_rate_hz;
        los.complex_gain = std::polar(1.0, snap_rng.phase());
        rays.push_back(los);
        for (const Ray &extra : cfg.extra_rays)
            rays.push_back(extra);

        ImpairmentState imp = impairments;
        imp.cfo_hz = cfg.cfo_max_hz > 0.0 ? snap_rng.uniform(-cfg.cfo_max_hz, cfg.cfo_max_hz) : 0.0;
        imp.timing_offset_samples = cfg.timing_offset_min == cfg.timing_offset_max
                                        ? cfg.timing_offset_min
                                        : snap_rng.integer(cfg.timing_offset_min, cfg.timing_offset_max);

        const MultiChannelCapture raw =
            simulate_reception(replica, rays, geometry, imp,
                               cfg.cal_tone_enabled ? std::optional<CalToneSpec>(tone) : std::nullopt,
                               config, mix_seed(cfg.seed, stream_snapshot_base + 4 * i + 1));
        const MultiChannelCapture capture = quantize_capture(raw);

        if (emit_dir) {
            SnapshotMetadata md;
            md.config_id = cfg.config_id;
            md.sample_rate_hz = config.sample_rate_hz;
            md.carrier_freq_hz = config.carrier_freq_hz;
            md.num_samples = capture.num_samples();
            md.timestamp_s = t;
            md.seed = cfg.seed;
            char name[64];
            std::snprintf(name, sizeof(name), "snapshot_%06zu", i);
            write_snapshot(*emit_dir / name, capture, md);
        }

        SnapshotRecord record;
        record.timestamp_s = t;
        record.truth_x_m = ux;
        record.truth_y_m = uy;
        try {
            const PipelineResult r = process_snapshot(capture, config, replica, intra_table, tone,
                                                      cfg.cal_tone_enabled, cfg.estimator,
                                                      cfg.grid_step_deg, t);
            record.raw_aic_order = r.estimate.raw_aic_order;
            record.channel_order = r.estimate.channel_order;
            record.angle_deg = r.estimate.angle_deg;
            record.sinr_db = r.estimate.sinr_db;
            record.sync_metric = r.sync.peak_metric;
            record.cfo_est_hz = r.cfo_est_hz;
            estimates.push_back(r.estimate);
        } catch (const sync_failure &e) {
            record.status = SnapshotStatus::sync_failed;
            record.detail = e.what();
        } catch (const calibration_failure &e) {
            record.status = SnapshotStatus::calibration_failed;
            record.detail = e.what();
        } catch (const processing_error &e) {
            record.status = SnapshotStatus::processing_failed;
            record.detail = e.what();
        }
        report.records.push_back(std::move(record));
    }

    // Fuse angles with ranges; attach fixes back onto their records.
    report.fixes = time_align(estimates, ranges, cfg.range_window_s);
    std::size_t fi = 0;
    for (SnapshotRecord &record : report.records) {
        if (record.status != SnapshotStatus::ok)
            continue;
        if (fi < report.fixes.size() && report.fixes[fi].timestamp_s == record.timestamp_s) {
            record.fix = report.fixes[fi];
            ++fi;
        } else {
            record.status = SnapshotStatus::no_range;
        }
    }
    if (!report.fixes.empty())
        report.cdf = position_error_cdf(report.fixes, truth);
    return report;
}

} // namespace srspos
