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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "srspos/aoa.hpp"
#include "srspos/frontend.hpp"
#include "srspos/fusion.hpp"
#include "srspos/simchannel.hpp"
#include "srspos/waveform.hpp"

namespace srspos {

/// Sidecar metadata of an IQ snapshot file pair (<base>.meta + <base>.iq).
struct SnapshotMetadata {
    ConfigId config_id = ConfigId::I;
    double sample_rate_hz = 0.0;
    double carrier_freq_hz = 0.0;
    int num_channels = num_rx_channels;
    std::size_t num_samples = 0;
    double timestamp_s = 0.0;
    std::uint64_t seed = 0;
};

/// Payload: channel-major float32 little-endian interleaved I/Q.
void write_snapshot(const std::filesystem::path &basename, const MultiChannelCapture &capture,
                    const SnapshotMetadata &metadata);
std::pair<MultiChannelCapture, SnapshotMetadata> read_snapshot(const std::filesystem::path &basename);

/// Rounds a capture through the float32 on-disk representation without
/// touching the filesystem; processing quantized captures keeps in-memory
/// runs byte-identical to snapshot-file runs.
MultiChannelCapture quantize_capture(const MultiChannelCapture &capture);

/// Key = value text file with '#' comments; repeated keys accumulate.
std::multimap<std::string, std::string> parse_key_value_file(const std::filesystem::path &path);
std::multimap<std::string, std::string> parse_key_value_text(const std::string &text);

struct ScenarioConfig {
    ConfigId config_id = ConfigId::II;
    Estimator estimator = Estimator::ESPRIT;
    std::uint64_t seed = 1;
    int snapshot_slots = 2;
    double cadence_s = 1.0;
    double grid_step_deg = 0.5;

    double snr_db = 20.0;
    double cfo_max_hz = 200.0;
    std::size_t timing_offset_min = 256;
    std::size_t timing_offset_max = 2048;
    /// Intra-pair offsets are static hardware properties: drawn once per
    /// scenario unless pinned here.
    std::optional<double> intra_pair_offset_a_rad;
    std::optional<double> intra_pair_offset_b_rad;
    /// LO differential is redrawn per run unless pinned.
    std::optional<double> lo_differential_rad;
    CalToneSpec cal_tone;
    bool cal_tone_enabled = true;

    /// Static mode: fixed user position plus optional extra multipath.
    std::optional<double> user_angle_deg;
    std::optional<double> user_range_m;
    std::vector<Ray> extra_rays;
    double duration_s = 10.0;

    /// Trajectory mode (overrides static mode when set).
    std::optional<TrajectoryTruth> trajectory;

    double uwb_rate_hz = 1.0;
    double uwb_sigma_m = 0.3;
    UwbDropoutModel uwb_dropout;
    double range_window_s = 0.5;

    static ScenarioConfig from_file(const std::filesystem::path &path);
    static ScenarioConfig from_text(const std::string &text);
};

enum class SnapshotStatus { ok, sync_failed, calibration_failed, processing_failed, no_range };

/// One row of the experiment report.
struct SnapshotRecord {
    double timestamp_s = 0.0;
    SnapshotStatus status = SnapshotStatus::ok;
    int raw_aic_order = 0;
    int channel_order = 0;
    double angle_deg = 0.0;
    double sinr_db = 0.0;
    double sync_metric = 0.0;
    double cfo_est_hz = 0.0;
    std::optional<PositionFix> fix;
    double truth_x_m = 0.0;
    double truth_y_m = 0.0;
    std::string detail;
};

struct ExperimentReport {
    std::vector<SnapshotRecord> records;
    std::vector<PositionFix> fixes;
    TrajectoryTruth truth;
    std::optional<ErrorCdf> cdf;

    std::size_t snapshot_count() const { return records.size(); }
    std::size_t fix_count() const { return fixes.size(); }
};

struct PipelineResult {
    AoAEstimate estimate;
    SyncResult sync;
    double cfo_est_hz = 0.0;
};

/// Full receiver pipeline on one (quantized) capture given a calibration
/// table with intra-pair offsets filled. Throws processing_error kinds.
PipelineResult process_snapshot(const MultiChannelCapture &capture, const WaveformConfig &config,
                                const TimeDomainSignal &replica, const CalibrationTable &intra_table,
                                const CalToneSpec &tone, bool tone_enabled, Estimator estimator,
                                double grid_step_deg, double timestamp_s);

/// End-to-end scenario: per simulated second, generate a snapshot, run the
/// eight-step pipeline, fuse with the UWB range stream, and collect the
/// error CDF. Deterministic given cfg.seed. When emit_dir is set, snapshot
/// file pairs are written there.
ExperimentReport run_scenario(const ScenarioConfig &cfg,
                              const std::optional<std::filesystem::path> &emit_dir = std::nullopt);

/// records.csv: one row per snapshot.
std::string format_records_csv(const ExperimentReport &report);
/// cdf.csv: (error_m, probability) pairs.
std::string format_cdf_csv(const ExperimentReport &report);
/// summary.txt: fix yield and error percentiles 50/90/95.
std::string format_summary(const ExperimentReport &report);

/// Writes records.csv, cdf.csv and summary.txt under out_dir.
void emit_report(const ExperimentReport &report, const std::filesystem::path &out_dir);

std::string to_string(SnapshotStatus status);

/// AoA-record CSV used by the `process` -> `evaluate` hand-off.
std::string format_aoa_csv(const std::vector<SnapshotRecord> &records);
std::vector<AoAEstimate> read_aoa_csv(const std::filesystem::path &path);

std::string format_ranges_csv(const std::vector<RangeMeasurement> &ranges);
std::vector<RangeMeasurement> read_ranges_csv(const std::filesystem::path &path);

std::string format_trajectory(const TrajectoryTruth &truth);
TrajectoryTruth read_trajectory(const std::filesystem::path &path);

} // namespace srspos
