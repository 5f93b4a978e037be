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

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "srspos/errors.hpp"
#include "srspos/harness.hpp"
#include "srspos/rng.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 1;
constexpr int exit_processing_error = 2;

srspos::ScenarioConfig load_config(const std::string &path, std::uint64_t seed_override,
                                   const std::string &estimator_override, int snapshot_len_override) {
    srspos::ScenarioConfig cfg = srspos::ScenarioConfig::from_file(path);
    if (seed_override != 0)
        cfg.seed = seed_override;
    if (!estimator_override.empty())
        cfg.estimator = srspos::estimator_from_string(estimator_override);
    if (snapshot_len_override > 0)
        cfg.snapshot_slots = snapshot_len_override;
    return cfg;
}

void write_text(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw srspos::format_error("cannot write " + path.string());
    out << content;
}

int cmd_run(const srspos::ScenarioConfig &cfg, const std::filesystem::path &out_dir, bool emit_snapshots) {
    std::filesystem::create_directories(out_dir);
    const auto report = srspos::run_scenario(
        cfg, emit_snapshots ? std::optional<std::filesystem::path>(out_dir / "snapshots") : std::nullopt);
    if (emit_snapshots)
        std::filesystem::create_directories(out_dir / "snapshots");
    srspos::emit_report(report, out_dir);
    write_text(out_dir / "truth.txt", srspos::format_trajectory(report.truth));
    std::cout << srspos::format_summary(report);
    return exit_ok;
}

int cmd_simulate(const srspos::ScenarioConfig &cfg, const std::filesystem::path &out_dir) {
    std::filesystem::create_directories(out_dir / "snapshots");
    const auto report = srspos::run_scenario(cfg, out_dir / "snapshots");

    const srspos::WaveformConfig config = srspos::config_from_catalog(cfg.config_id);
    srspos::CalToneSpec tone = cfg.cal_tone;
    if (tone.subcarrier < 0)
        tone.subcarrier = srspos::CalToneSpec::default_for(config).subcarrier;

    // Offline splitter capture so `calibrate` has an input to work from.
    srspos::ImpairmentState imp;
    srspos::Rng intra_rng(srspos::mix_seed(cfg.seed, 1));
    imp.intra_pair_offset_a_rad = cfg.intra_pair_offset_a_rad.value_or(intra_rng.phase());
    imp.intra_pair_offset_b_rad = cfg.intra_pair_offset_b_rad.value_or(intra_rng.phase());
    const auto splitter = srspos::simulate_splitter_capture(config, tone, imp, config.slot_samples(0),
                                                            40.0, srspos::mix_seed(cfg.seed, 103));
    srspos::SnapshotMetadata md;
    md.config_id = cfg.config_id;
    md.sample_rate_hz = config.sample_rate_hz;
    md.carrier_freq_hz = config.carrier_freq_hz;
    md.num_samples = splitter.num_samples();
    md.seed = cfg.seed;
    srspos::write_snapshot(out_dir / "splitter", srspos::quantize_capture(splitter), md);

    std::vector<srspos::RangeMeasurement> ranges = srspos::simulate_uwb_ranges(
        report.truth, cfg.uwb_rate_hz, cfg.uwb_sigma_m, cfg.uwb_dropout, srspos::mix_seed(cfg.seed, 4));
    write_text(out_dir / "ranges.csv", srspos::format_ranges_csv(ranges));
    write_text(out_dir / "truth.txt", srspos::format_trajectory(report.truth));
    std::cout << "wrote " << report.snapshot_count() << " snapshots, ranges.csv, truth.txt, splitter.{meta,iq}\n";
    return exit_ok;
}

int cmd_calibrate(const std::filesystem::path &capture_base, const std::filesystem::path &out_file) {
    const auto [capture, md] = srspos::read_snapshot(capture_base);
    const srspos::CalibrationTable table = srspos::offline_calibrate(capture);
    write_text(out_file, table.serialize());
    std::cout << table.serialize();
    return exit_ok;
}

int cmd_process(const srspos::ScenarioConfig &cfg, const std::filesystem::path &snapshot_dir,
                const std::filesystem::path &cal_file, const std::filesystem::path &out_dir) {
    std::ifstream cal_in(cal_file);
    if (!cal_in)
        throw srspos::config_error("cannot open calibration table " + cal_file.string());
    std::stringstream cal_buf;
    cal_buf << cal_in.rdbuf();
    const srspos::CalibrationTable intra_table = srspos::CalibrationTable::deserialize(cal_buf.str());

    std::vector<std::filesystem::path> bases;
    for (const auto &entry : std::filesystem::directory_iterator(snapshot_dir))
        if (entry.path().extension() == ".meta") {
            auto base = entry.path();
            base.replace_extension();
            bases.push_back(base);
        }
    std::sort(bases.begin(), bases.end());
    if (bases.empty())
        throw srspos::config_error("no .meta snapshots under " + snapshot_dir.string());

    std::vector<srspos::SnapshotRecord> records;
    for (const auto &base : bases) {
        const auto [capture, md] = srspos::read_snapshot(base);
        const srspos::WaveformConfig config = srspos::config_from_catalog(md.config_id);
        srspos::CalToneSpec tone = cfg.cal_tone;
        if (tone.subcarrier < 0)
            tone.subcarrier = srspos::CalToneSpec::default_for(config).subcarrier;
        const auto grid = srspos::build_srs_grid(config, cfg.snapshot_slots);
        const auto replica = srspos::ofdm_modulate(grid, config);

        srspos::SnapshotRecord record;
        record.timestamp_s = md.timestamp_s;
        try {
            const auto r = srspos::process_snapshot(capture, config, replica, intra_table, tone,
                                                    cfg.cal_tone_enabled, cfg.estimator,
                                                    cfg.grid_step_deg, md.timestamp_s);
            record.raw_aic_order = r.estimate.raw_aic_order;
            record.channel_order = r.estimate.channel_order;
            record.angle_deg = r.estimate.angle_deg;
            record.sinr_db = r.estimate.sinr_db;
            record.sync_metric = r.sync.peak_metric;
            record.cfo_est_hz = r.cfo_est_hz;
        } catch (const srspos::sync_failure &e) {
            record.status = srspos::SnapshotStatus::sync_failed;
            record.detail = e.what();
        } catch (const srspos::calibration_failure &e) {
            record.status = srspos::SnapshotStatus::calibration_failed;
            record.detail = e.what();
        } catch (const srspos::processing_error &e) {
            record.status = srspos::SnapshotStatus::processing_failed;
            record.detail = e.what();
        }
        records.push_back(std::move(record));
    }
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "aoa.csv", srspos::format_aoa_csv(records));
    std::cout << "processed " << records.size() << " snapshots -> " << (out_dir / "aoa.csv").string() << "\n";
    return exit_ok;
}

int cmd_evaluate(const std::filesystem::path &aoa_csv, const std::filesystem::path &ranges_csv,
                 const std::filesystem::path &truth_file, double window_s,
                 const std::filesystem::path &out_dir) {
    const auto estimates = srspos::read_aoa_csv(aoa_csv);
    const auto ranges = srspos::read_ranges_csv(ranges_csv);
    const auto truth = srspos::read_trajectory(truth_file);

    srspos::ExperimentReport report;
    report.truth = truth;
    for (const auto &est : estimates) {
        srspos::SnapshotRecord record;
        record.timestamp_s = est.timestamp_s;
        record.raw_aic_order = est.raw_aic_order;
        record.channel_order = est.channel_order;
        record.angle_deg = est.angle_deg;
        record.sinr_db = est.sinr_db;
        const auto [tx, ty] = srspos::interpolate_truth(
            truth, std::clamp(est.timestamp_s, truth.start_time_s(), truth.end_time_s()));
        record.truth_x_m = tx;
        record.truth_y_m = ty;
        report.records.push_back(record);
    }
    report.fixes = srspos::time_align(estimates, ranges, window_s);
    std::size_t fi = 0;
    for (auto &record : report.records) {
        if (fi < report.fixes.size() && report.fixes[fi].timestamp_s == record.timestamp_s) {
            record.fix = report.fixes[fi];
            ++fi;
        } else {
            record.status = srspos::SnapshotStatus::no_range;
        }
    }
    if (!report.fixes.empty())
        report.cdf = srspos::position_error_cdf(report.fixes, truth);
    srspos::emit_report(report, out_dir);
    std::cout << srspos::format_summary(report);
    return exit_ok;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Single-anchor positioning laboratory: SRS waveforms in, position-error CDFs out"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::string estimator;
    int snapshot_len = 0;

    auto add_common = [&](CLI::App *sub, bool need_config) {
        auto *opt = sub->add_option("--config", config_path, "scenario config file");
        if (need_config)
            opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--estimator", estimator, "music|root-music|esprit|esprit2d|mvdr");
        sub->add_option("--snapshot-len", snapshot_len, "snapshot length in slots");
    };

    auto *run = app.add_subcommand("run", "simulate + process + evaluate in one pass");
    bool emit_snapshots = false;
    add_common(run, true);
    run->add_flag("--emit-snapshots", emit_snapshots, "also write snapshot files");

    auto *simulate = app.add_subcommand("simulate", "emit snapshot files, ranges and truth");
    add_common(simulate, true);

    auto *calibrate = app.add_subcommand("calibrate", "offline table from a 1-4-splitter capture");
    std::string capture_base;
    std::string cal_out = "calibration.txt";
    calibrate->add_option("--capture", capture_base, "splitter snapshot basename (no extension)")->required();
    calibrate->add_option("--table", cal_out, "output calibration table file");

    auto *process = app.add_subcommand("process", "snapshots -> AoA records");
    std::string snapshot_dir;
    std::string cal_file;
    add_common(process, true);
    process->add_option("--in", snapshot_dir, "snapshot directory")->required();
    process->add_option("--cal", cal_file, "calibration table file")->required();

    auto *evaluate = app.add_subcommand("evaluate", "AoA records + ranges + truth -> CDF");
    std::string aoa_csv;
    std::string ranges_csv;
    std::string truth_file;
    double window_s = 0.5;
    evaluate->add_option("--aoa", aoa_csv, "AoA records CSV")->required();
    evaluate->add_option("--ranges", ranges_csv, "ranges CSV")->required();
    evaluate->add_option("--truth", truth_file, "trajectory truth file")->required();
    evaluate->add_option("--window", window_s, "pairing window in seconds");
    evaluate->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(load_config(config_path, seed, estimator, snapshot_len), out_dir, emit_snapshots);
        if (simulate->parsed())
            return cmd_simulate(load_config(config_path, seed, estimator, snapshot_len), out_dir);
        if (calibrate->parsed())
            return cmd_calibrate(capture_base, cal_out);
        if (process->parsed())
            return cmd_process(load_config(config_path, seed, estimator, snapshot_len), snapshot_dir,
                               cal_file, out_dir);
        if (evaluate->parsed())
            return cmd_evaluate(aoa_csv, ranges_csv, truth_file, window_s, out_dir);
    } catch (const srspos::config_error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_processing_error;
    }
    return exit_config_error;
}
