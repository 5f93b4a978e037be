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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "srspos/errors.hpp"
#include "srspos/harness.hpp"

namespace srspos {

namespace {

constexpr double sinr_report_floor_db = -40.0;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double clamp_sinr(double sinr_db) {
    return std::isfinite(sinr_db) ? sinr_db : std::max(sinr_db, sinr_report_floor_db);
}

std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ','))
        fields.push_back(cur);
    return fields;
}

} // namespace

std::string to_string(SnapshotStatus status) {
    switch (status) {
    case SnapshotStatus::ok:
        return "ok";
    case SnapshotStatus::sync_failed:
        return "sync_failed";
    case SnapshotStatus::calibration_failed:
        return "calibration_failed";
    case SnapshotStatus::processing_failed:
        return "processing_failed";
    case SnapshotStatus::no_range:
        return "no_range";
    }
    return "unknown";
}

std::string format_records_csv(const ExperimentReport &report) {
    std::string out = "timestamp_s,status,raw_aic_order,channel_order,angle_deg,sinr_db,sync_metric,"
                      "cfo_est_hz,range_m,x_m,y_m,truth_x_m,truth_y_m,error_m\n";
    for (const SnapshotRecord &r : report.records) {
        out += num(r.timestamp_s) + "," + to_string(r.status);
        if (r.status == SnapshotStatus::ok || r.status == SnapshotStatus::no_range) {
            out += "," + std::to_string(r.raw_aic_order) + "," + std::to_string(r.channel_order) + "," +
                   num(r.angle_deg) + "," + num(clamp_sinr(r.sinr_db)) + "," + num(r.sync_metric) + "," +
                   num(r.cfo_est_hz);
        } else {
            out += ",,,,,,";
        }
        if (r.fix) {
            const double err = std::hypot(r.fix->x_m - r.truth_x_m, r.fix->y_m - r.truth_y_m);
            out += "," + num(r.fix->range_m) + "," + num(r.fix->x_m) + "," + num(r.fix->y_m) + "," +
                   num(r.truth_x_m) + "," + num(r.truth_y_m) + "," + num(err);
        } else {
            out += ",,,," + num(r.truth_x_m) + "," + num(r.truth_y_m) + ",";
        }
        out += "\n";
    }
    return out;
}

std::string format_cdf_csv(const ExperimentReport &report) {
    std::string out = "error_m,probability\n";
    if (!report.cdf)
        return out;
    const auto &errors = report.cdf->sorted_errors();
    for (std::size_t i = 0; i < errors.size(); ++i)
        out += num(errors[i]) + "," + num(static_cast<double>(i + 1) / static_cast<double>(errors.size())) +
               "\n";
    return out;
}

std::string format_summary(const ExperimentReport &report) {
    std::ostringstream out;
    out << "snapshots = " << report.snapshot_count() << "\n";
    out << "fixes = " << report.fix_count() << "\n";
    const double yield = report.snapshot_count() == 0
                             ? 0.0
                             : static_cast<double>(report.fix_count()) /
                                   static_cast<double>(report.snapshot_count());
    out << "yield = " << num(yield) << "\n";
    std::size_t sync_failures = 0;
    std::size_t cal_failures = 0;
    std::size_t proc_failures = 0;
    std::size_t no_range = 0;
    for (const SnapshotRecord &r : report.records) {
        sync_failures += r.status == SnapshotStatus::sync_failed;
        cal_failures += r.status == SnapshotStatus::calibration_failed;
        proc_failures += r.status == SnapshotStatus::processing_failed;
        no_range += r.status == SnapshotStatus::no_range;
    }
    out << "sync_failures = " << sync_failures << "\n";
    out << "calibration_failures = " << cal_failures << "\n";
    out << "processing_failures = " << proc_failures << "\n";
    out << "unpaired = " << no_range << "\n";
    if (report.cdf) {
        out << "p50_error_m = " << num(report.cdf->percentile(50.0)) << "\n";
        out << "p90_error_m = " << num(report.cdf->percentile(90.0)) << "\n";
        out << "p95_error_m = " << num(report.cdf->percentile(95.0)) << "\n";
    } else {
        out << "p50_error_m = nan\np90_error_m = nan\np95_error_m = nan\n";
    }
    return out.str();
}

void emit_report(const ExperimentReport &report, const std::filesystem::path &out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char *name, const std::string &content) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out)
            throw format_error("cannot write " + (out_dir / name).string());
        out << content;
    };
    write("records.csv", format_records_csv(report));
    write("cdf.csv", format_cdf_csv(report));
    write("summary.txt", format_summary(report));
}

std::string format_aoa_csv(const std::vector<SnapshotRecord> &records) {
    std::string out = "timestamp_s,status,raw_aic_order,channel_order,angle_deg,sinr_db\n";
    for (const SnapshotRecord &r : records) {
        out += num(r.timestamp_s) + "," + to_string(r.status);
        if (r.status == SnapshotStatus::ok || r.status == SnapshotStatus::no_range)
            out += "," + std::to_string(r.raw_aic_order) + "," + std::to_string(r.channel_order) + "," +
                   num(r.angle_deg) + "," + num(clamp_sinr(r.sinr_db));
        else
            out += ",,,,";
        out += "\n";
    }
    return out;
}

std::vector<AoAEstimate> read_aoa_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw format_error("cannot open " + path.string());
    std::vector<AoAEstimate> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto f = split_line(line);
        if (f.size() < 6)
            throw format_error(path.string() + ": expected 6 columns, got " + std::to_string(f.size()));
        if (f[1] != "ok" && f[1] != "no_range")
            continue;
        AoAEstimate est;
        est.timestamp_s = std::stod(f[0]);
        est.raw_aic_order = std::stoi(f[2]);
        est.channel_order = std::stoi(f[3]);
        est.angle_deg = std::stod(f[4]);
        est.candidates_deg = {est.angle_deg};
        est.sinr_db = std::stod(f[5]);
        out.push_back(est);
    }
    return out;
}

std::string format_ranges_csv(const std::vector<RangeMeasurement> &ranges) {
    std::string out = "timestamp_s,range_m,valid\n";
    for (const RangeMeasurement &r : ranges)
        out += num(r.timestamp_s) + "," + num(r.range_m) + "," + (r.valid ? "1" : "0") + "\n";
    return out;
}

std::vector<RangeMeasurement> read_ranges_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw format_error("cannot open " + path.string());
    std::vector<RangeMeasurement> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto f = split_line(line);
        if (f.size() != 3)
            throw format_error(path.string() + ": expected 3 columns");
        out.push_back({std::stod(f[0]), std::stod(f[1]), f[2] == "1"});
    }
    return out;
}

std::string format_trajectory(const TrajectoryTruth &truth) {
    std::string out = "# landmark = label, x_m, y_m, arrival_time_s, dwell_s\n";
    for (const Landmark &lm : truth.landmarks)
        out += "landmark = " + lm.label + ", " + num(lm.x_m) + ", " + num(lm.y_m) + ", " +
               num(lm.arrival_time_s) + ", " + num(lm.dwell_s) + "\n";
    return out;
}

TrajectoryTruth read_trajectory(const std::filesystem::path &path) {
    const auto kv = parse_key_value_file(path);
    TrajectoryTruth truth;
    const auto range = kv.equal_range("landmark");
    for (auto it = range.first; it != range.second; ++it) {
        std::vector<std::string> f;
        std::string cur;
        std::istringstream in(it->second);
        while (std::getline(in, cur, ',')) {
            const auto b = cur.find_first_not_of(" \t");
            const auto e = cur.find_last_not_of(" \t\r");
            f.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
        }
        if (f.size() != 5)
            throw format_error(path.string() + ": landmark needs 'label, x, y, arrival, dwell'");
        truth.landmarks.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    }
    if (truth.landmarks.empty())
        throw format_error(path.string() + ": no landmark entries");
    return truth;
}

} // namespace srspos
