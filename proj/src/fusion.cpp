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

#include "srspos/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "srspos/errors.hpp"
#include "srspos/rng.hpp"

namespace srspos {

double UwbDropoutModel::dropout_probability(double distance_m) const {
    if (distance_m <= reliable_range_m)
        return 0.0;
    const double t = (distance_m - reliable_range_m) / (max_range_m - reliable_range_m);
    return p_max * std::min(t, 1.0);
}

std::pair<double, double> polar_to_position(double angle_deg, double range_m) {
    if (!(range_m > 0.0))
        throw usage_error("range must be positive");
    if (!(std::abs(angle_deg) < 90.0))
        throw usage_error("angle must satisfy |angle| < 90 deg");
    const double a = deg2rad(angle_deg);
    return {range_m * std::sin(a), range_m * std::cos(a)};
}

TrajectoryTruth make_trajectory(const std::vector<std::tuple<std::string, double, double, double>> &points,
                                double speed_mps) {
    if (points.empty())
        throw usage_error("trajectory needs at least one landmark");
    if (!(speed_mps > 0.0))
        throw usage_error("speed must be positive");

    TrajectoryTruth truth;
    double t = 0.0;
    double prev_x = 0.0;
    double prev_y = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &[label, x, y, dwell] = points[i];
        if (dwell < 0.0)
            throw usage_error("landmark dwell must be non-negative");
        if (i > 0)
            t += std::hypot(x - prev_x, y - prev_y) / speed_mps;
        truth.landmarks.push_back({label, x, y, t, dwell});
        t += dwell;
        prev_x = x;
        prev_y = y;
    }
    return truth;
}

TrajectoryTruth default_trajectory() {
    const double speed_mps = 4.0 / 3.6;
    const double t2_y = std::sqrt(90.0 * 90.0 - 30.0 * 30.0); // |T2| = 90 m
    return make_trajectory(
        {
            {"A1", 0.0, 15.0, 30.0},
            {"A2", -10.0, 30.0, 30.0},
            {"T3", 15.0, 55.0, 30.0},
            {"T2", 30.0, t2_y, 30.0},
            {"T1", 10.0, 45.0, 30.0},
            {"A1", 0.0, 15.0, 30.0},
        },
        speed_mps);
}

std::pair<double, double> interpolate_truth(const TrajectoryTruth &truth, double timestamp_s) {
    const auto &lm = truth.landmarks;
    if (lm.empty())
        throw usage_error("empty trajectory");
    if (timestamp_s < truth.start_time_s() || timestamp_s > truth.end_time_s())
        throw std::out_of_range("timestamp outside the trajectory span");

    for (std::size_t i = 0; i < lm.size(); ++i) {
        const Landmark &cur = lm[i];
        if (timestamp_s <= cur.arrival_time_s + cur.dwell_s)
            return {cur.x_m, cur.y_m};
        if (i + 1 < lm.size()) {
            const Landmark &next = lm[i + 1];
            if (timestamp_s < next.arrival_time_s) {
                const double depart = cur.arrival_time_s + cur.dwell_s;
                const double f = (timestamp_s - depart) / (next.arrival_time_s - depart);
                return {cur.x_m + f * (next.x_m - cur.x_m), cur.y_m + f * (next.y_m - cur.y_m)};
            }
        }
    }
    return {lm.back().x_m, lm.back().y_m};
}

std::vector<RangeMeasurement> simulate_uwb_ranges(const TrajectoryTruth &truth, double rate_hz,
                                                  double noise_sigma_m, const UwbDropoutModel &dropout,
                                                  std::uint64_t seed) {
    if (!(rate_hz > 0.0))
        throw usage_error("range rate must be positive");
    Rng rng(seed);
    std::vector<RangeMeasurement> out;
    const double dt = 1.0 / rate_hz;
    for (double t = truth.start_time_s(); t <= truth.end_time_s() + 1e-9; t += dt) {
        const auto [x, y] = interpolate_truth(truth, std::min(t, truth.end_time_s()));
        const double dist = std::hypot(x, y);
        RangeMeasurement meas;
        meas.timestamp_s = t;
        meas.range_m = dist + (noise_sigma_m > 0.0 ? rng.gaussian(0.0, noise_sigma_m) : 0.0);
        meas.valid = rng.uniform(0.0, 1.0) >= dropout.dropout_probability(dist);
        out.push_back(meas);
    }
    return out;
}

std::vector<PositionFix> time_align(const std::vector<AoAEstimate> &aoa_stream,
                                    const std::vector<RangeMeasurement> &ranges, double window_s) {
    std::vector<PositionFix> fixes;
    for (const AoAEstimate &est : aoa_stream) {
        const RangeMeasurement *best = nullptr;
        double best_gap = window_s;
        for (const RangeMeasurement &r : ranges) {
            if (!r.valid)
                continue;
            const double gap = std::abs(r.timestamp_s - est.timestamp_s);
            if (gap <= best_gap) {
                best_gap = gap;
                best = &r;
            }
        }
        if (best == nullptr || !(best->range_m > 0.0))
            continue;
        const auto [x, y] = polar_to_position(est.angle_deg, best->range_m);
        fixes.push_back({est.timestamp_s, x, y, est.angle_deg, best->range_m});
    }
    return fixes;
}

ErrorCdf::ErrorCdf(std::vector<double> errors_m) : errors_(std::move(errors_m)) {
    if (errors_.empty())
        throw usage_error("error CDF needs at least one sample");
    std::sort(errors_.begin(), errors_.end());
}

double ErrorCdf::percentile(double q) const {
    if (q < 0.0 || q > 100.0)
        throw usage_error("percentile rank must be in [0, 100]");
    if (errors_.size() == 1)
        return errors_.front();
    const double h = q / 100.0 * static_cast<double>(errors_.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, errors_.size() - 1);
    const double f = h - static_cast<double>(lo);
    return errors_[lo] + f * (errors_[hi] - errors_[lo]);
}

ErrorCdf position_error_cdf(const std::vector<PositionFix> &fixes, const TrajectoryTruth &truth) {
    if (fixes.empty())
        throw usage_error("error CDF needs at least one fix");
    std::vector<double> errors;
    errors.reserve(fixes.size());
    for (const PositionFix &fix : fixes) {
        const auto [tx, ty] = interpolate_truth(truth, fix.timestamp_s);
        errors.push_back(std::hypot(fix.x_m - tx, fix.y_m - ty));
    }
    return ErrorCdf(std::move(errors));
}

} // namespace srspos
