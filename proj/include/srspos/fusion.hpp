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

#include <string>
#include <vector>

#include "srspos/aoa.hpp"
#include "srspos/common.hpp"

namespace srspos {

struct RangeMeasurement {
    double timestamp_s = 0.0;
    double range_m = 0.0;
    bool valid = true;
};

/// Fused 2D fix in the station-centric frame (station at the origin,
/// y-axis along array broadside).
struct PositionFix {
    double timestamp_s = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
    double angle_deg = 0.0;
    double range_m = 0.0;
};

struct Landmark {
    std::string label;
    double x_m = 0.0;
    double y_m = 0.0;
    double arrival_time_s = 0.0;
    double dwell_s = 0.0;
};

/// Ground-truth trajectory: stationary dwells at surveyed landmarks,
/// piecewise-linear interpolation between them.
struct TrajectoryTruth {
    std::vector<Landmark> landmarks;

    double start_time_s() const { return landmarks.front().arrival_time_s; }
    double end_time_s() const {
        return landmarks.back().arrival_time_s + landmarks.back().dwell_s;
    }
};

/// Dropout model: reliable up to 40 m, failure probability rising linearly
/// to p_max at 90 m.
struct UwbDropoutModel {
    double reliable_range_m = 40.0;
    double max_range_m = 90.0;
    double p_max = 0.5;

    double dropout_probability(double distance_m) const;
};

/// (angle, range) -> (x, y): x = r sin(angle), y = r cos(angle).
std::pair<double, double> polar_to_position(double angle_deg, double range_m);

/// Builds a trajectory from a landmark polyline: arrival times follow from
/// walking speed and per-landmark dwells, starting at t = 0.
TrajectoryTruth make_trajectory(const std::vector<std::tuple<std::string, double, double, double>> &points,
                                double speed_mps);

/// The reconstructed pedestrian loop: A1 at 15 m broadside, maximum
/// distance 90 m at T2, 4 km/h, 30 s dwells. The intermediate coordinates
/// are a reconstruction; only the A1/T2 distances are surveyed constraints.
TrajectoryTruth default_trajectory();

/// Position at `timestamp`: constant during dwells, linear on legs.
std::pair<double, double> interpolate_truth(const TrajectoryTruth &truth, double timestamp_s);

/// Noisy UWB ranging stream with distance-dependent dropouts.
std::vector<RangeMeasurement> simulate_uwb_ranges(const TrajectoryTruth &truth, double rate_hz,
                                                  double noise_sigma_m, const UwbDropoutModel &dropout,
                                                  std::uint64_t seed);

/// Pairs each AoA estimate with the nearest valid range within
/// +-window_s; unpaired estimates yield no fix.
std::vector<PositionFix> time_align(const std::vector<AoAEstimate> &aoa_stream,
                                    const std::vector<RangeMeasurement> &ranges, double window_s = 0.5);

/// Empirical error CDF with interpolated percentile queries.
class ErrorCdf {
  public:
    explicit ErrorCdf(std::vector<double> errors_m);

    /// Interpolated order statistic, q in [0, 100].
    double percentile(double q) const;
    const std::vector<double> &sorted_errors() const { return errors_; }
    std::size_t size() const { return errors_.size(); }

  private:
    std::vector<double> errors_;
};

ErrorCdf position_error_cdf(const std::vector<PositionFix> &fixes, const TrajectoryTruth &truth);

} // namespace srspos
