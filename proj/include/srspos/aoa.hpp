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

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "srspos/common.hpp"
#include "srspos/simchannel.hpp"
#include "srspos/waveform.hpp"

namespace srspos {

enum class Estimator { MUSIC, ROOT_MUSIC, ESPRIT, ESPRIT_2D, MVDR };

Estimator estimator_from_string(const std::string &name);
std::string to_string(Estimator estimator);

struct SpatialCovariance {
    Eigen::MatrixXcd matrix;
    int num_snapshots = 0;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Candidate angles from one estimator. Delays are filled by the joint
/// angle-delay estimator only.
struct AngleCandidates {
    std::vector<double> angles_deg;
    std::vector<double> delays_samples;
    bool low_confidence = false;
};

/// Per-second angle result.
struct AoAEstimate {
    double angle_deg = 0.0;
    Estimator estimator = Estimator::ESPRIT;
    int channel_order = 1;
    int raw_aic_order = 0;
    std::vector<double> candidates_deg;
    double sinr_db = 0.0;
    double timestamp_s = 0.0;
};

/// R = (1/K) X X^H from element-by-snapshot data.
SpatialCovariance sample_covariance(const Eigen::MatrixXcd &ula_snapshots);

/// Wax-Kailath AIC source enumeration. Returns the raw argmin over
/// k in [0, M-1]; callers clamp to >= 1 for estimation.
int aic_model_order(const SpatialCovariance &covariance);

AngleCandidates music(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry,
                      double grid_step_deg = 0.5);

AngleCandidates root_music(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry);

AngleCandidates esprit(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry);

/// Joint angle-delay estimation on space x comb-subcarrier data.
/// grid_snapshots: rows indexed by (element + M * pilot), one column per
/// SRS symbol observation.
AngleCandidates esprit_2d(const Eigen::MatrixXcd &grid_snapshots, int order, const UlaGeometry &geometry,
                          const WaveformConfig &config);

AngleCandidates mvdr(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry,
                     double grid_step_deg = 0.5);

/// LCMV candidate selection: unit gain at the candidate, nulls at the
/// others; the candidate with maximum beamformer output power wins
/// (ties break toward broadside).
double lcmv_select(const std::vector<double> &candidates_deg, const SpatialCovariance &covariance,
                   const UlaGeometry &geometry);

/// SINR from used vs empty subcarriers of a measured grid. Returns
/// -infinity when the measured signal power is non-positive.
double sinr_estimate(const ResourceGrid &grid, const WaveformConfig &config,
                     int exclude_subcarrier = -1);

/// Dispatch helper used by the pipeline and tests.
AngleCandidates run_estimator(Estimator which, const SpatialCovariance &covariance,
                              const Eigen::MatrixXcd &grid_snapshots, int order,
                              const UlaGeometry &geometry, const WaveformConfig &config,
                              double grid_step_deg = 0.5);

} // namespace srspos
