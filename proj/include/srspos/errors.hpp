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

#include <stdexcept>
#include <string>

namespace srspos {

/// Bad static configuration (unknown waveform id, tone on an occupied
/// subcarrier, grid wider than the FFT, malformed config file).
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Caller violated an operation precondition.
class usage_error : public std::invalid_argument {
  public:
    explicit usage_error(const std::string &msg) : std::invalid_argument(msg) {}
};

/// Base for runtime failures of the receiver pipeline. A scenario run
/// records these per snapshot and continues.
class processing_error : public std::runtime_error {
  public:
    explicit processing_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Replica correlation peak below the detection threshold.
class sync_failure : public processing_error {
  public:
    explicit sync_failure(const std::string &msg) : processing_error(msg) {}
};

/// Cal tone missing or too weak to measure a phase.
class calibration_failure : public processing_error {
  public:
    explicit calibration_failure(const std::string &msg) : processing_error(msg) {}
};

/// Not enough samples left in the capture for the requested operation.
class truncation_error : public processing_error {
  public:
    explicit truncation_error(const std::string &msg) : processing_error(msg) {}
};

/// Numerical breakdown (non-PSD covariance, singular constraint matrix).
class numeric_error : public processing_error {
  public:
    explicit numeric_error(const std::string &msg) : processing_error(msg) {}
};

/// Phase measurement with correlation magnitude near the noise floor.
class low_confidence_error : public processing_error {
  public:
    explicit low_confidence_error(const std::string &msg) : processing_error(msg) {}
};

/// Malformed or truncated snapshot/sidecar file.
class format_error : public std::runtime_error {
  public:
    explicit format_error(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace srspos
