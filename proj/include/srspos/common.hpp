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

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace srspos {

using cd   = std::complex<double>;
using cvec = std::vector<cd>;

inline constexpr double pi          = std::numbers::pi;
inline constexpr double two_pi      = 2.0 * std::numbers::pi;
inline constexpr double speed_of_light_mps = 299792458.0;

inline constexpr double deg2rad(double d) { return d * pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / pi; }

/// Wrap a phase into (-pi, pi].
inline double wrap_phase(double phi) {
    phi = std::remainder(phi, two_pi);
    if (phi <= -pi)
        phi += two_pi;
    return phi;
}

inline double mean_power(const cvec &x) {
    if (x.empty())
        return 0.0;
    double acc = 0.0;
    for (const cd &v : x)
        acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

inline double energy(const cvec &x) {
    double acc = 0.0;
    for (const cd &v : x)
        acc += std::norm(v);
    return acc;
}

/// Deterministic 64-bit mix used to derive independent per-snapshot seeds
/// from a scenario seed (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace srspos
