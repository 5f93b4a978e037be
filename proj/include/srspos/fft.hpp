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

#include <cstddef>

#include "srspos/common.hpp"

namespace srspos {

/// In-place radix-2 DIT transform. n must be a power of two.
/// Unnormalized: ifft(fft(x)) == n * x.
void fft_inplace(cd *data, std::size_t n, bool inverse);

/// Unitary transforms (1/sqrt(n) both ways); these preserve energy.
cvec fft_unitary(const cvec &x, bool inverse);

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Linear cross-correlation of `x` against `ref` via zero-padded FFTs:
/// out[lag] = sum_n x[lag + n] * conj(ref[n]), lag in [0, x.size() - ref.size()].
std::vector<cd> cross_correlate(const cvec &x, const cvec &ref);

} // namespace srspos
