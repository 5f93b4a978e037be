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

#include "srspos/fft.hpp"

#include <cassert>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "srspos/errors.hpp"

namespace srspos {

namespace {

// Twiddle factors exp(-j*2*pi*k/n) for k < n/2, cached per size.
const cvec &twiddles_for(std::size_t n) {
    static std::shared_mutex mtx;
    static std::map<std::size_t, cvec> cache;
    {
        std::shared_lock lock(mtx);
        auto it = cache.find(n);
        if (it != cache.end())
            return it->second;
    }
    std::unique_lock lock(mtx);
    auto [it, inserted] = cache.try_emplace(n);
    if (inserted) {
        it->second.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k)
            it->second[k] = std::polar(1.0, -two_pi * static_cast<double>(k) / static_cast<double>(n));
    }
    return it->second;
}

} // namespace

void fft_inplace(cd *data, std::size_t n, bool inverse) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw usage_error("fft size must be a nonzero power of two");
    if (n == 1)
        return;

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(data[i], data[j]);
    }

    const cvec &tw = twiddles_for(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cd w = tw[k * step];
                if (inverse)
                    w = std::conj(w);
                const cd u = data[i + k];
                const cd v = data[i + k + len / 2] * w;
                data[i + k]           = u + v;
                data[i + k + len / 2] = u - v;
            }
        }
    }
}

cvec fft_unitary(const cvec &x, bool inverse) {
    cvec out = x;
    fft_inplace(out.data(), out.size(), inverse);
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.size()));
    for (cd &v : out)
        v *= scale;
    return out;
}

std::vector<cd> cross_correlate(const cvec &x, const cvec &ref) {
    if (ref.empty() || ref.size() > x.size())
        throw usage_error("cross_correlate: reference must be non-empty and no longer than the signal");
    const std::size_t n = next_pow2(x.size() + ref.size());
    cvec fx(n, cd{0.0, 0.0});
    cvec fr(n, cd{0.0, 0.0});
    std::copy(x.begin(), x.end(), fx.begin());
    std::copy(ref.begin(), ref.end(), fr.begin());
    fft_inplace(fx.data(), n, false);
    fft_inplace(fr.data(), n, false);
    for (std::size_t i = 0; i < n; ++i)
        fx[i] *= std::conj(fr[i]);
    fft_inplace(fx.data(), n, true);
    const double scale = 1.0 / static_cast<double>(n);
    const std::size_t lags = x.size() - ref.size() + 1;
    std::vector<cd> out(lags);
    for (std::size_t i = 0; i < lags; ++i)
        out[i] = fx[i] * scale;
    return out;
}

} // namespace srspos
