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

#include <random>

#include "srspos/common.hpp"

namespace srspos {

/// Seeded generator wrapper. Every stochastic operation in the project
/// takes one of these (or a raw seed) explicitly, so runs are reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cd complex_gaussian(double variance) {
        std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
        return {g(engine_), g(engine_)};
    }

    cvec complex_gaussian_vector(std::size_t n, double variance) {
        cvec out(n);
        std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
        for (cd &v : out)
            v = {g(engine_), g(engine_)};
        return out;
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        return u(engine_);
    }

    double gaussian(double mean, double sigma) {
        std::normal_distribution<double> g(mean, sigma);
        return g(engine_);
    }

    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
        std::uniform_int_distribution<std::uint64_t> u(lo, hi);
        return u(engine_);
    }

    /// Phase drawn uniformly from (-pi, pi].
    double phase() { return wrap_phase(uniform(-pi, pi)); }

    std::mt19937_64 &engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

} // namespace srspos
