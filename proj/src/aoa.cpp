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

#include "srspos/aoa.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "srspos/errors.hpp"

namespace srspos {

namespace {

constexpr double loading_factor = 1e-3;

Eigen::VectorXcd steering(double aoa_deg, const UlaGeometry &geometry) {
    const cvec a = steering_vector(aoa_deg, geometry);
    return Eigen::Map<const Eigen::VectorXcd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

struct HermitianEig {
    Eigen::VectorXd values;    // descending
    Eigen::MatrixXcd vectors;  // columns matching values
};

HermitianEig eig_descending(const Eigen::MatrixXcd &R) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(R);
    if (solver.info() != Eigen::Success)
        throw numeric_error("eigendecomposition failed");
    const Eigen::Index m = R.rows();
    HermitianEig out;
    out.values.resize(m);
    out.vectors.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.values(i)      = solver.eigenvalues()(m - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(m - 1 - i);
    }
    return out;
}

void check_psd(const Eigen::VectorXd &eigenvalues_desc) {
    const double trace = eigenvalues_desc.sum();
    if (eigenvalues_desc.minCoeff() < -1e-9 * std::max(trace, 1e-300))
        throw numeric_error("covariance is not positive semi-definite");
}

double angle_from_phase_step(double phase_step, const UlaGeometry &geometry) {
    double s = phase_step / (two_pi * geometry.element_spacing_wavelengths);
    if (std::abs(s) > 1.05)
        throw numeric_error("phase step outside the arcsin domain");
    s = std::clamp(s, -1.0 + 1e-12, 1.0 - 1e-12);
    return rad2deg(std::asin(s));
}

/// Peak search over theta in (-90, 90) for spectra of the form
/// P = 1 / denom: locate the `order` deepest denominator minima and refine
/// each by a parabola through the denominator samples (exact near a
/// quadratic null, unlike interpolating the sharp 1/x peak).
template <typename Denom>
AngleCandidates grid_search(Denom &&denom, int order, double step_deg) {
    std::vector<double> grid;
    for (double t = -90.0 + step_deg; t < 90.0 - step_deg / 2; t += step_deg)
        grid.push_back(t);
    const std::size_t n = grid.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = denom(grid[i]);

    const double d_max = *std::max_element(d.begin(), d.end());
    const double d_min = *std::min_element(d.begin(), d.end());

    std::vector<std::size_t> minima;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (d[i] < d[i - 1] && d[i] <= d[i + 1])
            minima.push_back(i);
    std::sort(minima.begin(), minima.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    // Flat spectrum: no usable structure, fall back to the smallest values.
    if (static_cast<int>(minima.size()) < order) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        std::sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
        for (std::size_t idx : all) {
            if (static_cast<int>(minima.size()) >= order)
                break;
            const bool near = std::any_of(minima.begin(), minima.end(), [&](std::size_t m) {
                return std::abs(static_cast<long>(m) - static_cast<long>(idx)) < 3;
            });
            if (!near)
                minima.push_back(idx);
        }
    }

    AngleCandidates out;
    out.low_confidence = (d_max - d_min) <= 1e-6 * std::max(d_max, 1e-300);
    for (int c = 0; c < order && c < static_cast<int>(minima.size()); ++c) {
        const std::size_t i = minima[static_cast<std::size_t>(c)];
        double theta = grid[i];
        if (i > 0 && i + 1 < n) {
            const double den = d[i - 1] - 2.0 * d[i] + d[i + 1];
            if (den > 0.0) {
                const double delta = 0.5 * (d[i - 1] - d[i + 1]) / den;
                if (std::abs(delta) <= 1.0)
                    theta += delta * step_deg;
            }
        }
        out.angles_deg.push_back(theta);
    }
    return out;
}

Eigen::MatrixXcd noise_subspace(const SpatialCovariance &covariance, int order) {
    const int m = covariance.dim();
    if (order < 1)
        throw usage_error("estimator order must be >= 1");
    if (order >= m)
        throw usage_error("order " + std::to_string(order) + " leaves an empty noise subspace (M = " +
                          std::to_string(m) + ")");
    HermitianEig eig = eig_descending(covariance.matrix);
    check_psd(eig.values);
    return eig.vectors.rightCols(m - order);
}

Eigen::MatrixXcd signal_subspace(const SpatialCovariance &covariance, int order) {
    const int m = covariance.dim();
    if (order < 1 || order > m - 1)
        throw usage_error("estimator order must be in [1, M-1]");
    HermitianEig eig = eig_descending(covariance.matrix);
    check_psd(eig.values);
    return eig.vectors.leftCols(order);
}

std::vector<cd> polynomial_roots(const std::vector<cd> &coeffs_ascending) {
    // Trim vanishing leading coefficients.
    double max_abs = 0.0;
    for (const cd &c : coeffs_ascending)
        max_abs = std::max(max_abs, std::abs(c));
    if (max_abs <= 0.0)
        throw numeric_error("zero polynomial");
    std::size_t degree = coeffs_ascending.size() - 1;
    while (degree > 0 && std::abs(coeffs_ascending[degree]) < 1e-14 * max_abs)
        --degree;
    if (degree == 0)
        return {};

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(degree),
                                                        static_cast<Eigen::Index>(degree));
    const cd lead = coeffs_ascending[degree];
    for (std::size_t i = 0; i + 1 < degree; ++i)
        companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t i = 0; i < degree; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(degree - 1)) =
            -coeffs_ascending[i] / lead;

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion);
    if (solver.info() != Eigen::Success)
        throw numeric_error("polynomial rooting failed");
    std::vector<cd> roots(static_cast<std::size_t>(degree));
    for (std::size_t i = 0; i < degree; ++i)
        roots[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    return roots;
}

Eigen::MatrixXcd least_squares_invariance(const Eigen::MatrixXcd &e1, const Eigen::MatrixXcd &e2) {
    return e1.colPivHouseholderQr().solve(e2);
}

} // namespace

Estimator estimator_from_string(const std::string &name) {
    std::string s;
    for (char c : name)
        s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "music")
        return Estimator::MUSIC;
    if (s == "root-music" || s == "root_music" || s == "rootmusic")
        return Estimator::ROOT_MUSIC;
    if (s == "esprit")
        return Estimator::ESPRIT;
    if (s == "esprit2d" || s == "esprit-2d" || s == "esprit_2d" || s == "2d-esprit")
        return Estimator::ESPRIT_2D;
    if (s == "mvdr")
        return Estimator::MVDR;
    throw config_error("unknown estimator '" + name + "'");
}

std::string to_string(Estimator estimator) {
    switch (estimator) {
    case Estimator::MUSIC:
        return "music";
    case Estimator::ROOT_MUSIC:
        return "root-music";
    case Estimator::ESPRIT:
        return "esprit";
    case Estimator::ESPRIT_2D:
        return "esprit2d";
    case Estimator::MVDR:
        return "mvdr";
    }
    return "unknown";
}

SpatialCovariance sample_covariance(const Eigen::MatrixXcd &ula_snapshots) {
    const Eigen::Index k = ula_snapshots.cols();
    if (k < 3)
        throw usage_error("covariance needs at least 3 snapshots, got " + std::to_string(k));
    SpatialCovariance cov;
    cov.matrix = (ula_snapshots * ula_snapshots.adjoint()) / static_cast<double>(k);
    cov.matrix = 0.5 * (cov.matrix + cov.matrix.adjoint().eval());
    cov.num_snapshots = static_cast<int>(k);
    return cov;
}

int aic_model_order(const SpatialCovariance &covariance) {
    if (covariance.num_snapshots < 1)
        throw usage_error("covariance carries no snapshot count");
    const int m = covariance.dim();
    const double k = covariance.num_snapshots;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(covariance.matrix);
    if (solver.info() != Eigen::Success)
        throw numeric_error("eigendecomposition failed");
    Eigen::VectorXd lam = solver.eigenvalues().reverse();
    check_psd(lam);
    const double lam_floor = std::max(lam(0), 1e-300) * 1e-15;
    for (int i = 0; i < m; ++i)
        lam(i) = std::max(lam(i), lam_floor);

    // Textbook penalty 2k(2M-k) overfits small arrays at a fixed ~10%
    // rate (the noise-eigenvalue spread statistic has constant power
    // against one extra source, independent of K). Doubling the penalty
    // drops the overfit rate below 1% at K ~ 1000 without touching the
    // detection of genuine second sources.
    constexpr double overfit_guard = 2.0;

    int best_k = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int kk = 0; kk < m; ++kk) {
        const int n_noise = m - kk;
        double log_sum = 0.0;
        double sum = 0.0;
        for (int i = kk; i < m; ++i) {
            log_sum += std::log(lam(i));
            sum += lam(i);
        }
        const double log_gm = log_sum / n_noise;
        const double log_am = std::log(sum / n_noise);
        const double value =
            -2.0 * k * n_noise * (log_gm - log_am) + overfit_guard * 2.0 * kk * (2 * m - kk);
        if (value < best_val) {
            best_val = value;
            best_k = kk;
        }
    }
    return best_k;
}

AngleCandidates music(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry,
                      double grid_step_deg) {
    const Eigen::MatrixXcd en = noise_subspace(covariance, order);
    return grid_search(
        [&](double theta) {
            const Eigen::VectorXcd a = steering(theta, geometry);
            return (en.adjoint() * a).squaredNorm();
        },
        order, grid_step_deg);
}

AngleCandidates root_music(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry) {
    const int m = covariance.dim();
    const Eigen::MatrixXcd en = noise_subspace(covariance, order);
    const Eigen::MatrixXcd c  = en * en.adjoint();

    // p(z) = sum_l s_l z^{l+M-1}, s_l = sum of the l-th diagonal of C.
    std::vector<cd> coeffs(static_cast<std::size_t>(2 * m - 1), cd{0.0, 0.0});
    for (int l = -(m - 1); l <= m - 1; ++l) {
        cd s{0.0, 0.0};
        for (int i = 0; i < m; ++i) {
            const int j = i + l;
            if (j >= 0 && j < m)
                s += c(i, j);
        }
        coeffs[static_cast<std::size_t>(l + m - 1)] = s;
    }

    std::vector<cd> roots = polynomial_roots(coeffs);
    // Prefer roots nearest the unit circle; each source contributes a
    // conjugate-reciprocal pair, so skip a root that mirrors a taken one.
    std::sort(roots.begin(), roots.end(),
              [](const cd &a, const cd &b) { return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0); });

    AngleCandidates out;
    std::vector<cd> taken;
    for (const cd &z : roots) {
        if (static_cast<int>(out.angles_deg.size()) >= order)
            break;
        bool mirror = false;
        for (const cd &t : taken)
            if (std::abs(z * std::conj(t) - cd{1.0, 0.0}) < 1e-6 || std::abs(z - t) < 1e-9)
                mirror = true;
        if (mirror)
            continue;
        double theta;
        try {
            theta = angle_from_phase_step(std::arg(z), geometry);
        } catch (const numeric_error &) {
            continue; // invalid root, use the next-nearest
        }
        taken.push_back(z);
        out.angles_deg.push_back(theta);
    }
    if (static_cast<int>(out.angles_deg.size()) < order)
        throw numeric_error("root-MUSIC found fewer valid roots than the requested order");
    return out;
}

AngleCandidates esprit(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry) {
    const int m = covariance.dim();
    const Eigen::MatrixXcd es = signal_subspace(covariance, order);
    const Eigen::MatrixXcd e1 = es.topRows(m - 1);
    const Eigen::MatrixXcd e2 = es.bottomRows(m - 1);
    const Eigen::MatrixXcd psi = least_squares_invariance(e1, e2);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(psi);
    if (solver.info() != Eigen::Success)
        throw numeric_error("ESPRIT invariance eigendecomposition failed");

    AngleCandidates out;
    for (Eigen::Index i = 0; i < psi.rows(); ++i)
        out.angles_deg.push_back(angle_from_phase_step(std::arg(solver.eigenvalues()(i)), geometry));
    return out;
}

AngleCandidates esprit_2d(const Eigen::MatrixXcd &grid_snapshots, int order, const UlaGeometry &geometry,
                          const WaveformConfig &config) {
    const int m = geometry.num_elements;
    if (grid_snapshots.rows() % m != 0)
        throw usage_error("grid snapshot rows must be element-major (element + M * pilot)");
    const Eigen::Index p = grid_snapshots.rows() / m;
    if (p < 2)
        throw usage_error("joint angle-delay estimation needs at least 2 comb subcarriers");
    if (order < 1)
        throw usage_error("estimator order must be >= 1");

    // Sliding sub-band smoothing. The channel is static within a snapshot,
    // so the raw symbol columns are collinear; shifting a window along the
    // comb rotates each ray by its own delay phase, which restores the
    // rank needed to separate rays.
    const Eigen::Index w = std::min<Eigen::Index>(16, p);
    const Eigen::Index n_win = p - w + 1;
    const Eigen::Index l = grid_snapshots.cols();
    Eigen::MatrixXcd smoothed(m * w, n_win * l);
    for (Eigen::Index q = 0; q < n_win; ++q)
        for (Eigen::Index col = 0; col < l; ++col)
            smoothed.col(q * l + col) = grid_snapshots.block(q * m, col, m * w, 1);

    Eigen::MatrixXcd cov = smoothed * smoothed.adjoint() / static_cast<double>(n_win * l);
    cov = 0.5 * (cov + cov.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gs(cov);
    if (gs.info() != Eigen::Success)
        throw numeric_error("subspace decomposition failed");
    const Eigen::Index dim = cov.rows();
    if (order >= dim)
        throw usage_error("order exceeds the smoothed aperture");
    const double lam_max = gs.eigenvalues()(dim - 1);
    Eigen::MatrixXcd us(dim, order);
    for (int i = 0; i < order; ++i) {
        const double lam = gs.eigenvalues()(dim - 1 - i);
        if (lam <= 1e-12 * std::max(lam_max, 1e-300))
            throw numeric_error("rank-deficient observations for the requested order");
        us.col(i) = gs.eigenvectors().col(dim - 1 - i);
    }

    // Row selections on the (element, window-bin) product structure.
    Eigen::MatrixXcd e1s((m - 1) * w, order), e2s((m - 1) * w, order);
    for (Eigen::Index ww = 0; ww < w; ++ww)
        for (int mm = 0; mm + 1 < m; ++mm) {
            e1s.row(ww * (m - 1) + mm) = us.row(ww * m + mm);
            e2s.row(ww * (m - 1) + mm) = us.row(ww * m + mm + 1);
        }
    Eigen::MatrixXcd e1f(m * (w - 1), order), e2f(m * (w - 1), order);
    for (Eigen::Index ww = 0; ww + 1 < w; ++ww)
        for (int mm = 0; mm < m; ++mm) {
            e1f.row(ww * m + mm) = us.row(ww * m + mm);
            e2f.row(ww * m + mm) = us.row((ww + 1) * m + mm);
        }

    const Eigen::MatrixXcd psi_space = least_squares_invariance(e1s, e2s);
    const Eigen::MatrixXcd psi_freq  = least_squares_invariance(e1f, e2f);

    // Diagonalize the space invariance; the same basis pairs the delays.
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(psi_space);
    if (solver.info() != Eigen::Success)
        throw numeric_error("2D invariance eigendecomposition failed");
    const Eigen::MatrixXcd t = solver.eigenvectors();
    const Eigen::MatrixXcd d_freq = t.colPivHouseholderQr().solve(psi_freq * t);

    AngleCandidates out;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        out.angles_deg.push_back(angle_from_phase_step(std::arg(solver.eigenvalues()(i)), geometry));
        const double delay = -std::arg(d_freq(i, i)) * static_cast<double>(config.fft_size) /
                             (two_pi * static_cast<double>(config.comb_ktc));
        out.delays_samples.push_back(delay);
    }
    return out;
}

AngleCandidates mvdr(const SpatialCovariance &covariance, int order, const UlaGeometry &geometry,
                     double grid_step_deg) {
    const int m = covariance.dim();
    if (order < 1 || order >= m)
        throw usage_error("MVDR order must be in [1, M-1]");
    const double trace = covariance.matrix.trace().real();
    if (!(trace > 0.0))
        throw numeric_error("covariance has non-positive trace");
    Eigen::MatrixXcd loaded = covariance.matrix;
    loaded.diagonal().array() += loading_factor * trace / m;
    const Eigen::MatrixXcd inv = loaded.inverse();
    if (!inv.allFinite())
        throw numeric_error("covariance singular after diagonal loading");

    return grid_search(
        [&](double theta) {
            const Eigen::VectorXcd a = steering(theta, geometry);
            return (a.adjoint() * inv * a)(0, 0).real();
        },
        order, grid_step_deg);
}

double lcmv_select(const std::vector<double> &candidates_deg, const SpatialCovariance &covariance,
                   const UlaGeometry &geometry) {
    if (candidates_deg.empty())
        throw usage_error("LCMV selection needs at least one candidate");
    if (candidates_deg.size() == 1)
        return candidates_deg.front();

    // Merge candidates closer than 0.5 deg (the constraint matrix would be
    // rank-deficient otherwise), keeping one member per cluster so the
    // selection always returns an input candidate.
    std::vector<double> merged;
    std::vector<double> sorted = candidates_deg;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cluster{sorted.front()};
    auto flush = [&]() {
        const double mean =
            std::accumulate(cluster.begin(), cluster.end(), 0.0) / static_cast<double>(cluster.size());
        double rep = cluster.front();
        for (double c : cluster)
            if (std::abs(c - mean) < std::abs(rep - mean))
                rep = c;
        merged.push_back(rep);
        cluster.clear();
    };
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] - sorted[i - 1] >= 0.5)
            flush();
        cluster.push_back(sorted[i]);
    }
    flush();
    if (merged.size() == 1)
        return merged.front();

    const int m = covariance.dim();
    const auto c_n = static_cast<Eigen::Index>(std::min<std::size_t>(merged.size(), static_cast<std::size_t>(m)));
    Eigen::MatrixXcd constraints(m, c_n);
    for (Eigen::Index i = 0; i < c_n; ++i)
        constraints.col(i) = steering(merged[static_cast<std::size_t>(i)], geometry);

    const double trace = covariance.matrix.trace().real();
    Eigen::MatrixXcd loaded = covariance.matrix;
    loaded.diagonal().array() += loading_factor * std::max(trace, 1e-300) / m;
    const Eigen::MatrixXcd ri_c = loaded.ldlt().solve(constraints);
    const Eigen::MatrixXcd gram = constraints.adjoint() * ri_c;

    double best_power = -1.0;
    double best_angle = merged.front();
    for (Eigen::Index i = 0; i < c_n; ++i) {
        Eigen::VectorXcd f = Eigen::VectorXcd::Zero(c_n);
        f(i) = 1.0;
        const Eigen::VectorXcd x = gram.fullPivLu().solve(f);
        if (!x.allFinite())
            throw numeric_error("LCMV constraint system is singular");
        const Eigen::VectorXcd w = ri_c * x;
        const double power = (w.adjoint() * covariance.matrix * w)(0, 0).real();
        const double angle = merged[static_cast<std::size_t>(i)];
        if (power > best_power ||
            (power == best_power && std::abs(angle) < std::abs(best_angle))) {
            best_power = power;
            best_angle = angle;
        }
    }
    return best_angle;
}

double sinr_estimate(const ResourceGrid &grid, const WaveformConfig &config, int exclude_subcarrier) {
    double signal_acc = 0.0;
    double noise_acc = 0.0;
    std::size_t signal_n = 0;
    std::size_t noise_n = 0;
    for (int l = 0; l < grid.num_symbols; ++l) {
        if (!config.is_srs_symbol(l % symbols_per_slot))
            continue;
        for (int k = 0; k < grid.num_subcarriers; ++k) {
            if (grid.used(k, l)) {
                signal_acc += std::norm(grid.at(k, l));
                ++signal_n;
            } else if (k != exclude_subcarrier) {
                noise_acc += std::norm(grid.at(k, l));
                ++noise_n;
            }
        }
    }
    if (signal_n == 0)
        throw usage_error("grid carries no SRS symbol");
    if (noise_n == 0)
        throw usage_error("grid has no empty comb positions to measure noise");

    const double noise = noise_acc / static_cast<double>(noise_n);
    const double signal = signal_acc / static_cast<double>(signal_n) - noise;
    if (signal <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (noise <= 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / noise);
}

AngleCandidates run_estimator(Estimator which, const SpatialCovariance &covariance,
                              const Eigen::MatrixXcd &grid_snapshots, int order,
                              const UlaGeometry &geometry, const WaveformConfig &config,
                              double grid_step_deg) {
    switch (which) {
    case Estimator::MUSIC:
        return music(covariance, order, geometry, grid_step_deg);
    case Estimator::ROOT_MUSIC:
        return root_music(covariance, order, geometry);
    case Estimator::ESPRIT:
        return esprit(covariance, order, geometry);
    case Estimator::ESPRIT_2D:
        return esprit_2d(grid_snapshots, order, geometry, config);
    case Estimator::MVDR:
        return mvdr(covariance, order, geometry, grid_step_deg);
    }
    throw usage_error("unknown estimator");
}

} // namespace srspos
