// SPDX-License-Identifier: Apache-2.0
//
// stcm - semantics-conditioned ISAC channel simulator
// Copyright (C) 2026 The stcm authors
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

// Fidelity and identification metrics: 1D and sliced Wasserstein
// distances, the two-sample Kolmogorov-Smirnov test, CLEAN extraction of
// scattering centers, the target matching score (TMS), CCDF and threshold
// calibration, and the multi-station consistency test.

#pragma once

#include "stcm/synthesizer.hpp"

#include <limits>

namespace stcm {

// ---- Wasserstein --------------------------------------------------------

/// Order-p Wasserstein distance between two empirical distributions,
/// integrating |F_a^-1(u) - F_b^-1(u)|^p exactly over the merged quantile
/// breakpoints.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p = 1.0)
{
    if (a.empty() || b.empty())
        throw EmptySample("wasserstein_1d: empty sample");
    if (!(p >= 1.0))
        throw SchemaError("wasserstein_1d: order p must be >= 1");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    double total = 0.0, u = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size())
    {
        // next breakpoint compared in integer arithmetic: (i+1)/n vs (j+1)/m
        const auto lhs = static_cast<unsigned long long>(i + 1) * y.size();
        const auto rhs = static_cast<unsigned long long>(j + 1) * x.size();
        const double next = lhs <= rhs ? static_cast<double>(i + 1) / n : static_cast<double>(j + 1) / m;
        total += (next - u) * std::pow(std::abs(x[i] - y[j]), p);
        u = next;
        if (lhs <= rhs)
            ++i;
        if (rhs <= lhs)
            ++j;
    }
    return std::pow(total, 1.0 / p);
}

using SampleSet = std::vector<std::vector<double>>;

/// Mean of wasserstein_1d over n_proj random unit directions drawn from the
/// projection stream of `seed`.
inline double sliced_wasserstein(const SampleSet &A, const SampleSet &B, std::size_t n_proj, double p,
                                 std::uint64_t seed)
{
    if (A.empty() || B.empty())
        throw EmptySample("sliced_wasserstein: empty sample");
    if (n_proj < 1)
        throw SchemaError("sliced_wasserstein: n_proj must be >= 1");
    const std::size_t d = A.front().size();
    for (const auto *S : {&A, &B})
        for (const auto &row : *S)
            if (row.size() != d)
                throw DimensionMismatch("sliced_wasserstein: samples of dimension " + std::to_string(row.size()) +
                                        " and " + std::to_string(d));
    Rng rng(stream_seed(seed, Stream::projection));
    std::vector<double> dir(d), pa(A.size()), pb(B.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < n_proj; ++k)
    {
        double norm = 0.0;
        do
        {
            norm = 0.0;
            for (auto &v : dir)
            {
                v = standard_normal(rng);
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        auto project = [&](const SampleSet &S, std::vector<double> &out) {
            for (std::size_t i = 0; i < S.size(); ++i)
            {
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    s += S[i][c] * dir[c];
                out[i] = s / norm;
            }
        };
        project(A, pa);
        project(B, pb);
        sum += wasserstein_1d(pa, pb, p);
    }
    return sum / static_cast<double>(n_proj);
}

/// Per-dimension wasserstein_1d between two sample sets.
inline std::vector<double> marginal_wasserstein(const SampleSet &A, const SampleSet &B, double p = 1.0)
{
    if (A.empty() || B.empty())
        throw EmptySample("marginal_wasserstein: empty sample");
    const std::size_t d = A.front().size();
    std::vector<double> out;
    std::vector<double> a(A.size()), b(B.size());
    for (std::size_t c = 0; c < d; ++c)
    {
        for (std::size_t i = 0; i < A.size(); ++i)
            a[i] = A[i].at(c);
        for (std::size_t i = 0; i < B.size(); ++i)
        {
            if (B[i].size() != d)
                throw DimensionMismatch("marginal_wasserstein: dimension mismatch");
            b[i] = B[i][c];
        }
        out.push_back(wasserstein_1d(a, b, p));
    }
    return out;
}

// ---- Kolmogorov-Smirnov -------------------------------------------------

struct KsResult
{
    double D = 0.0;
    double p = 1.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
/// Small lambda uses the equivalent theta-function form, which converges
/// where the alternating series does not.
inline double kolmogorov_q(double lambda)
{
    if (lambda < 1e-3)
        return 1.0;
    double q = 0.0;
    if (lambda < 1.18)
    {
        const double c = kPi * kPi / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int k = 1;; k += 2)
        {
            const double term = std::exp(-static_cast<double>(k * k) * c);
            s += term;
            if (term < 1e-12)
                break;
        }
        q = 1.0 - std::sqrt(kTwoPi) / lambda * s;
    }
    else
    {
        double sign = 1.0;
        for (int k = 1;; ++k)
        {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            q += sign * 2.0 * term;
            sign = -sign;
            if (term < 1e-12)
                break;
        }
    }
    return std::clamp(q, 0.0, 1.0);
}

inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        throw EmptySample("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double D = 0.0;
    while (i < x.size() && j < y.size())
    {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v)
            ++i;
        while (j < y.size() && y[j] == v)
            ++j;
        D = std::max(D, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double ne = n * m / (n + m);
    const double sq = std::sqrt(ne);
    return {D, kolmogorov_q((sq + 0.12 + 0.11 / sq) * D)};
}

// ---- Scattering-center extraction --------------------------------------

struct ExtractedCenter
{
    double delay = 0.0; // s
    double angle = 0.0; // rx azimuth, rad (0 for SISO)
    cplx amplitude{};
};

struct ExtractionOptions
{
    double delay_origin = 0.0; // s, start of the delay search window
    double residual_floor = 1e-12; // stop when residual energy falls below this fraction
};

inline double beamwidth(const ArrayConfig &a) { return 1.0 / (a.n_elements * a.spacing); }

/// Azimuth grid of the receive array: [-pi/2, pi/2] in steps of beamwidth/4.
inline std::vector<double> angle_grid(const ArrayConfig &a)
{
    if (a.n_elements <= 1)
        return {0.0};
    const double step = beamwidth(a) / 4.0;
    std::vector<double> g;
    const auto half = static_cast<int>(std::floor(0.5 * kPi / step));
    for (int i = -half; i <= half; ++i)
        g.push_back(i * step);
    return g;
}

/// Delay of grid cell m: origin + m / (4B).
inline double delay_cell(const SimConfig &cfg, double origin, int m) { return origin + m / (4.0 * cfg.bandwidth); }

/// CLEAN / matching pursuit over the (delay, angle) grid using tx element 0.
/// The delay window is [origin, origin + (K-1)/B), sampled every 1/(4B).
inline std::vector<ExtractedCenter> extract_centers(const Cfr &H, const SimConfig &cfg, std::size_t k_extract,
                                                    const ExtractionOptions &opt = {})
{
    const int K = H.n_k, N = H.n_rx;
    if (K != cfg.n_subcarriers || N != cfg.rx_array.n_elements)
        throw DimensionMismatch("extract_centers: CFR dimensions do not match the configuration");
    const int L = 4 * (K - 1);
    const double df = cfg.bandwidth / (K - 1);
    const std::vector<double> angles = angle_grid(cfg.rx_array);

    // residual R[r][k] for tx element 0
    std::vector<std::vector<cplx>> R(static_cast<std::size_t>(N), std::vector<cplx>(static_cast<std::size_t>(K)));
    double e0 = 0.0;
    for (int r = 0; r < N; ++r)
        for (int k = 0; k < K; ++k)
        {
            R[r][k] = H.at(r, 0, k);
            e0 += std::norm(R[r][k]);
        }
    std::vector<ExtractedCenter> out;
    if (e0 == 0.0)
        return out;

    std::vector<double> freqs(static_cast<std::size_t>(K));
    std::vector<cplx> origin_rot(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
    {
        freqs[k] = cfg.subcarrier(k);
        origin_rot[k] = std::polar(1.0, kTwoPi * k * df * opt.delay_origin);
    }
    std::vector<std::vector<cplx>> steer(angles.size(), std::vector<cplx>(static_cast<std::size_t>(N)));
    for (std::size_t a = 0; a < angles.size(); ++a)
        for (int r = 0; r < N; ++r)
            steer[a][r] = cfg.rx_array.steering(angles[a], r);

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<std::vector<cplx>> Y(static_cast<std::size_t>(N));
    std::vector<cplx> buf(static_cast<std::size_t>(L));
    for (std::size_t it = 0; it < k_extract; ++it)
    {
        double e = 0.0;
        for (const auto &row : R)
            for (const auto &x : row)
                e += std::norm(x);
        if (e < opt.residual_floor * e0)
            break;
        // Y[r][m] = sum_k R[r][k] exp(+j 2 pi k df (origin + m/(4B)))
        for (int r = 0; r < N; ++r)
        {
            std::fill(buf.begin(), buf.end(), cplx{});
            for (int k = 0; k < K; ++k)
                buf[k] = R[r][k] * origin_rot[k];
            fft.inv(Y[r], buf);
        }
        double best = -1.0;
        std::size_t best_a = 0;
        int best_m = 0;
        cplx best_c{};
        for (std::size_t a = 0; a < angles.size(); ++a)
            for (int m = 0; m < L; ++m)
            {
                cplx c{};
                for (int r = 0; r < N; ++r)
                    c += std::conj(steer[a][r]) * Y[r][m];
                const double mag = std::norm(c);
                if (mag > best)
                {
                    best = mag;
                    best_a = a;
                    best_m = m;
                    best_c = c;
                }
            }
        const double tau = delay_cell(cfg, opt.delay_origin, best_m);
        // Y omits the common factor exp(+j 2 pi f_0 tau)
        const cplx amp = best_c * std::polar(1.0, kTwoPi * freqs[0] * tau) / static_cast<double>(K * N);
        for (int r = 0; r < N; ++r)
            for (int k = 0; k < K; ++k)
                R[r][k] -= amp * steer[best_a][r] * std::polar(1.0, -kTwoPi * freqs[k] * tau);
        out.push_back({tau, cfg.rx_array.n_elements > 1 ? angles[best_a] : 0.0, amp});
    }
    return out;
}

// ---- Target matching score ----------------------------------------------

/// Minimum-cost assignment of rows to columns (Hungarian method, O(n^2 m)).
/// Returns for each row its column, or -1 when rows outnumber columns.
inline std::vector<int> hungarian(const std::vector<std::vector<double>> &cost)
{
    const std::size_t rows = cost.size();
    if (rows == 0)
        return {};
    const std::size_t cols = cost.front().size();
    const bool transpose = rows > cols;
    const std::size_t n = transpose ? cols : rows, m = transpose ? rows : cols;
    auto a = [&](std::size_t i, std::size_t j) { return transpose ? cost[j - 1][i - 1] : cost[i - 1][j - 1]; };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i)
    {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do
        {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j)
                if (!used[j])
                {
                    const double cur = a(i0, j) - u[i0] - v[j];
                    if (cur < minv[j])
                    {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta)
                    {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (std::size_t j = 0; j <= m; ++j)
                if (used[j])
                {
                    u[p[j]] += delta;
                    v[j] -= delta;
                }
                else
                    minv[j] -= delta;
            j0 = j1;
        } while (p[j0] != 0);
        do
        {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assign(rows, -1);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0)
        {
            if (transpose)
                assign[j - 1] = static_cast<int>(p[j] - 1);
            else
                assign[p[j] - 1] = static_cast<int>(j - 1);
        }
    return assign;
}

/// Attribute scales of the matching cost. angle = 0 drops the angle term.
struct TmsScales
{
    double delay = 1e-9;  // s
    double angle = 0.25;  // rad
    double amp_db = 6.0;  // dB
};

inline TmsScales tms_scales(const SimConfig &cfg)
{
    return {1.0 / cfg.bandwidth, cfg.rx_array.n_elements > 1 ? beamwidth(cfg.rx_array) : 0.0, 6.0};
}

inline double match_cost(const ExtractedCenter &a, const ExtractedCenter &b, const TmsScales &s)
{
    const double dt = (a.delay - b.delay) / s.delay;
    double cost = dt * dt;
    if (s.angle > 0.0)
    {
        // a ULA sees only sin(az); fold back-lobe azimuths onto the front
        const double da = (std::asin(std::sin(a.angle)) - std::asin(std::sin(b.angle))) / s.angle;
        cost += da * da;
    }
    const double ma = std::abs(a.amplitude), mb = std::abs(b.amplitude);
    const double ratio_db = 20.0 * std::log10(std::max(ma, 1e-300) / std::max(mb, 1e-300));
    cost += (ratio_db / s.amp_db) * (ratio_db / s.amp_db);
    return cost;
}

/// Sum of exp(-cost) over the optimal assignment divided by the larger set
/// size; 0 when either set is empty.
inline double tms(std::span<const ExtractedCenter> estimated, std::span<const ExtractedCenter> reference,
                  const TmsScales &scales)
{
    if (estimated.empty() || reference.empty())
        return 0.0;
    std::vector<std::vector<double>> cost(estimated.size(), std::vector<double>(reference.size()));
    for (std::size_t i = 0; i < estimated.size(); ++i)
        for (std::size_t j = 0; j < reference.size(); ++j)
            cost[i][j] = match_cost(estimated[i], reference[j], scales);
    const auto assign = hungarian(cost);
    double sum = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i)
        if (assign[i] >= 0)
            sum += std::exp(-cost[i][static_cast<std::size_t>(assign[i])]);
    return sum / static_cast<double>(std::max(estimated.size(), reference.size()));
}

/// Station and target pose used to project library sets into the
/// (delay, angle, amplitude) domain.
struct ObservationGeometry
{
    SimConfig cfg;
    Vec3 position = Vec3::Zero();
    double heading = 0.0;
    double time = 0.0;
};

inline std::vector<ExtractedCenter> project_reference(const McsSet &set, const ObservationGeometry &g)
{
    const std::array<double, 4> rates{};
    const MotionState motion{g.position, Vec3::Zero(), g.heading, class_parts(set.cls, rates)};
    std::vector<ExtractedCenter> out;
    for (const auto &p : target_paths(set, motion, g.cfg.tx, g.cfg.rx, g.cfg.f_c, g.time))
        out.push_back({p.delay, g.cfg.rx_array.n_elements > 1 ? p.aoa.azimuth : 0.0, p.amplitude});
    return out;
}

struct Identification
{
    TargetClass cls = TargetClass::vehicle;
    double score = 0.0;
    std::size_t index = 0;
};

using ProjectedLibrary = std::vector<std::pair<TargetClass, std::vector<ExtractedCenter>>>;

inline ProjectedLibrary project_library(std::span<const McsSet> library, const ObservationGeometry &g)
{
    ProjectedLibrary out;
    out.reserve(library.size());
    for (const auto &set : library)
        out.emplace_back(set.cls, project_reference(set, g));
    return out;
}

/// Arg-max TMS over the library; ties go to the lowest library index.
inline Identification identify(std::span<const ExtractedCenter> estimated, const ProjectedLibrary &library,
                               const TmsScales &scales)
{
    if (library.empty())
        throw EmptyLibrary("identify: empty library");
    Identification best{library.front().first, -1.0, 0};
    for (std::size_t i = 0; i < library.size(); ++i)
    {
        const double s = tms(estimated, library[i].second, scales);
        if (s > best.score)
            best = {library[i].first, s, i};
    }
    return best;
}

inline Identification identify(std::span<const ExtractedCenter> estimated, std::span<const McsSet> library,
                               const ObservationGeometry &g)
{
    return identify(estimated, project_library(library, g), tms_scales(g.cfg));
}

// ---- CCDF and threshold -------------------------------------------------

struct CcdfPoint
{
    double value;
    double exceedance; // fraction of samples >= value
};

inline std::vector<CcdfPoint> ccdf(std::span<const double> values)
{
    if (values.empty())
        throw EmptySample("ccdf: empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    std::vector<CcdfPoint> out;
    const auto n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i == 0 || v[i] != v[i - 1])
            out.push_back({v[i], static_cast<double>(v.size() - i) / n});
    return out;
}

inline double exceedance(std::span<const double> values, double threshold)
{
    if (values.empty())
        throw EmptySample("exceedance: empty sample");
    const auto hits = std::count_if(values.begin(), values.end(), [&](double x) { return x >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

/// Empirical (1 - q)-quantile with lower interpolation, so at least a
/// fraction q of the reference scores reach the threshold.
inline double calibrate_threshold(std::span<const double> reference, double q = 0.95)
{
    if (reference.empty())
        throw EmptySample("calibrate_threshold: empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw SchemaError("calibrate_threshold: q must be in [0, 1]");
    std::vector<double> v(reference.begin(), reference.end());
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::floor((1.0 - q) * static_cast<double>(v.size() - 1) + 1e-9));
    return v[std::min(idx, v.size() - 1)];
}

// ---- Multi-station consistency -------------------------------------------

inline constexpr double kSignificance = 0.05;

/// One K-S p-value per target instance, comparing the TMS vectors across
/// stations of model-generated and reference channels.
inline std::vector<double> collaborative_pvalues(const std::vector<std::vector<double>> &model_tms,
                                                 const std::vector<std::vector<double>> &reference_tms)
{
    if (model_tms.size() != reference_tms.size())
        throw DimensionMismatch("collaborative: model and reference instance counts differ");
    std::vector<double> out;
    for (std::size_t i = 0; i < model_tms.size(); ++i)
    {
        if (model_tms[i].size() < 2 || reference_tms[i].size() < 2)
            throw InsufficientSamples("collaborative: at least 2 stations are required per instance");
        out.push_back(ks_two_sample(model_tms[i], reference_tms[i]).p);
    }
    return out;
}

/// Channels of one target instance seen from one station.
struct StationObservation
{
    Cfr model;
    Cfr reference;
    ObservationGeometry geometry;
    ExtractionOptions extraction;
};

/// Extracts, identifies against the library at each station's geometry and
/// runs the K-S test per instance. Instances evaluate in parallel.
inline std::vector<double> collaborative_eval(const std::vector<std::vector<StationObservation>> &instances,
                                              std::span<const McsSet> library, std::size_t k_extract,
                                              unsigned threads = 1)
{
    if (library.empty())
        throw EmptyLibrary("collaborative_eval: empty library");
    for (const auto &inst : instances)
        if (inst.size() < 2)
            throw InsufficientSamples("collaborative_eval: at least 2 stations are required");
    std::vector<std::vector<double>> model(instances.size()), reference(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        for (const auto &obs : instances[i])
        {
            const ProjectedLibrary lib = project_library(library, obs.geometry);
            const TmsScales scales = tms_scales(obs.geometry.cfg);
            const auto em = extract_centers(obs.model, obs.geometry.cfg, k_extract, obs.extraction);
            const auto er = extract_centers(obs.reference, obs.geometry.cfg, k_extract, obs.extraction);
            model[i].push_back(identify(em, lib, scales).score);
            reference[i].push_back(identify(er, lib, scales).score);
        }
    });
    return collaborative_pvalues(model, reference);
}

// ---- Report -------------------------------------------------------------

struct FidelityReport
{
    double sliced_wasserstein = 0.0;
    std::size_t n_projections = 0;
    std::uint64_t projection_seed = 0;
    std::vector<double> marginal_distances;
    std::vector<double> tms_scores;
    std::vector<CcdfPoint> ccdf_curve;
    double threshold = 0.0;
    std::vector<KsResult> ks;

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["sliced_wasserstein"] = sliced_wasserstein;
        j["n_projections"] = n_projections;
        j["projection_seed"] = projection_seed;
        j["marginal_distances"] = marginal_distances;
        j["tms_scores"] = tms_scores;
        j["threshold"] = threshold;
        j["ccdf"] = nlohmann::ordered_json::array();
        for (const auto &p : ccdf_curve)
            j["ccdf"].push_back({p.value, p.exceedance});
        j["ks"] = nlohmann::ordered_json::array();
        for (const auto &r : ks)
            j["ks"].push_back({{"D", r.D}, {"p", r.p}});
        return j;
    }
};

inline void write_ccdf_csv(std::ostream &os, std::span<const CcdfPoint> curve)
{
    os << "value,exceedance\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto &p : curve)
    {
        line.str("");
        line << p.value << ',' << p.exceedance << '\n';
        os << line.str();
    }
}

} // namespace stcm
