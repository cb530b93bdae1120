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

// Geometry-based stochastic clutter. The delay/power/angle chain follows the
// cluster steps of the 3GPP TR 38.901 fast-fading procedure (exponential
// delays scaled by r_tau, exponential power profile with per-cluster
// shadowing); every ray is then tied to an explicit single-bounce scatterer
// on the delay ellipsoid.

#pragma once

#include "stcm/propagation.hpp"
#include "stcm/semantics.hpp"

#include <map>

namespace stcm {

struct ClutterParams
{
    int n_clusters = 12;
    double r_tau = 3.0;
    double sigma_tau = 100e-9;       // s
    double zeta = 3.0;               // dB
    double asa = 0.3, asd = 0.3;     // rad
    double esa = 0.1, esd = 0.1;     // rad
    double total_power = 1e-9;       // linear
    int rays_per_cluster = 4;

    bool operator==(const ClutterParams &) const = default;

    void validate() const
    {
        if (n_clusters < 0)
            throw SchemaError("clutter.n_clusters must be >= 0");
        if (!(r_tau > 1.0))
            throw SchemaError("clutter.r_tau must be > 1");
        if (!(sigma_tau > 0.0))
            throw SchemaError("clutter.sigma_tau must be > 0");
        if (!(zeta >= 0.0))
            throw SchemaError("clutter.zeta must be >= 0");
        if (!(asa > 0.0 && asd > 0.0 && esa > 0.0 && esd > 0.0))
            throw SchemaError("clutter angular spreads must be > 0");
        if (!(total_power > 0.0))
            throw SchemaError("clutter.total_power must be > 0");
        if (rays_per_cluster < 1)
            throw SchemaError("clutter.rays_per_cluster must be >= 1");
    }

    /// Sets a field by its config-file name; returns false for unknown names.
    bool set(std::string_view field, double value)
    {
        if (field == "n_clusters") n_clusters = static_cast<int>(std::lround(value));
        else if (field == "r_tau") r_tau = value;
        else if (field == "sigma_tau") sigma_tau = value;
        else if (field == "zeta") zeta = value;
        else if (field == "asa") asa = value;
        else if (field == "asd") asd = value;
        else if (field == "esa") esa = value;
        else if (field == "esd") esd = value;
        else if (field == "total_power") total_power = value;
        else if (field == "rays_per_cluster") rays_per_cluster = static_cast<int>(std::lround(value));
        else return false;
        return true;
    }

    static constexpr std::array<std::string_view, 10> field_names{
        "n_clusters", "r_tau", "sigma_tau", "zeta", "asa", "asd", "esa", "esd", "total_power", "rays_per_cluster"};
};

/// Built-in scenario table; config/scenario_clutter.ini ships the same values.
inline ClutterParams default_clutter_params(ScenarioClass scenario)
{
    switch (scenario)
    {
    case ScenarioClass::urban_street: return {20, 2.3, 120e-9, 3.0, 0.45, 0.35, 0.15, 0.10, 1e-9, 4};
    case ScenarioClass::highway: return {12, 2.5, 60e-9, 3.0, 0.30, 0.25, 0.08, 0.06, 5e-10, 4};
    case ScenarioClass::indoor: return {16, 2.2, 25e-9, 3.0, 0.80, 0.60, 0.30, 0.20, 2e-9, 4};
    case ScenarioClass::open_field: return {6, 3.0, 40e-9, 3.0, 0.15, 0.12, 0.05, 0.04, 2e-10, 4};
    case ScenarioClass::other: return {12, 2.5, 80e-9, 3.0, 0.35, 0.30, 0.10, 0.08, 5e-10, 4};
    }
    return {};
}

/// Range of the nearest clutter when tx and rx coincide, m.
inline constexpr double kMonostaticClutterRange = 10.0;

struct ClutterCluster
{
    double excess_delay = 0.0; // s
    double power = 0.0;        // linear
    AzEl aoa;                  // cluster mean arrival angles
    AzEl aod;                  // cluster mean departure angles
    std::vector<Vec3> scatterers;
    bool operator==(const ClutterCluster &) const = default;
};

/// Pre-sort, pre-shift cluster delays: -r_tau * sigma_tau * ln(u), u in (0,1].
inline std::vector<double> sample_raw_delays(const ClutterParams &p, Rng &rng)
{
    std::vector<double> d(static_cast<std::size_t>(p.n_clusters));
    for (auto &x : d)
        x = -p.r_tau * p.sigma_tau * std::log(uniform_open_closed(rng));
    return d;
}

/// Point on the arrival ray from rx whose bistatic range equals
/// |tx - rx| + c * excess_delay (single-bounce ellipsoid).
inline Vec3 place_scatterer(double excess_delay, AzEl aoa, const Vec3 &tx, const Vec3 &rx)
{
    const Vec3 u = direction_from_angles(aoa.azimuth, aoa.elevation);
    const Vec3 w = rx - tx;
    const double d0 = w.norm();
    const double range = d0 + kSpeedOfLight * excess_delay;
    const double num = range * range - d0 * d0;
    const double den = 2.0 * (range + w.dot(u));
    const double scale = std::max(1.0, range);
    if (std::abs(num) <= 1e-12 * scale * scale)
    {
        // zero excess: only the tx-rx segment lies on the (degenerate) ellipsoid
        if (d0 > 0.0 && (u + w / d0).norm() < 1e-9)
            return 0.5 * (tx + rx);
        throw NoIntersection("place_scatterer: zero excess delay off the tx-rx segment");
    }
    if (den <= 1e-12 * scale)
        throw NoIntersection("place_scatterer: arrival ray does not meet the delay ellipsoid");
    const double s = num / den;
    if (!(s > 1e-9) || range - s < 1e-9)
        throw NoIntersection("place_scatterer: scatterer would coincide with tx or rx");
    return rx + s * u;
}

namespace detail {

inline AzEl wrapped_normal(const AzEl &mean, double az_spread, double el_spread, Rng &rng)
{
    return {wrap_angle(mean.azimuth + az_spread * standard_normal(rng)),
            std::clamp(mean.elevation + el_spread * standard_normal(rng), -0.5 * kPi + 1e-6, 0.5 * kPi - 1e-6)};
}

} // namespace detail

/// Samples cluster delays, powers and angles, then places rays_per_cluster
/// scatterers per cluster. Deterministic in `seed`; cluster n uses substream n
/// for its angles and scatterers.
inline std::vector<ClutterCluster> sample_clusters(const ClutterParams &p, const Vec3 &tx, const Vec3 &rx,
                                                   std::uint64_t seed)
{
    p.validate();
    std::vector<ClutterCluster> out;
    if (p.n_clusters == 0)
        return out;
    Rng rng(stream_seed(seed, Stream::clutter, 0));
    std::vector<double> delays = sample_raw_delays(p, rng);
    std::sort(delays.begin(), delays.end());
    const double min_delay = delays.front();
    for (auto &d : delays)
        d -= min_delay;

    std::vector<double> powers(delays.size());
    double total = 0.0;
    for (std::size_t n = 0; n < delays.size(); ++n)
    {
        const double z = p.zeta * standard_normal(rng);
        powers[n] = std::exp(-delays[n] * (p.r_tau - 1.0) / (p.r_tau * p.sigma_tau)) * std::pow(10.0, -z / 10.0);
        total += powers[n];
    }

    const bool monostatic = (rx - tx).norm() < 1e-9;
    const AzEl arrival = angles_of(tx - rx), departure = angles_of(rx - tx);
    // excess delays of exactly 0 sit on the tx-rx segment; offset them by a
    // small fraction of the delay spread so the scatterer is well defined
    const double floor_delay = 1e-3 * p.sigma_tau;
    // monostatic: the zero-excess reference sits at kMonostaticClutterRange
    const double mono_offset = monostatic ? 2.0 * kMonostaticClutterRange / kSpeedOfLight : 0.0;
    for (std::size_t n = 0; n < delays.size(); ++n)
    {
        Rng crng(stream_seed(seed, Stream::clutter, n + 1));
        ClutterCluster c;
        c.excess_delay = delays[n];
        c.power = p.total_power * powers[n] / total;
        AzEl mean_aoa = arrival, mean_aod = departure;
        if (monostatic)
        {
            mean_aoa = {std::uniform_real_distribution<double>(-kPi, kPi)(crng), 0.0};
            mean_aod = mean_aoa;
        }
        c.aoa = detail::wrapped_normal(mean_aoa, p.asa, p.esa, crng);
        c.aod = detail::wrapped_normal(mean_aod, p.asd, p.esd, crng);
        const double geo_delay = std::max(c.excess_delay, floor_delay) + mono_offset;
        for (int r = 0; r < p.rays_per_cluster; ++r)
        {
            // intra-cluster ray spread: a fifth of the cluster angular spread
            for (int attempt = 0;; ++attempt)
            {
                const AzEl ray = detail::wrapped_normal(c.aoa, 0.2 * p.asa, 0.2 * p.esa, crng);
                try
                {
                    c.scatterers.push_back(place_scatterer(geo_delay, ray, tx, rx));
                    break;
                }
                catch (const NoIntersection &)
                {
                    if (attempt >= 1000)
                        throw;
                }
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

/// One path per scatterer; per-path power = cluster power / rays, uniform
/// phase, zero Doppler.
inline std::vector<PropagationPath> clutter_paths(const std::vector<ClutterCluster> &clusters, const Vec3 &tx,
                                                  const Vec3 &rx, double f_c, int rays_per_cluster,
                                                  std::uint64_t seed)
{
    (void)f_c; // clutter power is specified directly, not via spreading
    std::vector<PropagationPath> out;
    Rng rng(stream_seed(seed, Stream::clutter_phase, 0));
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (std::size_t n = 0; n < clusters.size(); ++n)
    {
        const ClutterCluster &c = clusters[n];
        const std::size_t rays = std::min<std::size_t>(static_cast<std::size_t>(rays_per_cluster), c.scatterers.size());
        if (rays == 0)
            continue;
        const double amp = std::sqrt(c.power / static_cast<double>(rays));
        for (std::size_t r = 0; r < rays; ++r)
        {
            const Vec3 &q = c.scatterers[r];
            PropagationPath path;
            path.kind = PathKind::Clutter;
            path.vertices = {tx, q, rx};
            path.delay = path.length() / kSpeedOfLight;
            path.amplitude = std::polar(amp, phase(rng));
            path.doppler = 0.0;
            path.aod = angles_of(q - tx);
            path.aoa = angles_of(q - rx);
            path.cluster = static_cast<int>(n);
            path.ray = static_cast<int>(r);
            out.push_back(std::move(path));
        }
    }
    return out;
}

} // namespace stcm
