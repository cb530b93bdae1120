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

// Flattened hybrid-model parameter vector (theta) and its decoding into
// target, clutter and interaction parameters.
//
// Layout "stcm.theta.v1" (107 reals):
//   [0, 90)    10 centers x {px, py, pz, amplitude, alpha_index, ax, ay, az, width}
//   [90, 96)   speed (m/s), heading (rad), 4 part rates (Hz)
//   [96, 105)  n_clusters, r_tau, sigma_tau (ns), zeta (dB), asa, asd, esa, esd,
//              total power (dB)
//   [105, 107) mb_pairs, mb_loss_db
//
// Decoding rules: integers (alpha_index, n_clusters, mb_pairs) round to
// nearest, ties to even, then clamp to their range; speed, part rates, zeta
// and mb_loss_db clamp at 0; aspect vectors are normalized. Non-finite values,
// amplitude <= 0, width <= 0, r_tau <= 1, sigma_tau <= 0, spreads <= 0 and
// zero aspect vectors make the vector invalid.

#pragma once

#include "stcm/clutter.hpp"
#include "stcm/interaction.hpp"
#include "stcm/target.hpp"

#include <cfenv>

namespace stcm {

inline constexpr std::string_view kThetaLayout = "stcm.theta.v1";

struct ThetaLayout
{
    static constexpr std::size_t center_fields = 9;
    static constexpr std::size_t centers = kCentersPerSet;
    static constexpr std::size_t target = 0;
    static constexpr std::size_t motion = target + centers * center_fields; // 90
    static constexpr std::size_t clutter = motion + 6;                      // 96
    static constexpr std::size_t interaction = clutter + 9;                 // 105
    static constexpr std::size_t size = interaction + 2;                    // 107
    static constexpr int max_clusters = 64;
    static constexpr int max_mb_pairs = 1024;
};

struct ParameterVector
{
    std::string layout{kThetaLayout};
    std::vector<double> values = std::vector<double>(ThetaLayout::size, 0.0);
    bool operator==(const ParameterVector &) const = default;
};

/// Decoded theta. `centers` carry no part ids; those are inferred per class
/// when the target is instantiated.
struct DecodedParameters
{
    std::vector<ScatteringCenter> centers;
    double speed = 0.0;
    double heading = 0.0;
    std::array<double, 4> part_rates{};
    ClutterParams clutter;
    MultibounceConfig multibounce;
};

namespace detail {

inline double round_half_even(double x)
{
    const int mode = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(x);
    std::fesetround(mode);
    return r;
}

} // namespace detail

inline ParameterVector encode_parameters(const DecodedParameters &d)
{
    using L = ThetaLayout;
    if (d.centers.size() != L::centers)
        throw SchemaError("encode_parameters: expected " + std::to_string(L::centers) + " centers, got " +
                          std::to_string(d.centers.size()));
    ParameterVector theta;
    auto &v = theta.values;
    for (std::size_t i = 0; i < L::centers; ++i)
    {
        const ScatteringCenter &c = d.centers[i];
        double *f = &v[L::target + i * L::center_fields];
        f[0] = c.local_position.x();
        f[1] = c.local_position.y();
        f[2] = c.local_position.z();
        f[3] = c.amplitude;
        f[4] = alpha_index(c.alpha);
        f[5] = c.aspect_center.x();
        f[6] = c.aspect_center.y();
        f[7] = c.aspect_center.z();
        f[8] = c.aspect_width;
    }
    v[L::motion + 0] = d.speed;
    v[L::motion + 1] = d.heading;
    for (std::size_t k = 0; k < 4; ++k)
        v[L::motion + 2 + k] = d.part_rates[k];
    const ClutterParams &p = d.clutter;
    v[L::clutter + 0] = p.n_clusters;
    v[L::clutter + 1] = p.r_tau;
    v[L::clutter + 2] = p.sigma_tau * 1e9;
    v[L::clutter + 3] = p.zeta;
    v[L::clutter + 4] = p.asa;
    v[L::clutter + 5] = p.asd;
    v[L::clutter + 6] = p.esa;
    v[L::clutter + 7] = p.esd;
    v[L::clutter + 8] = 10.0 * std::log10(p.total_power);
    v[L::interaction + 0] = d.multibounce.pairs;
    v[L::interaction + 1] = d.multibounce.loss_db;
    return theta;
}

/// Decodes and validates theta; throws SchemaError on an invalid vector.
/// `rays_per_cluster` is not part of theta and is taken from the caller.
inline DecodedParameters decode_parameters(const ParameterVector &theta, int rays_per_cluster = 4)
{
    using L = ThetaLayout;
    if (theta.layout != kThetaLayout)
        throw VersionMismatch("theta layout '" + theta.layout + "' (expected '" + std::string(kThetaLayout) + "')");
    if (theta.values.size() != L::size)
        throw DimensionMismatch("theta has " + std::to_string(theta.values.size()) + " values, expected " +
                                std::to_string(L::size));
    for (double x : theta.values)
        if (!std::isfinite(x))
            throw SchemaError("theta: non-finite value");
    const auto &v = theta.values;
    DecodedParameters d;
    for (std::size_t i = 0; i < L::centers; ++i)
    {
        const double *f = &v[L::target + i * L::center_fields];
        ScatteringCenter c;
        c.local_position = {f[0], f[1], f[2]};
        c.amplitude = f[3];
        const auto ai = static_cast<std::size_t>(std::clamp(detail::round_half_even(f[4]), 0.0, 4.0));
        c.alpha = kAlphaValues[ai];
        const Vec3 aspect(f[5], f[6], f[7]);
        if (aspect.norm() < 1e-6)
            throw SchemaError("theta: center " + std::to_string(i) + " has a zero aspect vector");
        c.aspect_center = aspect.normalized();
        c.aspect_width = f[8];
        if (!(c.amplitude > 0.0))
            throw SchemaError("theta: center " + std::to_string(i) + " amplitude must be > 0");
        if (!(c.aspect_width > 0.0))
            throw SchemaError("theta: center " + std::to_string(i) + " aspect width must be > 0");
        d.centers.push_back(c);
    }
    d.speed = std::max(0.0, v[L::motion + 0]);
    d.heading = v[L::motion + 1];
    for (std::size_t k = 0; k < 4; ++k)
        d.part_rates[k] = std::max(0.0, v[L::motion + 2 + k]);
    ClutterParams &p = d.clutter;
    p.n_clusters = static_cast<int>(std::clamp(detail::round_half_even(v[L::clutter + 0]), 0.0,
                                               static_cast<double>(L::max_clusters)));
    p.r_tau = v[L::clutter + 1];
    p.sigma_tau = v[L::clutter + 2] * 1e-9;
    p.zeta = std::max(0.0, v[L::clutter + 3]);
    p.asa = v[L::clutter + 4];
    p.asd = v[L::clutter + 5];
    p.esa = v[L::clutter + 6];
    p.esd = v[L::clutter + 7];
    p.total_power = std::pow(10.0, v[L::clutter + 8] / 10.0);
    p.rays_per_cluster = rays_per_cluster;
    p.validate();
    d.multibounce.pairs = static_cast<int>(std::clamp(detail::round_half_even(v[L::interaction + 0]), 0.0,
                                                      static_cast<double>(L::max_mb_pairs)));
    d.multibounce.loss_db = std::max(0.0, v[L::interaction + 1]);
    return d;
}

inline bool is_valid(const ParameterVector &theta)
{
    try
    {
        decode_parameters(theta);
        return true;
    }
    catch (const Error &)
    {
        return false;
    }
}

/// Theta for a single MSC set with static motion and the given clutter.
inline ParameterVector parameters_for(const McsSet &set, const std::array<double, 4> &part_rates,
                                      const ClutterParams &clutter, const MultibounceConfig &mb = {})
{
    DecodedParameters d;
    d.centers = set.centers;
    d.part_rates = part_rates;
    d.clutter = clutter;
    d.multibounce = mb;
    return encode_parameters(d);
}

inline McsSet to_mcs_set(const DecodedParameters &d, TargetClass cls, const Vec3 &view = Vec3::UnitX())
{
    McsSet set{cls, view, d.centers};
    assign_parts(set);
    return set;
}

// ---- Theta ensembles (JSON lines) ---------------------------------------

inline std::string theta_to_line(const ParameterVector &theta)
{
    nlohmann::ordered_json j;
    j["layout"] = theta.layout;
    j["theta"] = theta.values;
    return j.dump();
}

inline ParameterVector theta_from_line(std::string_view line)
{
    try
    {
        const auto j = nlohmann::json::parse(line);
        ParameterVector theta;
        theta.layout = j.at("layout").get<std::string>();
        theta.values = j.at("theta").get<std::vector<double>>();
        if (theta.layout != kThetaLayout)
            throw VersionMismatch("theta layout '" + theta.layout + "'");
        return theta;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw FormatError(std::string("theta line: ") + e.what());
    }
}

} // namespace stcm
