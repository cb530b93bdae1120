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

#pragma once

#include "stcm/clutter.hpp"
#include "stcm/target.hpp"

#include <limits>

namespace stcm {

struct Occluder
{
    Box box;
    double loss_db = std::numeric_limits<double>::infinity(); // penetration loss

    Occluder() = default;
    Occluder(Box b, double loss) : box(std::move(b)), loss_db(loss)
    {
        if (((box.max - box.min).array() <= 0.0).any())
            throw SchemaError("occluder: box min must be < max componentwise");
        if (!(loss_db >= 0.0))
            throw SchemaError("occluder: penetration loss must be >= 0 dB");
    }

    double amplitude_factor() const { return std::isinf(loss_db) ? 0.0 : std::pow(10.0, -loss_db / 20.0); }
};

/// Penetration loss used for background objects of each material.
inline double material_loss_db(Material m)
{
    switch (m)
    {
    case Material::concrete: return 30.0;
    case Material::glass: return 6.0;
    case Material::metal: return std::numeric_limits<double>::infinity();
    case Material::foliage: return 10.0;
    case Material::other: return 20.0;
    }
    return 20.0;
}

/// Slab test of the open segment (a, b) against a box. Touching a face,
/// edge or corner without entering the interior is not an intersection.
inline bool segment_intersects(const Vec3 &a, const Vec3 &b, const Box &box)
{
    const Vec3 d = b - a;
    double t0 = 0.0, t1 = 1.0;
    for (int k = 0; k < 3; ++k)
    {
        if (d[k] == 0.0)
        {
            if (a[k] <= box.min[k] || a[k] >= box.max[k])
                return false;
            continue;
        }
        double lo = (box.min[k] - a[k]) / d[k];
        double hi = (box.max[k] - a[k]) / d[k];
        if (lo > hi)
            std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (!(t0 < t1))
            return false;
    }
    return true;
}

/// Amplitude attenuation of segment a-b: product of 10^(-loss/20) over the
/// occluders it crosses; 0 when any crossed occluder is opaque.
inline double segment_blocked(const Vec3 &a, const Vec3 &b, std::span<const Occluder> occluders)
{
    double factor = 1.0;
    for (const auto &o : occluders)
        if (segment_intersects(a, b, o.box))
            factor *= o.amplitude_factor();
    return factor;
}

/// Scales every path by the attenuation of all of its legs and drops paths
/// whose factor is 0.
inline std::vector<PropagationPath> apply_visibility(std::vector<PropagationPath> paths,
                                                     std::span<const Occluder> occluders)
{
    if (occluders.empty())
        return paths;
    std::vector<PropagationPath> out;
    out.reserve(paths.size());
    for (auto &p : paths)
    {
        double factor = 1.0;
        for (std::size_t i = 1; i < p.vertices.size() && factor > 0.0; ++i)
            factor *= segment_blocked(p.vertices[i - 1], p.vertices[i], occluders);
        if (factor == 0.0)
            continue;
        p.amplitude *= factor;
        out.push_back(std::move(p));
    }
    return out;
}

struct MultibounceConfig
{
    int pairs = 32;        // strongest (center, scatterer) pairs kept
    double loss_db = 10.0; // per extra bounce
};

/// Two-bounce target/clutter paths (tx->center->scatterer->rx and
/// tx->scatterer->center->rx) for the strongest pairs, ranked by center
/// amplitude times scatterer power.
inline std::vector<PropagationPath> multibounce_paths(std::span<const TargetInstance> targets,
                                                      std::span<const ClutterCluster> clusters, const Vec3 &tx,
                                                      const Vec3 &rx, double f_c, double t,
                                                      const MultibounceConfig &cfg = {})
{
    std::vector<PropagationPath> out;
    if (cfg.pairs <= 0 || targets.empty() || clusters.empty())
        return out;

    struct Pair
    {
        double score;
        int target, center, cluster, ray;
    };
    std::vector<Pair> pairs;
    for (std::size_t ti = 0; ti < targets.size(); ++ti)
        for (std::size_t ci = 0; ci < targets[ti].set.centers.size(); ++ci)
            for (std::size_t n = 0; n < clusters.size(); ++n)
            {
                const double ray_power = clusters[n].power / std::max<double>(1.0, clusters[n].scatterers.size());
                for (std::size_t r = 0; r < clusters[n].scatterers.size(); ++r)
                    pairs.push_back({targets[ti].set.centers[ci].amplitude * ray_power, static_cast<int>(ti),
                                     static_cast<int>(ci), static_cast<int>(n), static_cast<int>(r)});
            }
    const std::size_t keep = std::min(pairs.size(), static_cast<std::size_t>(cfg.pairs));
    std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(keep), pairs.end(),
                      [](const Pair &a, const Pair &b) {
                          if (a.score != b.score)
                              return a.score > b.score;
                          return std::tie(a.target, a.center, a.cluster, a.ray) <
                                 std::tie(b.target, b.center, b.cluster, b.ray);
                      });

    const double loss = std::pow(10.0, -cfg.loss_db / 20.0);
    for (std::size_t k = 0; k < keep; ++k)
    {
        const Pair &pr = pairs[k];
        const TargetInstance &tg = targets[static_cast<std::size_t>(pr.target)];
        const ScatteringCenter &c = tg.set.centers[static_cast<std::size_t>(pr.center)];
        const ClutterCluster &cl = clusters[static_cast<std::size_t>(pr.cluster)];
        const Vec3 &q = cl.scatterers[static_cast<std::size_t>(pr.ray)];
        const Vec3 p = center_position(c, tg.motion, t);
        const Vec3 pdot = center_velocity(c, tg.motion, t);
        const Mat3 body = heading_rotation(tg.motion.heading);

        const double dq_tx = (q - tx).norm(), dq_rx = (q - rx).norm(), dpq = (p - q).norm();
        const double dp_tx = (p - tx).norm(), dp_rx = (p - rx).norm();
        if (std::min({dq_tx, dq_rx, dpq, dp_tx, dp_rx}) < 1e-9)
            continue;
        // scatterer reflectivity: the amplitude that reproduces its own
        // single-bounce clutter power under two-leg spreading
        const double ray_amp = std::sqrt(cl.power / static_cast<double>(cl.scatterers.size()));
        const double reflectivity = ray_amp / spreading({dq_tx, dq_rx}, f_c);

        auto make = [&](const Vec3 &first, const Vec3 &second, bool center_first) {
            PropagationPath path;
            path.kind = PathKind::MultiBounce;
            path.vertices = {tx, first, second, rx};
            const double l1 = (first - tx).norm(), l2 = (second - first).norm(), l3 = (rx - second).norm();
            path.delay = (l1 + l2 + l3) / kSpeedOfLight;
            // only the center moves: its two adjacent legs change length
            const Vec3 into = center_first ? Vec3((p - tx) / l1) : Vec3((p - q) / l2);
            const Vec3 out_leg = center_first ? Vec3((p - q) / l2) : Vec3((p - rx) / l3);
            path.doppler = -(f_c / kSpeedOfLight) * pdot.dot(into + out_leg);
            const Vec3 view = center_first ? bistatic_view(p, tx, q) : bistatic_view(p, q, rx);
            path.amplitude = asc_gain(c, f_c, f_c, view, body) * reflectivity * spreading({l1, l2, l3}, f_c) * loss;
            path.freq_exponent = c.alpha;
            path.aod = angles_of(first - tx);
            path.aoa = angles_of(second - rx);
            path.target = pr.target;
            path.center = pr.center;
            path.cluster = pr.cluster;
            path.ray = pr.ray;
            return path;
        };
        out.push_back(make(p, q, true));
        out.push_back(make(q, p, false));
    }
    return out;
}

} // namespace stcm
