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

#include "stcm/core.hpp"

#include <span>

namespace stcm {

enum class PathKind { LoS, TargetDirect, Clutter, MultiBounce };

inline std::string_view to_string(PathKind k)
{
    switch (k)
    {
    case PathKind::LoS: return "LoS";
    case PathKind::TargetDirect: return "TargetDirect";
    case PathKind::Clutter: return "Clutter";
    case PathKind::MultiBounce: return "MultiBounce";
    }
    return "?";
}

/// One propagation path. `vertices` holds the full polyline tx, ..., rx so
/// that visibility can be evaluated on every leg.
struct PropagationPath
{
    PathKind kind = PathKind::LoS;
    double delay = 0.0;          // s
    cplx amplitude{0.0, 0.0};    // linear, at f_c
    double freq_exponent = 0.0;  // amplitude scales with (f/f_c)^freq_exponent
    double doppler = 0.0;        // Hz
    AzEl aod;
    AzEl aoa;
    int target = -1;   // target index, or -1
    int center = -1;   // scattering-center index within the target, or -1
    int cluster = -1;  // clutter cluster index, or -1
    int ray = -1;      // ray/scatterer index within the cluster, or -1
    std::vector<Vec3> vertices;

    double length() const
    {
        double l = 0.0;
        for (std::size_t i = 1; i < vertices.size(); ++i)
            l += (vertices[i] - vertices[i - 1]).norm();
        return l;
    }
};

/// Free-space spreading factor of an L-leg path:
/// lambda / ((4 pi)^((L+1)/2) * prod d_l).
inline double spreading(std::span<const double> legs, double f_c)
{
    double prod = 1.0;
    for (double d : legs)
    {
        if (!(d > 0.0))
            throw ZeroLegLength("spreading: leg length must be > 0");
        prod *= d;
    }
    const double exponent = 0.5 * (static_cast<double>(legs.size()) + 1.0);
    return (kSpeedOfLight / f_c) / (std::pow(4.0 * kPi, exponent) * prod);
}

inline double spreading(std::initializer_list<double> legs, double f_c)
{
    return spreading(std::span<const double>(legs.begin(), legs.size()), f_c);
}

} // namespace stcm
