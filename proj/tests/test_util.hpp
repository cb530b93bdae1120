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

// Shared fixtures for the unit tests.

#pragma once

#include "stcm/semantics.hpp"

#include <random>

namespace stcm::test {

inline Vec3 random_vec(Rng &rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng), u(rng), u(rng)};
}

/// Random valid scene with 1-3 targets, 0-2 background objects, relations
/// and events between declared ids.
inline SemanticScene random_scene(Rng &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 3), bg_count(0, 2);
    SemanticScene s;
    s.scene_id = "random";
    s.scenario = static_cast<ScenarioClass>(std::uniform_int_distribution<int>(0, 3)(rng));
    s.horizon = 30.0;
    const int nt = count(rng);
    for (int i = 0; i < nt; ++i)
    {
        TargetSpec t;
        t.id = "t" + std::to_string(i);
        t.cls = u(rng) < 0.5 ? TargetClass::vehicle : TargetClass::uav;
        t.components.push_back(ComponentSpec::of(t.cls == TargetClass::vehicle ? PartType::wheel : PartType::rotor, 4,
                                                 t.cls == TargetClass::vehicle ? 15.0 * u(rng) : 30.0 + 60.0 * u(rng)));
        t.position = random_vec(rng, -100.0, 100.0);
        t.velocity = random_vec(rng, -10.0, 10.0);
        t.heading = -kPi + kTwoPi * u(rng);
        s.targets.push_back(t);
    }
    const int nb = bg_count(rng);
    for (int i = 0; i < nb; ++i)
    {
        BackgroundSpec b;
        b.id = "b" + std::to_string(i);
        b.kind = static_cast<BackgroundKind>(std::uniform_int_distribution<int>(0, 2)(rng));
        b.box.min = random_vec(rng, -50.0, 50.0);
        b.box.max = b.box.min + random_vec(rng, 1.0, 20.0);
        b.material = static_cast<Material>(std::uniform_int_distribution<int>(0, 3)(rng));
        b.acts_as_occluder = u(rng) < 0.5;
        s.background.push_back(b);
    }
    if (nb > 0)
        s.relations.push_back({"b0", Predicate::blocks, "t0"});
    if (nt > 1)
    {
        const double start = 10.0 * u(rng);
        s.events.push_back({EventType::converging, {"t0", "t1"}, start, start + 5.0 * u(rng)});
    }
    return s;
}

} // namespace stcm::test
