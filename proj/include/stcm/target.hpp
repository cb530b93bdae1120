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

// Attributed-scattering-center targets: per-center gains, rigid-body and
// rotating-part kinematics, direct target paths, and the synthetic
// multi-scattering-center (MSC) library.

#pragma once

#include "stcm/propagation.hpp"
#include "stcm/semantics.hpp"

#include <json.hpp>

#include <array>
#include <istream>
#include <optional>
#include <ostream>

namespace stcm {

inline constexpr std::size_t kCentersPerSet = 10;
inline constexpr std::array<double, 5> kAlphaValues{-1.0, -0.5, 0.0, 0.5, 1.0};

inline int alpha_index(double alpha)
{
    for (std::size_t i = 0; i < kAlphaValues.size(); ++i)
        if (kAlphaValues[i] == alpha)
            return static_cast<int>(i);
    return -1;
}

struct ScatteringCenter
{
    Vec3 local_position = Vec3::Zero(); // body frame, m
    double amplitude = 1.0;             // linear at f_c
    double alpha = 0.0;                 // frequency exponent
    Vec3 aspect_center = Vec3::UnitX(); // body frame, unit
    double aspect_width = 1.0;          // rad, Gaussian window std
    std::optional<int> part_id;

    bool operator==(const ScatteringCenter &) const = default;

    void validate() const
    {
        if (!(amplitude > 0.0) || !std::isfinite(amplitude))
            throw SchemaError("scattering center: amplitude must be > 0");
        if (!(aspect_width > 0.0) || !std::isfinite(aspect_width))
            throw SchemaError("scattering center: aspect_width must be > 0");
        if (alpha_index(alpha) < 0)
            throw SchemaError("scattering center: alpha must be one of -1, -0.5, 0, 0.5, 1");
        if (std::abs(aspect_center.norm() - 1.0) > 1e-9)
            throw SchemaError("scattering center: aspect_center must be a unit vector");
    }
};

struct McsSet
{
    TargetClass cls = TargetClass::vehicle;
    Vec3 view = Vec3::UnitX();
    std::vector<ScatteringCenter> centers;
    bool operator==(const McsSet &) const = default;
};

struct RotatingPart
{
    int part_id = 0;
    Vec3 axis = Vec3::UnitZ(); // body frame, unit
    double rate_hz = 0.0;
    double phase = 0.0;        // rad
    Vec3 lever_arm = Vec3::Zero();
    bool operator==(const RotatingPart &) const = default;
};

struct MotionState
{
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double heading = 0.0;
    std::vector<RotatingPart> parts;
    bool operator==(const MotionState &) const = default;

    const RotatingPart &part(int id) const
    {
        for (const auto &p : parts)
            if (p.part_id == id)
                return p;
        throw UnknownPartId("no rotating part with id " + std::to_string(id));
    }
};

/// A target in a scene realization: its MSC set and its motion.
struct TargetInstance
{
    McsSet set;
    MotionState motion;
};

// ---- Kinematics ---------------------------------------------------------

namespace detail {

inline Vec3 rotate_about(const Vec3 &v, const Vec3 &axis, double angle)
{
    return Eigen::AngleAxisd(angle, axis.normalized()) * v;
}

inline double part_angle(const RotatingPart &p, double t) { return kTwoPi * p.rate_hz * t + p.phase; }

} // namespace detail

/// World position of a scattering center at time t.
inline Vec3 center_position(const ScatteringCenter &c, const MotionState &m, double t)
{
    Vec3 local = c.local_position;
    if (c.part_id)
    {
        const RotatingPart &p = m.part(*c.part_id);
        local += detail::rotate_about(p.lever_arm, p.axis, detail::part_angle(p, t));
    }
    return m.position + m.velocity * t + heading_rotation(m.heading) * local;
}

/// World velocity of a scattering center at time t (analytic derivative of
/// center_position).
inline Vec3 center_velocity(const ScatteringCenter &c, const MotionState &m, double t)
{
    Vec3 v = m.velocity;
    if (c.part_id)
    {
        const RotatingPart &p = m.part(*c.part_id);
        const Vec3 arm = detail::rotate_about(p.lever_arm, p.axis, detail::part_angle(p, t));
        const Vec3 omega = kTwoPi * p.rate_hz * p.axis.normalized();
        v += heading_rotation(m.heading) * omega.cross(arm);
    }
    return v;
}

/// Real ASC envelope: amplitude * (f/f_c)^alpha * Gaussian aspect window.
/// `body_rotation` maps body-frame vectors to world.
inline double asc_gain(const ScatteringCenter &c, double f, double f_c, const Vec3 &view_dir,
                       const Mat3 &body_rotation = Mat3::Identity())
{
    const double off = angle_between(view_dir, body_rotation * c.aspect_center);
    const double window = std::exp(-off * off / (2.0 * c.aspect_width * c.aspect_width));
    const double freq = c.alpha == 0.0 ? 1.0 : std::pow(f / f_c, c.alpha);
    return c.amplitude * freq * window;
}

/// Bistatic bisector direction from point p towards tx and rx.
inline Vec3 bistatic_view(const Vec3 &p, const Vec3 &tx, const Vec3 &rx)
{
    const Vec3 a = (tx - p).normalized(), b = (rx - p).normalized();
    const Vec3 s = a + b;
    return s.norm() > 1e-12 ? Vec3(s.normalized()) : a;
}

/// One direct path per scattering center (tx -> center -> rx).
inline std::vector<PropagationPath> target_paths(const McsSet &target, const MotionState &motion, const Vec3 &tx,
                                                 const Vec3 &rx, double f_c, double t, int target_index = 0)
{
    std::vector<PropagationPath> out;
    out.reserve(target.centers.size());
    const Mat3 body = heading_rotation(motion.heading);
    for (std::size_t i = 0; i < target.centers.size(); ++i)
    {
        const ScatteringCenter &c = target.centers[i];
        const Vec3 p = center_position(c, motion, t);
        const Vec3 pdot = center_velocity(c, motion, t);
        const double d_tx = (p - tx).norm(), d_rx = (p - rx).norm();
        if (d_tx < 1e-9 || d_rx < 1e-9)
            throw DegenerateGeometry("target_paths: scattering center " + std::to_string(i) +
                                     " coincides with tx or rx");
        const double range_rate = pdot.dot((p - tx) / d_tx + (p - rx) / d_rx);

        PropagationPath path;
        path.kind = PathKind::TargetDirect;
        path.delay = (d_tx + d_rx) / kSpeedOfLight;
        path.doppler = -(f_c / kSpeedOfLight) * range_rate;
        path.amplitude = asc_gain(c, f_c, f_c, bistatic_view(p, tx, rx), body) * spreading({d_tx, d_rx}, f_c);
        path.freq_exponent = c.alpha;
        path.aod = angles_of(p - tx);
        path.aoa = angles_of(p - rx);
        path.target = target_index;
        path.center = static_cast<int>(i);
        path.vertices = {tx, p, rx};
        out.push_back(std::move(path));
    }
    return out;
}

// ---- Class models and the synthetic library -----------------------------

/// Hubs and rotation axes of the rotating parts of each library class.
/// Lever arms are fixed; rates are drawn per class model.
struct ClassGeometry
{
    Box box;
    std::array<Vec3, 4> hubs;
    Vec3 axis;
    Vec3 lever_arm;
    double rate_lo, rate_hi; // Hz
    double amplitude_scale;
};

inline const ClassGeometry &class_geometry(TargetClass cls)
{
    // synthetic priors; not measured data
    static const ClassGeometry vehicle{
        {Vec3(-2.25, -0.9, 0.0), Vec3(2.25, 0.9, 1.5)},
        {Vec3(1.4, 0.8, 0.35), Vec3(1.4, -0.8, 0.35), Vec3(-1.4, 0.8, 0.35), Vec3(-1.4, -0.8, 0.35)},
        Vec3::UnitY(),
        Vec3(0.3, 0.0, 0.0),
        0.0,
        15.0,
        1.0};
    static const ClassGeometry uav{
        {Vec3(-0.45, -0.45, -0.1), Vec3(0.45, 0.45, 0.25)},
        {Vec3(0.3, 0.3, 0.1), Vec3(0.3, -0.3, 0.1), Vec3(-0.3, 0.3, 0.1), Vec3(-0.3, -0.3, 0.1)},
        Vec3::UnitZ(),
        Vec3(0.12, 0.0, 0.0),
        30.0,
        90.0,
        0.3};
    return cls == TargetClass::vehicle ? vehicle : uav;
}

/// Rotating parts of a class with the given per-part rates.
inline std::vector<RotatingPart> class_parts(TargetClass cls, std::span<const double> rates)
{
    const ClassGeometry &g = class_geometry(cls);
    std::vector<RotatingPart> parts;
    for (int i = 0; i < 4; ++i)
        parts.push_back({i, g.axis, i < static_cast<int>(rates.size()) ? rates[i] : 0.0, 0.0, g.lever_arm});
    return parts;
}

/// Assigns part ids to centers located at a class hub (within `radius`).
inline void assign_parts(McsSet &set, double radius = 0.2)
{
    const ClassGeometry &g = class_geometry(set.cls);
    for (auto &c : set.centers)
    {
        c.part_id.reset();
        double best = radius;
        for (int h = 0; h < 4; ++h)
        {
            const double d = (c.local_position - g.hubs[h]).norm();
            if (d < best)
            {
                best = d;
                c.part_id = h;
            }
        }
    }
}

/// A class model: candidate scatterers with smooth per-view perturbations.
/// The centers of a view are the kCentersPerSet candidates with the largest
/// windowed amplitude towards that view.
struct ClassModel
{
    struct Candidate
    {
        ScatteringCenter base;
        Vec3 wobble_freq = Vec3::Zero();  // rad per unit of view vector
        Vec3 wobble_phase = Vec3::Zero();
        double amp_phase = 0.0;
    };

    TargetClass cls = TargetClass::vehicle;
    std::vector<Candidate> candidates;
    std::array<double, 4> part_rates{};
    double position_wobble = 0.03; // m
    double amplitude_wobble = 0.15; // log-amplitude

    MotionState motion(const Vec3 &position = Vec3::Zero(), double heading = 0.0) const
    {
        return {position, Vec3::Zero(), heading, class_parts(cls, part_rates)};
    }

    /// MSC set seen from body-frame direction `view`.
    McsSet view_set(const Vec3 &view_in, std::size_t n_centers = kCentersPerSet) const
    {
        const Vec3 view = view_in.normalized();
        const ClassGeometry &g = class_geometry(cls);
        std::vector<std::pair<double, std::size_t>> score;
        std::vector<ScatteringCenter> perturbed;
        for (std::size_t j = 0; j < candidates.size(); ++j)
        {
            const Candidate &cand = candidates[j];
            ScatteringCenter c = cand.base;
            if (!c.part_id)
            {
                for (int k = 0; k < 3; ++k)
                    c.local_position[k] += position_wobble * std::sin(cand.wobble_freq[k] * view[k] * 3.0 +
                                                                      cand.wobble_freq.dot(view) +
                                                                      cand.wobble_phase[k]);
                c.local_position = c.local_position.cwiseMax(g.box.min).cwiseMin(g.box.max);
            }
            c.amplitude *= std::exp(amplitude_wobble * std::sin(cand.wobble_freq.dot(view) * 2.0 + cand.amp_phase));
            perturbed.push_back(c);
            score.emplace_back(asc_gain(c, 1.0, 1.0, view), j);
        }
        std::stable_sort(score.begin(), score.end(), [](auto &a, auto &b) { return a.first > b.first; });
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < std::min(n_centers, score.size()); ++i)
            keep.push_back(score[i].second);
        std::sort(keep.begin(), keep.end());
        McsSet set{cls, view, {}};
        for (std::size_t j : keep)
            set.centers.push_back(perturbed[j]);
        return set;
    }
};

/// Deterministic class model for (class, seed).
inline ClassModel build_class_model(TargetClass cls, std::uint64_t seed)
{
    const ClassGeometry &g = class_geometry(cls);
    Rng rng(stream_seed(seed, Stream::library, static_cast<std::uint64_t>(cls)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ClassModel model;
    model.cls = cls;
    for (auto &r : model.part_rates)
        r = g.rate_lo + (g.rate_hi - g.rate_lo) * unit(rng);

    const Vec3 centroid = 0.5 * (g.box.min + g.box.max);
    const Vec3 extent = g.box.max - g.box.min;
    // alpha priors: plates and dihedrals (1, 0.5) dominate vehicles, edges and
    // tips (0, -0.5) dominate small airframes
    const std::array<double, 5> alpha_w_vehicle{0.05, 0.15, 0.3, 0.25, 0.25};
    const std::array<double, 5> alpha_w_uav{0.15, 0.3, 0.35, 0.15, 0.05};
    const auto &alpha_w = cls == TargetClass::vehicle ? alpha_w_vehicle : alpha_w_uav;
    std::discrete_distribution<int> alpha_dist(alpha_w.begin(), alpha_w.end());

    auto random_dir = [&] {
        Vec3 d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        return Vec3(d.normalized());
    };
    auto make_candidate = [&](const Vec3 &pos, std::optional<int> part) {
        ClassModel::Candidate cand;
        ScatteringCenter &c = cand.base;
        c.local_position = pos;
        c.amplitude = g.amplitude_scale * std::exp(0.5 * standard_normal(rng));
        c.alpha = kAlphaValues[static_cast<std::size_t>(alpha_dist(rng))];
        Vec3 normal = (pos - centroid).cwiseQuotient(extent);
        if (normal.norm() < 1e-6)
            normal = random_dir();
        c.aspect_center = (normal.normalized() + 0.6 * random_dir()).normalized();
        c.aspect_width = 0.5 + 0.7 * unit(rng);
        c.part_id = part;
        cand.wobble_freq = Vec3(1.0 + 2.0 * unit(rng), 1.0 + 2.0 * unit(rng), 1.0 + 2.0 * unit(rng));
        cand.wobble_phase = Vec3(kTwoPi * unit(rng), kTwoPi * unit(rng), kTwoPi * unit(rng));
        cand.amp_phase = kTwoPi * unit(rng);
        model.candidates.push_back(cand);
    };

    for (int h = 0; h < 4; ++h)
        make_candidate(g.hubs[h], h);
    // body scatterers keep clear of the hubs so part inference is unambiguous
    const double margin = 0.05 * extent.maxCoeff();
    int body = 0;
    while (body < 12)
    {
        Vec3 pos;
        for (int k = 0; k < 3; ++k)
            pos[k] = g.box.min[k] + margin + (extent[k] - 2 * margin) * unit(rng);
        bool clear = true;
        for (const auto &hub : g.hubs)
            clear = clear && (pos - hub).norm() > 0.3;
        if (!clear)
            continue;
        make_candidate(pos, std::nullopt);
        ++body;
    }
    return model;
}

/// Quasi-uniform unit directions (Fibonacci lattice).
inline std::vector<Vec3> fibonacci_directions(std::size_t n)
{
    std::vector<Vec3> out;
    out.reserve(n);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i)
    {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return out;
}

/// Synthetic MSC library: one set per Fibonacci view of the class model.
inline std::vector<McsSet> synth_library(TargetClass cls, std::size_t n_views, std::uint64_t seed)
{
    if (n_views < 1)
        throw SchemaError("synth_library: n_views must be >= 1");
    const ClassModel model = build_class_model(cls, seed);
    std::vector<McsSet> lib;
    lib.reserve(n_views);
    for (const Vec3 &u : fibonacci_directions(n_views))
        lib.push_back(model.view_set(u));
    return lib;
}

inline std::vector<McsSet> synth_library(std::string_view cls, std::size_t n_views, std::uint64_t seed)
{
    return synth_library(parse_target_class(cls), n_views, seed);
}

// ---- Library file (JSON lines) -----------------------------------------

/// Record fields, in order: class, view, parts, centers[{position,
/// amplitude, alpha, aspect, width, part}].
inline nlohmann::ordered_json to_json(const McsSet &set, std::span<const RotatingPart> parts = {})
{
    using nlohmann::ordered_json;
    auto v3 = [](const Vec3 &v) { return ordered_json::array({v.x(), v.y(), v.z()}); };
    ordered_json rec;
    rec["class"] = to_string(set.cls);
    rec["view"] = v3(set.view);
    rec["parts"] = ordered_json::array();
    for (const auto &p : parts)
        rec["parts"].push_back(ordered_json{{"id", p.part_id},
                                            {"axis", v3(p.axis)},
                                            {"rate_hz", p.rate_hz},
                                            {"phase", p.phase},
                                            {"lever_arm", v3(p.lever_arm)}});
    rec["centers"] = ordered_json::array();
    for (const auto &c : set.centers)
    {
        ordered_json jc;
        jc["position"] = v3(c.local_position);
        jc["amplitude"] = c.amplitude;
        jc["alpha"] = c.alpha;
        jc["aspect"] = v3(c.aspect_center);
        jc["width"] = c.aspect_width;
        jc["part"] = c.part_id ? ordered_json(*c.part_id) : ordered_json(nullptr);
        rec["centers"].push_back(std::move(jc));
    }
    return rec;
}

struct LibraryRecord
{
    McsSet set;
    std::vector<RotatingPart> parts;
};

inline LibraryRecord library_record_from_json(const nlohmann::json &rec)
{
    auto v3 = [](const nlohmann::json &a) {
        if (!a.is_array() || a.size() != 3)
            throw FormatError("library record: expected 3-vector");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    try
    {
        LibraryRecord out;
        out.set.cls = parse_target_class(rec.at("class").get<std::string>());
        out.set.view = v3(rec.at("view"));
        if (rec.contains("parts"))
            for (const auto &p : rec.at("parts"))
                out.parts.push_back({p.at("id").get<int>(), v3(p.at("axis")), p.at("rate_hz").get<double>(),
                                     p.at("phase").get<double>(), v3(p.at("lever_arm"))});
        for (const auto &jc : rec.at("centers"))
        {
            ScatteringCenter c;
            c.local_position = v3(jc.at("position"));
            c.amplitude = jc.at("amplitude").get<double>();
            c.alpha = jc.at("alpha").get<double>();
            c.aspect_center = v3(jc.at("aspect"));
            c.aspect_width = jc.at("width").get<double>();
            if (!jc.at("part").is_null())
                c.part_id = jc.at("part").get<int>();
            c.validate();
            out.set.centers.push_back(c);
        }
        return out;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw FormatError(std::string("library record: ") + e.what());
    }
}

inline void write_library(std::ostream &os, std::span<const McsSet> lib, std::span<const RotatingPart> parts = {})
{
    for (const auto &set : lib)
        os << to_json(set, parts).dump() << '\n';
}

inline std::vector<LibraryRecord> read_library(std::istream &is)
{
    std::vector<LibraryRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            out.push_back(library_record_from_json(nlohmann::json::parse(line)));
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw FormatError("library line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace stcm
