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

// Hierarchical scene description (component / object / scene / intent
// levels), its JSON interchange format, and the fixed-size conditioning code.

#pragma once

#include "stcm/core.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <set>
#include <span>

namespace stcm {

enum class ScenarioClass { urban_street, highway, indoor, open_field, other };
enum class TargetClass { vehicle, uav };
enum class PartType { wheel, rotor, other };
enum class BackgroundKind { building, vegetation, roadside, other };
enum class Material { concrete, glass, metal, foliage, other };
enum class Predicate { blocks, adjacent_to, approaches };
enum class EventType { crossing, converging, loitering };

namespace detail {

template <typename E, std::size_t N>
struct EnumTable
{
    std::array<std::pair<E, std::string_view>, N> entries;

    std::string_view name(E e) const
    {
        for (auto &[v, n] : entries)
            if (v == e)
                return n;
        return "other";
    }
    std::optional<E> parse(std::string_view s) const
    {
        for (auto &[v, n] : entries)
            if (n == s)
                return v;
        return std::nullopt;
    }
};

inline constexpr EnumTable<ScenarioClass, 5> kScenarioNames{{{{ScenarioClass::urban_street, "urban_street"},
                                                             {ScenarioClass::highway, "highway"},
                                                             {ScenarioClass::indoor, "indoor"},
                                                             {ScenarioClass::open_field, "open_field"},
                                                             {ScenarioClass::other, "other"}}}};
inline constexpr EnumTable<TargetClass, 2> kTargetNames{
    {{{TargetClass::vehicle, "vehicle"}, {TargetClass::uav, "uav"}}}};
inline constexpr EnumTable<PartType, 3> kPartNames{
    {{{PartType::wheel, "wheel"}, {PartType::rotor, "rotor"}, {PartType::other, "other"}}}};
inline constexpr EnumTable<BackgroundKind, 4> kBackgroundNames{{{{BackgroundKind::building, "building"},
                                                                {BackgroundKind::vegetation, "vegetation"},
                                                                {BackgroundKind::roadside, "roadside"},
                                                                {BackgroundKind::other, "other"}}}};
inline constexpr EnumTable<Material, 5> kMaterialNames{{{{Material::concrete, "concrete"},
                                                         {Material::glass, "glass"},
                                                         {Material::metal, "metal"},
                                                         {Material::foliage, "foliage"},
                                                         {Material::other, "other"}}}};
inline constexpr EnumTable<Predicate, 3> kPredicateNames{{{{Predicate::blocks, "blocks"},
                                                           {Predicate::adjacent_to, "adjacent_to"},
                                                           {Predicate::approaches, "approaches"}}}};
inline constexpr EnumTable<EventType, 3> kEventNames{{{{EventType::crossing, "crossing"},
                                                       {EventType::converging, "converging"},
                                                       {EventType::loitering, "loitering"}}}};

} // namespace detail

inline std::string_view to_string(ScenarioClass v) { return detail::kScenarioNames.name(v); }
inline std::string_view to_string(TargetClass v) { return detail::kTargetNames.name(v); }
inline std::string_view to_string(PartType v) { return detail::kPartNames.name(v); }
inline std::string_view to_string(BackgroundKind v) { return detail::kBackgroundNames.name(v); }
inline std::string_view to_string(Material v) { return detail::kMaterialNames.name(v); }
inline std::string_view to_string(Predicate v) { return detail::kPredicateNames.name(v); }
inline std::string_view to_string(EventType v) { return detail::kEventNames.name(v); }

inline TargetClass parse_target_class(std::string_view s)
{
    if (auto v = detail::kTargetNames.parse(s))
        return *v;
    throw UnsupportedClass("unsupported target class '" + std::string(s) + "'");
}

// ---- Scene types --------------------------------------------------------

struct ComponentSpec
{
    static ComponentSpec of(PartType part, int count, double rotation_hz)
    {
        return {part, std::string(to_string(part)), count, rotation_hz};
    }

    PartType part = PartType::other;
    std::string token; // token as written in the document, for hashing
    int count = 1;
    double rotation_hz = 0.0;
    bool operator==(const ComponentSpec &) const = default;
};

struct TargetSpec
{
    std::string id;
    TargetClass cls = TargetClass::vehicle;
    std::vector<ComponentSpec> components;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double heading = 0.0;
    bool operator==(const TargetSpec &) const = default;
};

struct Box
{
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
    double volume() const { return (max - min).prod(); }
    bool operator==(const Box &) const = default;
};

struct BackgroundSpec
{
    std::string id;
    BackgroundKind kind = BackgroundKind::building;
    Box box;
    Material material = Material::concrete;
    bool acts_as_occluder = true;
    bool operator==(const BackgroundSpec &) const = default;
};

struct RelationSpec
{
    std::string subject;
    Predicate predicate = Predicate::adjacent_to;
    std::string object;
    bool operator==(const RelationSpec &) const = default;
};

struct EventSpec
{
    EventType type = EventType::crossing;
    std::vector<std::string> participants;
    double start = 0.0;
    double end = 0.0;
    bool operator==(const EventSpec &) const = default;
};

struct SemanticScene
{
    std::string scene_id;
    ScenarioClass scenario = ScenarioClass::urban_street;
    double horizon = 60.0; // seconds
    std::vector<TargetSpec> targets;
    std::vector<BackgroundSpec> background;
    std::vector<RelationSpec> relations;
    std::vector<EventSpec> events;
    bool operator==(const SemanticScene &) const = default;
};

inline constexpr std::size_t kCodeDim = 64;
inline constexpr std::size_t kHashBuckets = 16;

/// Fixed-dimension conditioning code of a scene.
struct SemanticCode
{
    std::vector<double> values = std::vector<double>(kCodeDim, 0.0);
    bool operator==(const SemanticCode &) const = default;
};

// ---- Validation ---------------------------------------------------------

struct ValidationOptions
{
    bool lenient = false; // unknown fields become warnings instead of errors
};

struct ValidationResult
{
    SemanticScene scene;
    std::vector<std::string> warnings;
};

namespace detail {

using nlohmann::json;

class SceneReader
{
  public:
    explicit SceneReader(const ValidationOptions &opt) : opt_(opt) {}
    std::vector<std::string> warnings;

    void check_fields(const json &obj, const std::string &path, std::initializer_list<std::string_view> allowed)
    {
        if (!obj.is_object())
            throw SchemaError(path + ": expected an object");
        for (auto it = obj.begin(); it != obj.end(); ++it)
        {
            if (std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end())
                continue;
            const std::string msg = path + "." + it.key() + ": unknown field";
            if (!opt_.lenient)
                throw SchemaError(msg);
            warnings.push_back(msg);
        }
    }

    static const json *find(const json &obj, const char *key)
    {
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    static std::string req_string(const json &obj, const std::string &path, const char *key)
    {
        const json *v = find(obj, key);
        if (!v)
            throw SchemaError(path + "." + key + ": missing required field");
        if (!v->is_string() || v->get_ref<const std::string &>().empty())
            throw SchemaError(path + "." + key + ": expected a non-empty string");
        return v->get<std::string>();
    }

    static double number(const json &v, const std::string &path)
    {
        if (!v.is_number())
            throw SchemaError(path + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            throw SchemaError(path + ": must be finite");
        return x;
    }

    static Vec3 vec3(const json &v, const std::string &path)
    {
        if (!v.is_array() || v.size() != 3)
            throw SchemaError(path + ": expected an array of 3 numbers");
        return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
    }

    template <typename E, std::size_t N>
    E open_enum(const json &obj, const std::string &path, const char *key, const EnumTable<E, N> &table)
    {
        const std::string s = req_string(obj, path, key);
        if (auto v = table.parse(s))
            return *v;
        warnings.push_back(path + "." + key + ": unknown token '" + s + "' mapped to 'other'");
        return E::other;
    }

    template <typename E, std::size_t N>
    static E closed_enum(const json &obj, const std::string &path, const char *key, const EnumTable<E, N> &table)
    {
        const std::string s = req_string(obj, path, key);
        if (auto v = table.parse(s))
            return *v;
        throw SchemaError(path + "." + key + ": '" + s + "' is not one of the allowed values");
    }

    static const json &array_field(const json &obj, const std::string &path, const char *key)
    {
        static const json empty = json::array();
        const json *v = find(obj, key);
        if (!v)
            return empty;
        if (!v->is_array())
            throw SchemaError(path + "." + key + ": expected an array");
        return *v;
    }

    SemanticScene read(const json &doc)
    {
        check_fields(doc, "$",
                     {"scene_id", "scenario_class", "horizon", "targets", "background", "relations", "events"});
        SemanticScene scene;
        scene.scene_id = find(doc, "scene_id") ? req_string(doc, "$", "scene_id") : std::string("scene");
        scene.scenario = open_enum(doc, "$", "scenario_class", kScenarioNames);
        if (const json *h = find(doc, "horizon"))
        {
            scene.horizon = number(*h, "$.horizon");
            if (scene.horizon <= 0.0)
                throw SchemaError("$.horizon: must be > 0");
        }

        const json &targets = array_field(doc, "$", "targets");
        for (std::size_t i = 0; i < targets.size(); ++i)
            scene.targets.push_back(read_target(targets[i], "$.targets[" + std::to_string(i) + "]"));
        const json &bg = array_field(doc, "$", "background");
        for (std::size_t i = 0; i < bg.size(); ++i)
            scene.background.push_back(read_background(bg[i], "$.background[" + std::to_string(i) + "]"));
        if (scene.targets.empty() && scene.background.empty())
            throw SchemaError("$: at least one of targets/background must be non-empty");

        std::set<std::string> ids;
        auto add_id = [&](const std::string &id, const std::string &path) {
            if (!ids.insert(id).second)
                throw SchemaError(path + ".id: duplicate id '" + id + "'");
        };
        for (std::size_t i = 0; i < scene.targets.size(); ++i)
            add_id(scene.targets[i].id, "$.targets[" + std::to_string(i) + "]");
        for (std::size_t i = 0; i < scene.background.size(); ++i)
            add_id(scene.background[i].id, "$.background[" + std::to_string(i) + "]");
        auto require_id = [&](const std::string &id, const std::string &path) {
            if (!ids.count(id))
                throw DanglingReference(path + ": unknown object id '" + id + "'");
        };

        const json &rel = array_field(doc, "$", "relations");
        for (std::size_t i = 0; i < rel.size(); ++i)
        {
            const std::string path = "$.relations[" + std::to_string(i) + "]";
            check_fields(rel[i], path, {"subject", "predicate", "object"});
            RelationSpec r;
            r.subject = req_string(rel[i], path, "subject");
            r.predicate = closed_enum(rel[i], path, "predicate", kPredicateNames);
            r.object = req_string(rel[i], path, "object");
            require_id(r.subject, path + ".subject");
            require_id(r.object, path + ".object");
            scene.relations.push_back(std::move(r));
        }

        const json &ev = array_field(doc, "$", "events");
        for (std::size_t i = 0; i < ev.size(); ++i)
        {
            const std::string path = "$.events[" + std::to_string(i) + "]";
            check_fields(ev[i], path, {"type", "participants", "start", "end"});
            EventSpec e;
            e.type = closed_enum(ev[i], path, "type", kEventNames);
            const json &parts = array_field(ev[i], path, "participants");
            if (parts.empty())
                throw SchemaError(path + ".participants: must name at least one object");
            for (std::size_t k = 0; k < parts.size(); ++k)
            {
                const std::string pp = path + ".participants[" + std::to_string(k) + "]";
                if (!parts[k].is_string())
                    throw SchemaError(pp + ": expected a string id");
                e.participants.push_back(parts[k].get<std::string>());
                require_id(e.participants.back(), pp);
            }
            const json *start = find(ev[i], "start");
            const json *end = find(ev[i], "end");
            if (!start || !end)
                throw SchemaError(path + ": 'start' and 'end' are required");
            e.start = number(*start, path + ".start");
            e.end = number(*end, path + ".end");
            if (e.end < e.start)
                throw SchemaError(path + ".end: negative duration (end < start)");
            if (e.start < 0.0 || e.end > scene.horizon)
                throw SchemaError(path + ": interval outside the simulation horizon [0, " +
                                  std::to_string(scene.horizon) + "]");
            scene.events.push_back(std::move(e));
        }
        return scene;
    }

    TargetSpec read_target(const json &t, const std::string &path)
    {
        check_fields(t, path, {"id", "class", "components", "position", "velocity", "heading"});
        TargetSpec spec;
        spec.id = req_string(t, path, "id");
        spec.cls = closed_enum(t, path, "class", kTargetNames);
        const json &comps = array_field(t, path, "components");
        for (std::size_t i = 0; i < comps.size(); ++i)
        {
            const std::string cp = path + ".components[" + std::to_string(i) + "]";
            check_fields(comps[i], cp, {"part", "count", "rotation_hz"});
            ComponentSpec c;
            c.token = req_string(comps[i], cp, "part");
            c.part = open_enum(comps[i], cp, "part", kPartNames);
            if (const json *n = find(comps[i], "count"))
            {
                if (!n->is_number_integer() || n->get<long long>() < 1)
                    throw SchemaError(cp + ".count: expected an integer >= 1");
                c.count = n->get<int>();
            }
            if (const json *r = find(comps[i], "rotation_hz"))
                c.rotation_hz = number(*r, cp + ".rotation_hz");
            if (c.rotation_hz < 0.0)
                throw SchemaError(cp + ".rotation_hz: must be >= 0");
            spec.components.push_back(std::move(c));
        }
        const json *pos = find(t, "position");
        if (!pos)
            throw SchemaError(path + ".position: missing required field");
        spec.position = vec3(*pos, path + ".position");
        if (const json *v = find(t, "velocity"))
            spec.velocity = vec3(*v, path + ".velocity");
        if (const json *h = find(t, "heading"))
            spec.heading = number(*h, path + ".heading");
        return spec;
    }

    BackgroundSpec read_background(const json &b, const std::string &path)
    {
        check_fields(b, path, {"id", "kind", "box", "material_class", "acts_as_occluder"});
        BackgroundSpec spec;
        spec.id = req_string(b, path, "id");
        spec.kind = open_enum(b, path, "kind", kBackgroundNames);
        const json *box = find(b, "box");
        if (!box)
            throw SchemaError(path + ".box: missing required field");
        check_fields(*box, path + ".box", {"min", "max"});
        if (!find(*box, "min") || !find(*box, "max"))
            throw SchemaError(path + ".box: 'min' and 'max' are required");
        spec.box.min = vec3(box->at("min"), path + ".box.min");
        spec.box.max = vec3(box->at("max"), path + ".box.max");
        if (((spec.box.max - spec.box.min).array() <= 0.0).any())
            throw SchemaError(path + ".box: extents must be strictly positive");
        spec.material = open_enum(b, path, "material_class", kMaterialNames);
        spec.acts_as_occluder = spec.kind == BackgroundKind::building;
        if (const json *occ = find(b, "acts_as_occluder"))
        {
            if (!occ->is_boolean())
                throw SchemaError(path + ".acts_as_occluder: expected a boolean");
            spec.acts_as_occluder = occ->get<bool>();
        }
        return spec;
    }

  private:
    ValidationOptions opt_;
};

} // namespace detail

/// Parses and validates a scene document. Throws SchemaError (first
/// violated path) or DanglingReference.
inline ValidationResult validate_scene_with_warnings(std::string_view document, ValidationOptions opt = {})
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(document);
    }
    catch (const nlohmann::json::parse_error &e)
    {
        throw SchemaError(std::string("$: document is not well-formed JSON: ") + e.what());
    }
    detail::SceneReader reader(opt);
    ValidationResult out{reader.read(doc), {}};
    out.warnings = std::move(reader.warnings);
    return out;
}

inline SemanticScene validate_scene(std::string_view document, ValidationOptions opt = {})
{
    return validate_scene_with_warnings(document, opt).scene;
}

inline nlohmann::json to_json(const SemanticScene &scene)
{
    using nlohmann::json;
    auto v3 = [](const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); };
    json doc;
    doc["scene_id"] = scene.scene_id;
    doc["scenario_class"] = to_string(scene.scenario);
    doc["horizon"] = scene.horizon;
    doc["targets"] = json::array();
    for (const auto &t : scene.targets)
    {
        json jt{{"id", t.id}, {"class", to_string(t.cls)}, {"position", v3(t.position)},
                {"velocity", v3(t.velocity)}, {"heading", t.heading}, {"components", json::array()}};
        for (const auto &c : t.components)
            jt["components"].push_back(
                {{"part", c.token.empty() ? std::string(to_string(c.part)) : c.token},
                 {"count", c.count},
                 {"rotation_hz", c.rotation_hz}});
        doc["targets"].push_back(std::move(jt));
    }
    doc["background"] = json::array();
    for (const auto &b : scene.background)
        doc["background"].push_back({{"id", b.id},
                                     {"kind", to_string(b.kind)},
                                     {"box", {{"min", v3(b.box.min)}, {"max", v3(b.box.max)}}},
                                     {"material_class", to_string(b.material)},
                                     {"acts_as_occluder", b.acts_as_occluder}});
    doc["relations"] = json::array();
    for (const auto &r : scene.relations)
        doc["relations"].push_back(
            {{"subject", r.subject}, {"predicate", to_string(r.predicate)}, {"object", r.object}});
    doc["events"] = json::array();
    for (const auto &e : scene.events)
        doc["events"].push_back(
            {{"type", to_string(e.type)}, {"participants", e.participants}, {"start", e.start}, {"end", e.end}});
    return doc;
}

/// Canonical serialization; re-validates to an equal scene.
inline std::string serialize_scene(const SemanticScene &scene, int indent = 2)
{
    return to_json(scene).dump(indent);
}

// ---- Encoding -----------------------------------------------------------

/// Layout of the conditioning code. Blocks are contiguous; the tail up to
/// kCodeDim is zero.
struct CodeLayout
{
    static constexpr std::size_t scenario = 0;      // 5 one-hot
    static constexpr std::size_t target_count = 5;  // vehicle, uav
    static constexpr std::size_t tokens = 7;        // 16 hash buckets
    static constexpr std::size_t numeric = 23;      // normalized aggregates
    static constexpr std::size_t background = 31;   // building, vegetation, roadside, other
    static constexpr std::size_t relation = 35;     // blocks, adjacent_to, approaches
    static constexpr std::size_t event = 38;        // crossing, converging, loitering
    static constexpr std::size_t used = 41;
};

namespace detail {

inline double minmax(double v, double lo, double hi) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); }

// Fixed normalization ranges of the numeric aggregates.
inline constexpr double kMaxSpeed = 60.0;        // m/s
inline constexpr double kMaxRotation = 100.0;    // Hz
inline constexpr double kPositionRange = 500.0;  // +- m
inline constexpr double kMaxHorizon = 600.0;     // s

} // namespace detail

inline std::size_t token_bucket(std::string_view token)
{
    return static_cast<std::size_t>(fnv1a64(token) % kHashBuckets);
}

/// Deterministic feature-hash embedding of a validated scene.
inline SemanticCode encode_scene(const SemanticScene &scene)
{
    using L = CodeLayout;
    SemanticCode code;
    auto &v = code.values;
    v[L::scenario + static_cast<std::size_t>(scene.scenario)] = 1.0;

    double speed = 0.0, rate_sum = 0.0, cos_h = 0.0, sin_h = 0.0;
    std::size_t rate_n = 0;
    Vec3 mean_pos = Vec3::Zero();
    for (const auto &t : scene.targets)
    {
        v[L::target_count + static_cast<std::size_t>(t.cls)] += 1.0;
        speed += t.velocity.norm();
        mean_pos += t.position;
        cos_h += std::cos(t.heading);
        sin_h += std::sin(t.heading);
        for (const auto &c : t.components)
        {
            v[L::tokens + token_bucket(c.token.empty() ? to_string(c.part) : std::string_view(c.token))] += c.count;
            rate_sum += c.rotation_hz * c.count;
            rate_n += static_cast<std::size_t>(c.count);
        }
    }
    for (const auto &b : scene.background)
    {
        v[L::tokens + token_bucket(to_string(b.material))] += 1.0;
        v[L::background + static_cast<std::size_t>(b.kind)] += 1.0;
    }

    double occluded = 0.0;
    Box extent;
    bool have_extent = false;
    auto grow = [&](const Vec3 &lo, const Vec3 &hi) {
        if (!have_extent)
            extent = {lo, hi};
        extent.min = extent.min.cwiseMin(lo);
        extent.max = extent.max.cwiseMax(hi);
        have_extent = true;
    };
    for (const auto &b : scene.background)
    {
        grow(b.box.min, b.box.max);
        if (b.acts_as_occluder)
            occluded += b.box.volume();
    }
    for (const auto &t : scene.targets)
        grow(t.position, t.position);
    const double scene_volume = have_extent ? extent.volume() : 0.0;

    const double nt = static_cast<double>(scene.targets.size());
    if (nt > 0)
    {
        using namespace detail;
        v[L::numeric + 0] = minmax(speed / nt, 0.0, kMaxSpeed);
        v[L::numeric + 1] = rate_n ? minmax(rate_sum / rate_n, 0.0, kMaxRotation) : 0.0;
        mean_pos /= nt;
        for (int k = 0; k < 3; ++k)
            v[L::numeric + 3 + k] = minmax(mean_pos[k], -kPositionRange, kPositionRange);
        v[L::numeric + 6] = 0.5 * (cos_h / nt + 1.0);
        v[L::numeric + 7] = 0.5 * (sin_h / nt + 1.0);
    }
    v[L::numeric + 2] = scene_volume > 0.0 ? std::clamp(occluded / scene_volume, 0.0, 1.0) : 0.0;

    for (const auto &r : scene.relations)
        v[L::relation + static_cast<std::size_t>(r.predicate)] += 1.0;
    for (const auto &e : scene.events)
        v[L::event + static_cast<std::size_t>(e.type)] += 1.0;
    return code;
}

/// Euclidean distance between two codes.
inline double scene_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw DimensionMismatch("scene_distance: dimensions " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double scene_distance(const SemanticCode &a, const SemanticCode &b)
{
    return scene_distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

} // namespace stcm
