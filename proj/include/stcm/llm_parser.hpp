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

// Free text -> scene document through an OpenAI-compatible chat-completions
// endpoint. Every returned scene has passed validate_scene.

#pragma once

#include "stcm/semantics.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cstdlib>
#include <functional>

namespace stcm {

inline constexpr std::string_view kApiKeyEnv = "STCM_LLM_API_KEY";

struct LlmEndpointConfig
{
    std::string base_url;   // e.g. https://host/v1; empty = offline
    std::string model_name;
    std::string api_key;
    int max_retries = 2;
    double timeout = 30.0;  // s
    double temperature = 0.0;

    void validate() const
    {
        if (!(timeout > 0.0))
            throw SchemaError("llm.timeout must be > 0");
        if (max_retries < 0)
            throw SchemaError("llm.max_retries must be >= 0");
        if (!(temperature >= 0.0 && temperature <= 2.0))
            throw SchemaError("llm.temperature must be in [0, 2]");
    }

    /// Fills api_key from STCM_LLM_API_KEY when it is unset.
    LlmEndpointConfig &key_from_env()
    {
        if (api_key.empty())
            if (const char *k = std::getenv(std::string(kApiKeyEnv).c_str()))
                api_key = k;
        return *this;
    }
};

inline const std::string &build_system_prompt()
{
    static const std::string prompt = R"(You convert a free-text description of a radio sensing environment into one JSON scene document.

The description is organised in four levels:
1. component level: salient parts of a target that shape its echo, such as wheels or rotors, with their count and rotation rate.
2. object level: the targets (class vehicle or uav) and the background objects (building, vegetation, roadside) with their placement, motion, extent and material.
3. scene level: the scenario class and the spatial relations between objects, such as one object blocking another.
4. intent level: events that unfold over time, such as targets crossing, converging or loitering.

Output format. Emit exactly one JSON object and nothing else: no prose, no comments, no code fences. Use these field names and no others.
Top level (scene):
  "scene_id": string
  "scenario_class": one of "urban_street", "highway", "indoor", "open_field"
  "horizon": number of seconds covered by the description (optional, default 60)
  "targets": array of target objects
  "background": array of background objects
  "relations": array of relation objects
  "events": array of event objects
Target (object level):
  "id": unique string
  "class": one of "vehicle", "uav"
  "components": array of {"part": "wheel" or "rotor", "count": integer >= 1, "rotation_hz": number >= 0}
  "position": [x, y, z] in metres
  "velocity": [vx, vy, vz] in metres per second (optional, default [0, 0, 0])
  "heading": radians (optional, default 0)
Background (object level):
  "id": unique string
  "kind": one of "building", "vegetation", "roadside"
  "box": {"min": [x, y, z], "max": [x, y, z]} in metres, with min < max on every axis
  "material_class": one of "concrete", "glass", "metal", "foliage"
  "acts_as_occluder": true or false (optional, default true for buildings)
Relation (scene level):
  "subject": id, "predicate": one of "blocks", "adjacent_to", "approaches", "object": id
Event (intent level):
  "type": one of "crossing", "converging", "loitering"
  "participants": array of ids
  "start": seconds, "end": seconds, with 0 <= start <= end <= horizon

Rules. Every id referenced by a relation or an event must be declared as a target or a background object. Include at least one target or background object. When a quantity is not stated, choose a physically plausible value. If a previous answer was rejected, the rejection reason follows the user text; correct that problem and emit the full document again.
)";
    return prompt;
}

/// First balanced {...} block of `text`, skipping braces inside strings.
inline std::optional<std::string> first_json_object(std::string_view text)
{
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1))
    {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < text.size(); ++i)
        {
            const char c = text[i];
            if (in_string)
            {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"')
                in_string = true;
            else if (c == '{')
                ++depth;
            else if (c == '}' && --depth == 0)
                return std::string(text.substr(start, i - start + 1));
        }
    }
    return std::nullopt;
}

struct ParseOutcome
{
    SemanticScene scene;
    int retries = 0;
    std::vector<std::string> warnings;
};

/// Observability hook; receives request/response summaries. The API key is
/// never part of the logged text.
using LlmLogger = std::function<void(std::string_view)>;

namespace detail {

struct SplitUrl
{
    std::string origin; // scheme://host[:port]
    std::string path;   // without trailing slash
};

inline SplitUrl split_url(const std::string &url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw TransportError("llm: base_url '" + url + "' has no scheme");
    const auto slash = url.find('/', scheme + 3);
    SplitUrl out{url.substr(0, slash), slash == std::string::npos ? std::string() : url.substr(slash)};
    while (!out.path.empty() && out.path.back() == '/')
        out.path.pop_back();
    return out;
}

inline std::string redact(std::string text, const std::string &secret)
{
    if (secret.empty())
        return text;
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos))
        text.replace(pos, secret.size(), "***");
    return text;
}

} // namespace detail

/// Sends the system prompt and `text`, validates the first JSON object of
/// the reply and re-asks with the validator message on SchemaError, up to
/// cfg.max_retries times.
inline ParseOutcome parse_text(const std::string &text, const LlmEndpointConfig &cfg, const LlmLogger &log = {})
{
    if (cfg.base_url.empty())
        throw OfflineMode("llm: no endpoint configured; supply a scene document directly");
    cfg.validate();
    const detail::SplitUrl url = detail::split_url(cfg.base_url);
    httplib::Client client(url.origin);
    const auto sec = static_cast<time_t>(cfg.timeout);
    const auto usec = static_cast<time_t>((cfg.timeout - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!cfg.api_key.empty())
        headers.emplace("Authorization", "Bearer " + cfg.api_key);
    auto emit = [&](const std::string &msg) {
        if (log)
            log(detail::redact(msg, cfg.api_key));
    };

    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", build_system_prompt()}});
    messages.push_back({{"role", "user"}, {"content", text}});
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt)
    {
        nlohmann::json body{{"model", cfg.model_name}, {"temperature", cfg.temperature}, {"messages", messages}};
        const std::string payload = body.dump();
        emit("POST " + url.origin + url.path + "/chat/completions (attempt " + std::to_string(attempt) +
             ", auth " + (cfg.api_key.empty() ? "none" : "bearer ***") + ") " + payload);
        auto res = client.Post(url.path + "/chat/completions", headers, payload, "application/json");
        if (!res)
            throw TransportError("llm: request failed: " + httplib::to_string(res.error()));
        emit("HTTP " + std::to_string(res->status) + " " + res->body);
        if (res->status != 200)
            throw TransportError("llm: HTTP " + std::to_string(res->status));
        std::string content;
        try
        {
            content = nlohmann::json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
        }
        catch (const nlohmann::json::exception &e)
        {
            throw TransportError(std::string("llm: malformed completion response: ") + e.what());
        }
        try
        {
            const auto doc = first_json_object(content);
            if (!doc)
                throw SchemaError("$: the reply contains no JSON object");
            ValidationResult r = validate_scene_with_warnings(*doc);
            return {std::move(r.scene), attempt, std::move(r.warnings)};
        }
        catch (const ValidationError &e)
        {
            last_error = e.what();
            messages.push_back({{"role", "assistant"}, {"content", content}});
            messages.push_back({{"role", "user"},
                                {"content", "The document was rejected: " + last_error +
                                                ". Emit the corrected document only."}});
        }
    }
    throw ParseExhausted("llm: no valid document after " + std::to_string(cfg.max_retries) +
                         " retries; last validator error: " + last_error);
}

} // namespace stcm
