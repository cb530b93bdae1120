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

// Run configuration and provenance manifest.
//
// Config files are INI: sections mirror module names ([synthesizer],
// [interaction], [generator], [llm_parser], [run], [clutter] and per-scenario
// [clutter.<scenario_class>]). Values are flattened to "section.key".
// Precedence: flags > environment > file > built-in defaults.

#pragma once

#include "stcm/generator.hpp"
#include "stcm/llm_parser.hpp"
#include "stcm/synthesizer.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace stcm {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kThreadsEnv = "STCM_THREADS";

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim_quotes(std::string v)
{
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t");
    v = b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
        v = v.substr(1, v.size() - 2);
    return v;
}

inline double to_double(const std::string &key, const std::string &v)
{
    try
    {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument(v);
        return x;
    }
    catch (const std::exception &)
    {
        throw SchemaError("config: " + key + " = '" + v + "' is not a number");
    }
}

inline Vec3 to_vec3(const std::string &key, const std::string &v)
{
    std::array<double, 3> out{};
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i)
    {
        const auto comma = v.find(',', start);
        if ((i < 2) == (comma == std::string::npos))
            throw SchemaError("config: " + key + " = '" + v + "' is not 'x,y,z'");
        out[i] = to_double(key, trim_quotes(v.substr(start, comma - start)));
        start = comma + 1;
    }
    return {out[0], out[1], out[2]};
}

} // namespace detail

/// Reads an INI document into "section.key" -> value.
inline ConfigMap read_ini(std::istream &is)
{
    boost::property_tree::ptree tree;
    try
    {
        boost::property_tree::ini_parser::read_ini(is, tree);
    }
    catch (const boost::property_tree::ini_parser_error &e)
    {
        throw FormatError(std::string("config: ") + e.what());
    }
    ConfigMap out;
    for (const auto &[section, body] : tree)
    {
        if (body.empty())
        {
            out[section] = detail::trim_quotes(body.data());
            continue;
        }
        for (const auto &[key, value] : body)
            out[section + "." + key] = detail::trim_quotes(value.data());
    }
    return out;
}

inline ConfigMap read_ini_file(const std::filesystem::path &path)
{
    std::ifstream is(path);
    if (!is)
        throw FormatError("config: cannot open " + path.string());
    return read_ini(is);
}

class RunConfig
{
public:
    RunConfig() = default;

    /// Merges layers in increasing precedence: file, environment, flags.
    static RunConfig merge(const ConfigMap &file, const ConfigMap &flags, bool use_env = true)
    {
        RunConfig rc;
        rc.values_ = file;
        if (use_env)
            if (const char *t = std::getenv(std::string(kThreadsEnv).c_str()))
                rc.values_["run.threads"] = t;
        for (const auto &[k, v] : flags)
            rc.values_[k] = v;
        return rc;
    }

    const ConfigMap &values() const { return values_; }
    bool has(const std::string &key) const { return values_.count(key) > 0; }
    void set(const std::string &key, std::string value) { values_[key] = std::move(value); }

    std::string get(const std::string &key, std::string fallback) const
    {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get(const std::string &key, double fallback) const
    {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::to_double(key, it->second);
    }
    int get(const std::string &key, int fallback) const
    {
        const double x = get(key, static_cast<double>(fallback));
        if (x != std::floor(x))
            throw SchemaError("config: " + key + " must be an integer");
        return static_cast<int>(x);
    }
    Vec3 get(const std::string &key, const Vec3 &fallback) const
    {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::to_vec3(key, it->second);
    }

    std::uint64_t seed() const
    {
        const std::string s = get("run.seed", std::string("1"));
        try
        {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            // stoull accepts a sign and wraps negative values
            if (used != s.size() || s.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument(s);
            return v;
        }
        catch (const std::exception &)
        {
            throw SchemaError("config: run.seed = '" + s + "' is not an unsigned integer");
        }
    }

    unsigned threads() const
    {
        const int t = get("run.threads", 1);
        if (t < 1)
            throw SchemaError("config: run.threads must be >= 1");
        return static_cast<unsigned>(t);
    }

    std::string log_level() const { return get("run.log_level", std::string("info")); }

    SimConfig sim_config() const
    {
        SimConfig c;
        c.f_c = get("synthesizer.f_c", c.f_c);
        c.bandwidth = get("synthesizer.bandwidth", c.bandwidth);
        c.n_subcarriers = get("synthesizer.n_subcarriers", c.n_subcarriers);
        c.dt = get("synthesizer.dt", c.dt);
        c.n_snapshots = get("synthesizer.n_snapshots", c.n_snapshots);
        c.tx = get("synthesizer.tx", c.tx);
        c.rx = get("synthesizer.rx", c.rx);
        c.tx_array.n_elements = get("synthesizer.tx_elements", c.tx_array.n_elements);
        c.tx_array.spacing = get("synthesizer.tx_spacing", c.tx_array.spacing);
        c.rx_array.n_elements = get("synthesizer.rx_elements", c.rx_array.n_elements);
        c.rx_array.spacing = get("synthesizer.rx_spacing", c.rx_array.spacing);
        c.noise_power = get("synthesizer.noise_power", c.noise_power);
        c.library_seed = static_cast<std::uint64_t>(get("synthesizer.library_seed", static_cast<int>(c.library_seed)));
        c.multibounce.pairs = get("interaction.mb_pairs", c.multibounce.pairs);
        c.multibounce.loss_db = get("interaction.mb_loss_db", c.multibounce.loss_db);
        c.seed = seed();
        c.validate();
        return c;
    }

    /// Scenario table: built-in values, then [clutter.<scenario>] sections,
    /// then [clutter] keys applied to every scenario.
    ClutterTable clutter_table() const
    {
        ClutterTable table;
        for (const auto &[cls, name] : detail::kScenarioNames.entries)
        {
            ClutterParams p = default_clutter_params(cls);
            for (const auto &prefix : {"clutter." + std::string(name) + ".", std::string("clutter.")})
                for (auto field : ClutterParams::field_names)
                {
                    const std::string key = prefix + std::string(field);
                    if (has(key))
                        p.set(field, get(key, 0.0));
                }
            p.validate();
            table[cls] = p;
        }
        for (const auto &[k, v] : values_)
            if (k.rfind("clutter.", 0) == 0)
            {
                const std::string rest = k.substr(8);
                const auto dot = rest.find('.');
                const std::string field = dot == std::string::npos ? rest : rest.substr(dot + 1);
                if (std::find(ClutterParams::field_names.begin(), ClutterParams::field_names.end(), field) ==
                    ClutterParams::field_names.end())
                    throw SchemaError("config: unknown clutter field '" + k + "'");
                if (dot != std::string::npos)
                    parse_scenario(rest.substr(0, dot));
            }
        return table;
    }

    GeneratorOptions generator_options() const
    {
        GeneratorOptions g;
        g.k = static_cast<std::size_t>(get("generator.k", static_cast<int>(g.k)));
        g.bandwidth_factor = get("generator.bandwidth_factor", g.bandwidth_factor);
        return g;
    }

    LlmEndpointConfig llm_config() const
    {
        LlmEndpointConfig c;
        c.base_url = get("llm_parser.base_url", c.base_url);
        c.model_name = get("llm_parser.model", c.model_name);
        c.max_retries = get("llm_parser.max_retries", c.max_retries);
        c.timeout = get("llm_parser.timeout", c.timeout);
        c.temperature = get("llm_parser.temperature", c.temperature);
        c.key_from_env();
        c.validate();
        return c;
    }

    /// Hash of the merged configuration (threads and output paths excluded).
    std::uint64_t hash() const
    {
        std::string canon;
        for (const auto &[k, v] : values_)
            if (k != "run.threads" && k != "run.out_dir" && k != "run.log_level")
                canon += k + "=" + v + "\n";
        return fnv1a64(canon);
    }

private:
    static ScenarioClass parse_scenario(const std::string &name)
    {
        for (const auto &[cls, n] : detail::kScenarioNames.entries)
            if (n == name)
                return cls;
        throw SchemaError("config: unknown scenario section 'clutter." + name + "'");
    }

    ConfigMap values_;
};

// ---- Manifest -----------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("InternalError", "sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::string sha256_file(const std::filesystem::path &path) { return sha256_hex(read_file(path)); }

struct Manifest
{
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    ConfigMap config;

    nlohmann::ordered_json to_json(bool with_timestamp = true) const
    {
        nlohmann::ordered_json j;
        j["tool"] = "stcm";
        j["version"] = kVersion;
        j["theta_layout"] = kThetaLayout;
        j["command"] = command;
        std::ostringstream h;
        h << std::hex << std::setw(16) << std::setfill('0') << config_hash;
        j["config_hash"] = h.str();
        j["seed"] = seed;
        j["threads"] = threads;
        j["config"] = config;
        auto files = [](const std::vector<std::filesystem::path> &list) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto &p : list)
                arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
            return arr;
        };
        j["inputs"] = files(inputs);
        j["outputs"] = files(outputs);
        if (with_timestamp)
        {
            const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::ostringstream ts;
            ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
            j["created"] = ts.str();
        }
        return j;
    }

    void write(const std::filesystem::path &path) const
    {
        std::ofstream os(path);
        if (!os)
            throw FormatError("cannot write " + path.string());
        os << to_json().dump(2) << '\n';
    }
};

} // namespace stcm
