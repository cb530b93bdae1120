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

// Conditional parameter generator theta = G(s, z).
//
// The k-NN model draws one of the k training codes nearest to s and returns
// its theta plus per-dimension Gaussian jitter. The baseline model ignores s
// and draws every theta dimension independently from its training marginal.

#pragma once

#include "stcm/parameters.hpp"

#include <istream>
#include <ostream>

namespace stcm {

inline constexpr std::size_t kLatentDim = 16;

using LatentVector = std::array<double, kLatentDim>;
using TrainingPair = std::pair<SemanticCode, ParameterVector>;

enum class GeneratorKind { knn, baseline };

struct GeneratorModel
{
    GeneratorKind kind = GeneratorKind::knn;
    std::string layout{kThetaLayout};
    std::size_t k = 8;
    std::vector<SemanticCode> codes;
    std::vector<std::vector<double>> thetas;
    std::vector<double> bandwidth; // knn: jitter std per theta dimension
    std::vector<double> mean, stddev; // baseline marginals

    bool operator==(const GeneratorModel &) const = default;
};

struct GeneratorOptions
{
    std::size_t k = 8;
    double bandwidth_factor = 0.1;
};

namespace detail {

inline void check_pairs(std::span<const TrainingPair> pairs, std::size_t need)
{
    if (pairs.size() < std::max<std::size_t>(need, 1))
        throw TooFewSamples("generator: need at least " + std::to_string(std::max<std::size_t>(need, 1)) +
                            " training pairs, got " + std::to_string(pairs.size()));
    for (const auto &[code, theta] : pairs)
    {
        if (theta.layout != kThetaLayout)
            throw VersionMismatch("generator: training theta layout '" + theta.layout + "'");
        if (theta.values.size() != ThetaLayout::size)
            throw DimensionMismatch("generator: training theta has wrong size");
        if (code.values.size() != kCodeDim)
            throw DimensionMismatch("generator: training code has wrong size");
    }
}

inline void marginals(std::span<const TrainingPair> pairs, std::vector<double> &mean, std::vector<double> &sd)
{
    const std::size_t n = pairs.size(), D = ThetaLayout::size;
    mean.assign(D, 0.0);
    sd.assign(D, 0.0);
    for (const auto &pr : pairs)
        for (std::size_t d = 0; d < D; ++d)
            mean[d] += pr.second.values[d];
    for (auto &m : mean)
        m /= static_cast<double>(n);
    if (n < 2)
        return;
    for (const auto &pr : pairs)
        for (std::size_t d = 0; d < D; ++d)
        {
            const double e = pr.second.values[d] - mean[d];
            sd[d] += e * e;
        }
    for (auto &s : sd)
        s = std::sqrt(s / static_cast<double>(n - 1));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline std::uint64_t hash_latent(const LatentVector &z)
{
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (double v : z)
        h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

} // namespace detail

/// k-NN conditional model. Bandwidths follow Silverman's rule
/// 1.06 * sd * n^(-1/5), scaled by `bandwidth_factor`.
inline GeneratorModel fit(std::span<const TrainingPair> pairs, const GeneratorOptions &opt = {})
{
    if (opt.k < 1)
        throw SchemaError("generator: k must be >= 1");
    if (!(opt.bandwidth_factor >= 0.0))
        throw SchemaError("generator: bandwidth factor must be >= 0");
    detail::check_pairs(pairs, opt.k);
    GeneratorModel m;
    m.kind = GeneratorKind::knn;
    m.k = opt.k;
    for (const auto &[code, theta] : pairs)
    {
        m.codes.push_back(code);
        m.thetas.push_back(theta.values);
    }
    std::vector<double> mean, sd;
    detail::marginals(pairs, mean, sd);
    const double n_factor = 1.06 * std::pow(static_cast<double>(pairs.size()), -0.2) * opt.bandwidth_factor;
    m.bandwidth.resize(sd.size());
    for (std::size_t d = 0; d < sd.size(); ++d)
        m.bandwidth[d] = sd[d] * n_factor;
    return m;
}

/// Coarse-statistics baseline: independent Normal marginals.
inline GeneratorModel fit_baseline(std::span<const TrainingPair> pairs)
{
    detail::check_pairs(pairs, 1);
    GeneratorModel m;
    m.kind = GeneratorKind::baseline;
    m.k = 1;
    detail::marginals(pairs, m.mean, m.stddev);
    return m;
}

/// Indices of the k training codes nearest to s; ties go to the lower index.
inline std::vector<std::size_t> nearest_codes(const GeneratorModel &m, const SemanticCode &s)
{
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(m.codes.size());
    for (std::size_t i = 0; i < m.codes.size(); ++i)
        dist.emplace_back(scene_distance(s, m.codes[i]), i);
    const std::size_t k = std::min(m.k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(dist[i].second);
    return out;
}

/// One raw draw theta = G(s, z) without validation. `neighbors` is
/// nearest_codes(m, s) and is ignored by the baseline.
inline ParameterVector generate_one(const GeneratorModel &m, std::span<const std::size_t> neighbors,
                                    const LatentVector &z)
{
    ParameterVector theta;
    theta.layout = m.layout;
    Rng rng(detail::hash_latent(z));
    if (m.kind == GeneratorKind::baseline)
    {
        for (std::size_t d = 0; d < theta.values.size(); ++d)
            theta.values[d] = m.mean[d] + m.stddev[d] * standard_normal(rng);
        return theta;
    }
    const std::size_t k = neighbors.size();
    const auto pick = std::min(k - 1, static_cast<std::size_t>(detail::normal_cdf(z[0]) * static_cast<double>(k)));
    theta.values = m.thetas[neighbors[pick]];
    for (std::size_t d = 0; d < theta.values.size(); ++d)
        if (m.bandwidth[d] > 0.0)
            theta.values[d] += m.bandwidth[d] * standard_normal(rng);
    return theta;
}

/// Ensemble of n valid theta for code s. Draw i uses substream i of `seed`;
/// an invalid draw is replaced by a fresh latent from the same substream.
inline std::vector<ParameterVector> generate(const GeneratorModel &m, const SemanticCode &s, std::uint64_t seed,
                                             std::size_t n)
{
    std::vector<ParameterVector> out;
    if (n == 0)
        return out;
    if (m.layout != kThetaLayout)
        throw VersionMismatch("generator model layout '" + m.layout + "'");
    std::vector<std::size_t> neighbors;
    if (m.kind == GeneratorKind::knn)
    {
        if (m.codes.empty())
            throw DegenerateModel("generator: model has no training pairs");
        neighbors = nearest_codes(m, s);
    }
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        Rng rng(stream_seed(seed, Stream::generator, i));
        int failures = 0;
        for (;;)
        {
            LatentVector z;
            for (auto &v : z)
                v = standard_normal(rng);
            ParameterVector theta = generate_one(m, neighbors, z);
            if (is_valid(theta))
            {
                out.push_back(std::move(theta));
                break;
            }
            if (++failures >= 100)
                throw DegenerateModel("generator: 100 consecutive invalid draws");
        }
    }
    return out;
}

// ---- Training pairs (JSON lines) ------------------------------------------
//
// One pair per line: {"code": [...], "layout": "...", "theta": [...]}.

inline std::string pair_to_line(const TrainingPair &pair)
{
    nlohmann::ordered_json j;
    j["code"] = pair.first.values;
    j["layout"] = pair.second.layout;
    j["theta"] = pair.second.values;
    return j.dump();
}

inline std::vector<TrainingPair> read_pairs(std::istream &is)
{
    std::vector<TrainingPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            const auto j = nlohmann::json::parse(line);
            TrainingPair pair;
            pair.first.values = j.at("code").get<std::vector<double>>();
            pair.second = theta_from_line(line);
            if (pair.first.values.size() != kCodeDim)
                throw DimensionMismatch("pairs line " + std::to_string(lineno) + ": code dimension " +
                                        std::to_string(pair.first.values.size()));
            out.push_back(std::move(pair));
        }
        catch (const nlohmann::json::exception &e)
        {
            throw FormatError("pairs line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// ---- Model file ---------------------------------------------------------
//
// First line: "STCM-GENERATOR 1 <layout>", then one JSON document. Doubles
// are written with round-trip precision, so a reloaded model samples
// bit-identically.

inline constexpr std::string_view kGeneratorMagic = "STCM-GENERATOR 1";

inline void save_model(std::ostream &os, const GeneratorModel &m)
{
    nlohmann::ordered_json j;
    j["kind"] = m.kind == GeneratorKind::knn ? "knn" : "baseline";
    j["k"] = m.k;
    j["codes"] = nlohmann::ordered_json::array();
    for (const auto &c : m.codes)
        j["codes"].push_back(c.values);
    j["thetas"] = m.thetas;
    j["bandwidth"] = m.bandwidth;
    j["mean"] = m.mean;
    j["stddev"] = m.stddev;
    os << kGeneratorMagic << ' ' << m.layout << '\n' << j.dump() << '\n';
}

inline GeneratorModel load_model(std::istream &is)
{
    std::string header;
    if (!std::getline(is, header))
        throw FormatError("generator model: empty file");
    const std::string expected = std::string(kGeneratorMagic) + " " + std::string(kThetaLayout);
    if (header != expected)
        throw VersionMismatch("generator model header '" + header + "' (expected '" + expected + "')");
    try
    {
        const auto j = nlohmann::json::parse(is);
        GeneratorModel m;
        const auto kind = j.at("kind").get<std::string>();
        if (kind != "knn" && kind != "baseline")
            throw FormatError("generator model: unknown kind '" + kind + "'");
        m.kind = kind == "knn" ? GeneratorKind::knn : GeneratorKind::baseline;
        m.k = j.at("k").get<std::size_t>();
        for (const auto &c : j.at("codes"))
            m.codes.push_back({c.get<std::vector<double>>()});
        m.thetas = j.at("thetas").get<std::vector<std::vector<double>>>();
        m.bandwidth = j.at("bandwidth").get<std::vector<double>>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.stddev = j.at("stddev").get<std::vector<double>>();
        const std::size_t D = ThetaLayout::size;
        const bool ok = m.kind == GeneratorKind::knn
                            ? (m.k >= 1 && m.codes.size() == m.thetas.size() && m.bandwidth.size() == D &&
                               std::all_of(m.thetas.begin(), m.thetas.end(), [&](auto &t) { return t.size() == D; }))
                            : (m.mean.size() == D && m.stddev.size() == D);
        if (!ok)
            throw FormatError("generator model: inconsistent dimensions");
        return m;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw FormatError(std::string("generator model: ") + e.what());
    }
}

} // namespace stcm
