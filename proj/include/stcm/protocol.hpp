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

// Identification benchmark on the synthetic library.
//
// Geometry: a monostatic station at the origin with an 8-element receive
// ULA; the target sits at -range * u_v with heading 0, so the station sees
// it from body direction u_v (library view v). Channels are target-only
// (theta carries no clutter and no multi-bounce pairs) with AWGN at a fixed
// SNR relative to the mean per-element CFR power.
//
// Single observation: reference channels render the library entry itself;
// model channels render theta drawn from a generator conditioned on the
// code of the same scene, with that library entry left out of the training
// pairs. Each channel is scored by the best TMS over the whole library.
//
// Multi-station: every instance picks a class and n_stations distinct
// views; the TMS vectors of model and reference channels across those
// stations are compared with the two-sample K-S test.

#pragma once

#include "stcm/fidelity.hpp"
#include "stcm/generator.hpp"

#include <numeric>

namespace stcm {

struct ProtocolConfig
{
    std::size_t n_views = 200; // per class
    std::uint64_t library_seed = 7;
    std::uint64_t seed = 1;
    double range = 50.0; // m
    double f_c = 10e9;
    double bandwidth = 2e9;
    int n_subcarriers = 257;
    int rx_elements = 8;
    double rx_spacing = 0.5;
    double snr_db = 30.0;
    std::size_t k_extract = 10;
    GeneratorOptions generator;
    std::size_t n_instances = 100;
    std::size_t n_stations = 10;
    double exceedance_q = 0.95;
    unsigned threads = 1;
};

enum class ModelKind { reference, generator, baseline };

class Protocol
{
public:
    explicit Protocol(ProtocolConfig cfg) : cfg_(std::move(cfg))
    {
        views_ = fibonacci_directions(cfg_.n_views);
        ClutterParams quiet = default_clutter_params(ScenarioClass::open_field);
        quiet.n_clusters = 0;
        for (TargetClass cls : {TargetClass::vehicle, TargetClass::uav})
        {
            const ClassModel model = build_class_model(cls, cfg_.library_seed);
            for (std::size_t v = 0; v < views_.size(); ++v)
            {
                library_.push_back(model.view_set(views_[v]));
                const MultibounceConfig no_mb{0, 0.0};
                pairs_.emplace_back(encode_scene(scene(cls, v)),
                                    parameters_for(library_.back(), model.part_rates, quiet, no_mb));
            }
        }
        baseline_ = fit_baseline(pairs_);
    }

    const ProtocolConfig &config() const { return cfg_; }
    const std::vector<McsSet> &library() const { return library_; }
    const std::vector<TrainingPair> &pairs() const { return pairs_; }
    std::size_t size() const { return library_.size(); }
    TargetClass class_of(std::size_t idx) const { return library_[idx].cls; }
    std::size_t view_of(std::size_t idx) const { return idx % cfg_.n_views; }

    SimConfig sim_config() const
    {
        SimConfig c;
        c.f_c = cfg_.f_c;
        c.bandwidth = cfg_.bandwidth;
        c.n_subcarriers = cfg_.n_subcarriers;
        c.tx = Vec3::Zero();
        c.rx = Vec3::Zero();
        c.rx_array = {cfg_.rx_elements, cfg_.rx_spacing};
        c.tx_array = {1, 0.5};
        c.multibounce = {0, 0.0};
        c.library_seed = cfg_.library_seed;
        return c;
    }

    Vec3 target_position(std::size_t view) const { return -cfg_.range * views_[view]; }

    SemanticScene scene(TargetClass cls, std::size_t view) const
    {
        SemanticScene s;
        s.scene_id = std::string(to_string(cls)) + "_view_" + std::to_string(view);
        s.scenario = ScenarioClass::open_field;
        TargetSpec t;
        t.id = "target";
        t.cls = cls;
        t.position = target_position(view);
        s.targets.push_back(t);
        return s;
    }

    ObservationGeometry geometry(std::size_t view) const { return {sim_config(), target_position(view), 0.0, 0.0}; }

    ExtractionOptions extraction(std::size_t view) const
    {
        // the window starts a few metres short of the target range
        return {2.0 * (target_position(view).norm() - 6.0) / kSpeedOfLight, 1e-12};
    }

    /// Generator fit on all library pairs except `exclude`.
    GeneratorModel generator_without(std::size_t exclude) const
    {
        std::vector<TrainingPair> train;
        train.reserve(pairs_.size() - 1);
        for (std::size_t i = 0; i < pairs_.size(); ++i)
            if (i != exclude)
                train.push_back(pairs_[i]);
        return fit(train, cfg_.generator);
    }

    const GeneratorModel &baseline() const { return baseline_; }

    /// Theta describing library entry idx under the given model kind.
    ParameterVector draw_theta(ModelKind kind, std::size_t idx, std::uint64_t seed) const
    {
        switch (kind)
        {
        case ModelKind::reference: return pairs_[idx].second;
        case ModelKind::generator:
            return generate(generator_without(idx), pairs_[idx].first, seed, 1).front();
        case ModelKind::baseline: return generate(baseline_, pairs_[idx].first, seed, 1).front();
        }
        return pairs_[idx].second;
    }

    /// Noisy CFR of theta rendered for a target of class cls seen from view.
    Cfr render(const ParameterVector &theta, TargetClass cls, std::size_t view, std::uint64_t noise_seed) const
    {
        const SimConfig sim = sim_config();
        const SceneRealization real = instantiate(scene(cls, view), theta, sim);
        const auto paths = assemble(real, sim, 0.0);
        Cfr H = render_cfr(paths, sim, 0.0);
        const double power = H.energy() / static_cast<double>(H.data.size());
        Rng rng(noise_seed);
        add_noise(H, power * std::pow(10.0, -cfg_.snr_db / 10.0), rng);
        return H;
    }

    /// Best TMS over the whole library for a channel observed at `view`.
    double score(const Cfr &H, std::size_t view) const
    {
        const ObservationGeometry g = geometry(view);
        const auto est = extract_centers(H, g.cfg, cfg_.k_extract, extraction(view));
        return identify(est, project_library(library_, g), tms_scales(g.cfg)).score;
    }

    /// TMS of library entry idx observed under the given model kind.
    double observe(ModelKind kind, std::size_t idx, std::size_t view, std::uint64_t stream) const
    {
        const std::uint64_t base = stream_seed(cfg_.seed, Stream::protocol, stream);
        const ParameterVector theta = draw_theta(kind, idx, stream_seed(base, 1));
        return score(render(theta, class_of(idx), view, stream_seed(base, 2)), view);
    }

private:
    ProtocolConfig cfg_;
    std::vector<Vec3> views_;
    std::vector<McsSet> library_;
    std::vector<TrainingPair> pairs_;
    GeneratorModel baseline_;
};

struct IdentificationResult
{
    std::vector<double> reference, generator, baseline;
    double threshold = 0.0;
    double reference_exceedance = 0.0, generator_exceedance = 0.0, baseline_exceedance = 0.0;
};

/// Single-observation benchmark over every library entry.
inline IdentificationResult run_identification(const Protocol &p)
{
    const std::size_t n = p.size();
    IdentificationResult r;
    r.reference.resize(n);
    r.generator.resize(n);
    r.baseline.resize(n);
    const std::uint64_t kinds = 3;
    parallel_for(n, p.config().threads, [&](std::size_t i) {
        const std::size_t view = p.view_of(i);
        r.reference[i] = p.observe(ModelKind::reference, i, view, kinds * i + 0);
        r.generator[i] = p.observe(ModelKind::generator, i, view, kinds * i + 1);
        r.baseline[i] = p.observe(ModelKind::baseline, i, view, kinds * i + 2);
    });
    r.threshold = calibrate_threshold(r.reference, p.config().exceedance_q);
    r.reference_exceedance = exceedance(r.reference, r.threshold);
    r.generator_exceedance = exceedance(r.generator, r.threshold);
    r.baseline_exceedance = exceedance(r.baseline, r.threshold);
    return r;
}

struct CollaborativeResult
{
    std::vector<double> generator_p, baseline_p;
    double generator_pass = 0.0; // fraction of p-values >= alpha
    double baseline_median = 0.0;
};

inline double median(std::vector<double> v)
{
    if (v.empty())
        throw EmptySample("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Multi-station benchmark: n_instances targets, n_stations views each.
inline CollaborativeResult run_collaborative(const Protocol &p)
{
    const ProtocolConfig &cfg = p.config();
    if (cfg.n_stations < 2)
        throw InsufficientSamples("collaborative: at least 2 stations are required");
    if (cfg.n_stations > cfg.n_views)
        throw SchemaError("collaborative: more stations than library views");
    const std::size_t n = cfg.n_instances, S = cfg.n_stations;
    std::vector<std::vector<double>> ref(n), gen(n), base(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        Rng rng(stream_seed(cfg.seed, Stream::protocol, (1ULL << 40) + i));
        const std::size_t cls_offset = (i % 2) * cfg.n_views;
        std::vector<std::size_t> views(cfg.n_views);
        std::iota(views.begin(), views.end(), std::size_t{0});
        // partial Fisher-Yates: first S entries are a uniform subset
        for (std::size_t s = 0; s < S; ++s)
        {
            std::uniform_int_distribution<std::size_t> pick(s, views.size() - 1);
            std::swap(views[s], views[pick(rng)]);
        }
        for (std::size_t s = 0; s < S; ++s)
        {
            const std::size_t idx = cls_offset + views[s];
            const std::uint64_t stream = (1ULL << 41) + 3 * (i * S + s);
            ref[i].push_back(p.observe(ModelKind::reference, idx, views[s], stream + 0));
            gen[i].push_back(p.observe(ModelKind::generator, idx, views[s], stream + 1));
            base[i].push_back(p.observe(ModelKind::baseline, idx, views[s], stream + 2));
        }
    });
    CollaborativeResult r;
    r.generator_p = collaborative_pvalues(gen, ref);
    r.baseline_p = collaborative_pvalues(base, ref);
    r.generator_pass = static_cast<double>(std::count_if(r.generator_p.begin(), r.generator_p.end(),
                                                         [](double x) { return x >= kSignificance; })) /
                       static_cast<double>(n);
    r.baseline_median = median(r.baseline_p);
    return r;
}

} // namespace stcm
