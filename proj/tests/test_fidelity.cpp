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

#include "stcm/fidelity.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace stcm;

namespace {

std::vector<double> uniform_sample(Rng &rng, std::size_t n, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto &x : v)
        x = u(rng);
    return v;
}

SampleSet gaussian_set(Rng &rng, std::size_t n, std::size_t d, double shift = 0.0)
{
    SampleSet s(n, std::vector<double>(d));
    for (auto &row : s)
        for (auto &x : row)
            x = shift + standard_normal(rng);
    return s;
}

std::vector<ExtractedCenter> random_centers(Rng &rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ExtractedCenter> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({100e-9 + 50e-9 * u(rng), u(rng) * 2 - 1, std::polar(0.1 + u(rng), kTwoPi * u(rng))});
    return out;
}

} // namespace

TEST(Wasserstein1d, Examples)
{
    const std::vector<double> a{0.0, 1.0}, b{1.0, 2.0};
    EXPECT_DOUBLE_EQ(wasserstein_1d(a, b), 1.0);
    EXPECT_DOUBLE_EQ(wasserstein_1d(std::vector<double>{0.0}, std::vector<double>{3.0}), 3.0);
    EXPECT_EQ(wasserstein_1d(a, a), 0.0);
    EXPECT_THROW(wasserstein_1d(std::vector<double>{}, a), EmptySample);
}

TEST(Wasserstein1d, MatchesTransportLp)
{
    Rng rng(1);
    std::uniform_int_distribution<int> size(1, 8);
    for (int trial = 0; trial < 60; ++trial)
    {
        const auto a = uniform_sample(rng, static_cast<std::size_t>(size(rng)), -5, 5);
        const auto b = uniform_sample(rng, static_cast<std::size_t>(size(rng)), -5, 5);
        for (double p : {1.0, 2.0})
            EXPECT_NEAR(wasserstein_1d(a, b, p), oracle::transport_lp(a, b, p), 1e-9) << trial << " p=" << p;
    }
}

TEST(Wasserstein1d, MetricProperties)
{
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto a = uniform_sample(rng, 7), b = uniform_sample(rng, 11), c = uniform_sample(rng, 5);
        auto perm = a;
        std::shuffle(perm.begin(), perm.end(), rng);
        EXPECT_EQ(wasserstein_1d(a, perm), 0.0);
        EXPECT_NEAR(wasserstein_1d(a, b), wasserstein_1d(b, a), 1e-15);
        EXPECT_LE(wasserstein_1d(a, c), wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9);
    }
}

TEST(SlicedWasserstein, Properties)
{
    Rng rng(3);
    const SampleSet A = gaussian_set(rng, 60, 5), B = gaussian_set(rng, 40, 5, 0.7), C = gaussian_set(rng, 50, 5, -0.4);
    EXPECT_EQ(sliced_wasserstein(A, A, 32, 1.0, 9), 0.0);
    EXPECT_EQ(sliced_wasserstein(A, B, 32, 1.0, 9), sliced_wasserstein(A, B, 32, 1.0, 9));
    EXPECT_NEAR(sliced_wasserstein(A, B, 32, 1.0, 9), sliced_wasserstein(B, A, 32, 1.0, 9), 1e-15);
    EXPECT_LE(sliced_wasserstein(A, C, 32, 1.0, 9),
              sliced_wasserstein(A, B, 32, 1.0, 9) + sliced_wasserstein(B, C, 32, 1.0, 9) + 1e-9);
    SampleSet As = A, Bs = B;
    const std::vector<double> shift{3.0, -1.0, 0.5, 10.0, -7.0};
    for (auto *S : {&As, &Bs})
        for (auto &row : *S)
            for (std::size_t k = 0; k < 5; ++k)
                row[k] += shift[k];
    EXPECT_NEAR(sliced_wasserstein(As, Bs, 32, 1.0, 9), sliced_wasserstein(A, B, 32, 1.0, 9), 1e-12);
    EXPECT_GT(sliced_wasserstein(A, B, 32, 1.0, 9), 0.1);
    const SampleSet bad(3, std::vector<double>(4));
    EXPECT_THROW(sliced_wasserstein(A, bad, 8, 1.0, 1), DimensionMismatch);
    EXPECT_THROW(sliced_wasserstein(A, {}, 8, 1.0, 1), EmptySample);
}

TEST(SlicedWasserstein, OneDimensionEqualsExact)
{
    Rng rng(4);
    const SampleSet A = gaussian_set(rng, 30, 1), B = gaussian_set(rng, 20, 1, 1.0);
    std::vector<double> a, b;
    for (auto &r : A)
        a.push_back(r[0]);
    for (auto &r : B)
        b.push_back(r[0]);
    EXPECT_NEAR(sliced_wasserstein(A, B, 5, 1.0, 2), wasserstein_1d(a, b), 1e-12);
}

TEST(MarginalWasserstein, PerDimension)
{
    const SampleSet A{{0, 10}, {1, 10}}, B{{1, 10}, {2, 12}};
    const auto d = marginal_wasserstein(A, B);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d[0], 1.0);
    EXPECT_DOUBLE_EQ(d[1], 1.0);
}

TEST(KolmogorovSmirnov, Examples)
{
    Rng rng(5);
    const auto a = uniform_sample(rng, 50);
    const KsResult same = ks_two_sample(a, a);
    EXPECT_EQ(same.D, 0.0);
    EXPECT_EQ(same.p, 1.0);
    const auto b = uniform_sample(rng, 40, 10.0, 11.0);
    const KsResult apart = ks_two_sample(a, b);
    EXPECT_EQ(apart.D, 1.0);
    EXPECT_LT(apart.p, 1e-10);
    EXPECT_THROW(ks_two_sample(a, std::vector<double>{}), EmptySample);
}

TEST(KolmogorovSmirnov, StatisticAgainstBruteForce)
{
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial)
    {
        std::vector<double> a = uniform_sample(rng, 13), b = uniform_sample(rng, 21);
        for (std::size_t i = 0; i < 4; ++i)
            b[i] = a[i]; // ties across samples
        double D = 0.0;
        for (double x : a)
            for (double t : {x})
            {
                const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; })) / 13.0;
                const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; })) / 21.0;
                D = std::max(D, std::abs(fa - fb));
            }
        for (double t : b)
        {
            const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; })) / 13.0;
            const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; })) / 21.0;
            D = std::max(D, std::abs(fa - fb));
        }
        EXPECT_NEAR(ks_two_sample(a, b).D, D, 1e-15);
    }
}

TEST(KolmogorovSmirnov, SeriesAndMonotonicity)
{
    // reference: the alternating series summed far past convergence
    auto series = [](double lambda) {
        double q = 0.0;
        for (int k = 1; k <= 2000; ++k)
            q += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        return q;
    };
    for (double lambda = 0.3; lambda < 3.0; lambda += 0.01)
        EXPECT_NEAR(kolmogorov_q(lambda), series(lambda), 1e-10) << lambda;
    double prev = 1.0;
    for (double lambda = 0.0; lambda < 4.0; lambda += 0.001)
    {
        const double q = kolmogorov_q(lambda);
        EXPECT_GE(q, 0.0);
        EXPECT_LE(q, 1.0);
        EXPECT_LE(q, prev + 1e-15) << lambda;
        prev = q;
    }
}

TEST(KolmogorovSmirnov, FalseRejectionNearNominal)
{
    Rng rng(7);
    int rejected = 0;
    const int trials = 3000;
    for (int t = 0; t < trials; ++t)
        rejected += ks_two_sample(uniform_sample(rng, 100), uniform_sample(rng, 100)).p < 0.05;
    const double rate = static_cast<double>(rejected) / trials;
    EXPECT_GT(rate, 0.03);
    EXPECT_LT(rate, 0.07);
}

TEST(Extraction, ZeroChannelIsEmpty)
{
    const SimConfig cfg = oracle::extraction_config();
    const Cfr H(cfg.rx_array.n_elements, 1, cfg.n_subcarriers);
    EXPECT_TRUE(extract_centers(H, cfg, 5).empty());
}

TEST(Extraction, GridAlignedSinglePathIsExact)
{
    for (int n_rx : {1, 4})
    {
        SimConfig cfg = oracle::extraction_config();
        cfg.rx_array.n_elements = n_rx;
        ExtractionOptions opt;
        opt.delay_origin = 250e-9;
        const auto grid = angle_grid(cfg.rx_array);
        PropagationPath p;
        p.delay = delay_cell(cfg, opt.delay_origin, 37);
        p.amplitude = std::polar(0.37, 1.1);
        p.aoa.azimuth = grid[grid.size() / 3];
        const std::vector<PropagationPath> paths{p};
        const auto est = extract_centers(render_cfr(paths, cfg, 0.0), cfg, 5, opt);
        ASSERT_EQ(est.size(), 1u) << n_rx;
        EXPECT_EQ(est[0].delay, p.delay);
        EXPECT_LT(std::abs(est[0].amplitude - p.amplitude) / std::abs(p.amplitude), 1e-6);
        EXPECT_EQ(est[0].angle, n_rx > 1 ? p.aoa.azimuth : 0.0);
    }
}

TEST(Extraction, TwoPathsFourOverBApart)
{
    SimConfig cfg = oracle::extraction_config();
    cfg.rx_array.n_elements = 1;
    ExtractionOptions opt;
    opt.delay_origin = 0.0;
    const double B = cfg.bandwidth;
    std::vector<PropagationPath> paths(2);
    paths[0].delay = 20.3 / B;
    paths[0].amplitude = 1.0;
    paths[1].delay = paths[0].delay + 4.0 / B;
    paths[1].amplitude = std::polar(0.8, 2.0);
    const auto est = extract_centers(render_cfr(paths, cfg, 0.0), cfg, 2, opt);
    ASSERT_EQ(est.size(), 2u);
    const double cell = 1.0 / (4.0 * B);
    for (const auto &p : paths)
        EXPECT_TRUE(std::any_of(est.begin(), est.end(), [&](auto &e) { return std::abs(e.delay - p.delay) <= cell; }));
}

TEST(Extraction, RecoversTenCentersAtThirtyDb)
{
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s)
    {
        const auto c = oracle::constructed_target(static_cast<std::uint64_t>(s), 30.0);
        total += oracle::recovered_fraction(c, extract_centers(c.H, c.cfg, 10, c.opt));
    }
    EXPECT_GE(total / seeds, 0.8);
}

TEST(Extraction, RecoversSynthesizedTargetAtThirtyDb)
{
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s)
    {
        const auto c = oracle::synthesized_target(static_cast<std::uint64_t>(s), 30.0);
        ASSERT_EQ(c.truth.size(), 10u);
        total += oracle::recovered_fraction(c, extract_centers(c.H, c.cfg, 10, c.opt));
    }
    EXPECT_GE(total / seeds, 0.8);
}

TEST(Hungarian, MatchesBruteForce)
{
    Rng rng(8);
    std::uniform_int_distribution<int> size(1, 7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto r = static_cast<std::size_t>(size(rng)), c = static_cast<std::size_t>(size(rng));
        std::vector<std::vector<double>> cost(r, std::vector<double>(c));
        for (auto &row : cost)
            for (auto &x : row)
                x = trial % 5 == 0 ? std::floor(u(rng) / 3) : u(rng); // integer costs force ties
        const auto assign = hungarian(cost);
        ASSERT_EQ(assign.size(), r);
        double sum = 0.0;
        std::vector<int> used;
        for (std::size_t i = 0; i < r; ++i)
            if (assign[i] >= 0)
            {
                sum += cost[i][static_cast<std::size_t>(assign[i])];
                used.push_back(assign[i]);
            }
        EXPECT_EQ(used.size(), std::min(r, c));
        std::sort(used.begin(), used.end());
        EXPECT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
        EXPECT_NEAR(sum, oracle::brute_assignment(cost), 1e-9);
    }
}

TEST(Tms, Examples)
{
    Rng rng(9);
    const auto ref = random_centers(rng, 10);
    const TmsScales s{1e-9, 0.25, 6.0};
    EXPECT_DOUBLE_EQ(tms(ref, ref, s), 1.0);
    EXPECT_EQ(tms({}, ref, s), 0.0);
    EXPECT_EQ(tms(ref, {}, s), 0.0);
    // a subset matched exactly scores matched / max size
    EXPECT_DOUBLE_EQ(tms(std::span(ref).first(4), ref, s), 0.4);
}

TEST(Tms, PermutationInvariantAndBounded)
{
    Rng rng(10);
    const TmsScales s{1e-9, 0.25, 6.0};
    for (int trial = 0; trial < 100; ++trial)
    {
        auto a = random_centers(rng, 1 + trial % 10), b = random_centers(rng, 1 + (trial / 10) % 10);
        const double t = tms(a, b, s);
        EXPECT_GE(t, 0.0);
        EXPECT_LE(t, 1.0);
        std::shuffle(a.begin(), a.end(), rng);
        std::shuffle(b.begin(), b.end(), rng);
        EXPECT_NEAR(tms(a, b, s), t, 1e-12);
    }
}

TEST(Tms, DecreasesWithPerturbation)
{
    Rng rng(11);
    const TmsScales s{1e-9, 0.25, 6.0};
    double prev = 1.0;
    for (double sigma : {0.0, 0.2, 0.5, 1.0, 2.0})
    {
        double mean = 0.0;
        for (int seed = 0; seed < 200; ++seed)
        {
            const auto ref = random_centers(rng, 10);
            auto est = ref;
            for (auto &e : est)
            {
                e.delay += sigma * s.delay * standard_normal(rng);
                e.angle += sigma * s.angle * 0.1 * standard_normal(rng);
                e.amplitude *= std::pow(10.0, sigma * s.amp_db * standard_normal(rng) / 20.0);
            }
            mean += tms(est, ref, s) / 200.0;
        }
        EXPECT_LE(mean, prev + 1e-12) << sigma;
        prev = mean;
    }
    EXPECT_LT(prev, 0.5);
}

TEST(Tms, SisoDropsAngle)
{
    SimConfig cfg;
    EXPECT_EQ(tms_scales(cfg).angle, 0.0);
    const std::vector<ExtractedCenter> a{{1e-7, 0.0, 1.0}}, b{{1e-7, 1.2, 1.0}};
    EXPECT_DOUBLE_EQ(tms(a, b, tms_scales(cfg)), 1.0);
}

TEST(Identify, ExamplesAndBruteForce)
{
    SimConfig cfg;
    cfg.rx = cfg.tx;
    cfg.rx_array = {8, 0.5};
    ObservationGeometry g{cfg, Vec3(-40, 10, 0), 0.3, 0.0};
    std::vector<McsSet> library = synth_library(TargetClass::vehicle, 6, 3);
    const auto uav = synth_library(TargetClass::uav, 6, 3);
    library.insert(library.end(), uav.begin(), uav.end());

    const auto truth = project_reference(library[8], g);
    const Identification id = identify(truth, library, g);
    EXPECT_EQ(id.cls, TargetClass::uav);
    EXPECT_DOUBLE_EQ(id.score, 1.0);
    EXPECT_EQ(id.index, 8u);

    EXPECT_EQ(identify(truth, std::span(library).first(1), g).index, 0u);
    EXPECT_THROW(identify(truth, std::span<const McsSet>{}, g), EmptyLibrary);

    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto est = random_centers(rng, 6);
        double best = -1.0;
        for (const auto &set : library)
            best = std::max(best, tms(est, project_reference(set, g), tms_scales(cfg)));
        EXPECT_EQ(identify(est, library, g).score, best);
    }

    // ties go to the lowest index
    const ProjectedLibrary twice{{TargetClass::uav, truth}, {TargetClass::vehicle, truth}};
    EXPECT_EQ(identify(truth, twice, tms_scales(cfg)).index, 0u);
}

TEST(Ccdf, Properties)
{
    const std::vector<double> v{3, 1, 2, 2, 5};
    const auto c = ccdf(v);
    EXPECT_EQ(c.front().value, 1.0);
    EXPECT_EQ(c.front().exceedance, 1.0);
    for (std::size_t i = 1; i < c.size(); ++i)
    {
        EXPECT_LT(c[i - 1].value, c[i].value);
        EXPECT_GE(c[i - 1].exceedance, c[i].exceedance);
    }
    EXPECT_DOUBLE_EQ(c[1].exceedance, 0.8); // P(x >= 2)
    EXPECT_DOUBLE_EQ(exceedance(v, 2.5), 0.4);
    EXPECT_THROW(ccdf(std::vector<double>{}), EmptySample);
}

TEST(Threshold, CalibrationExample)
{
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
    const double t = calibrate_threshold(v, 0.95);
    EXPECT_EQ(t, 5.0);
    EXPECT_DOUBLE_EQ(exceedance(v, t), 0.96);
    Rng rng(13);
    for (int n = 1; n < 300; n += 7)
    {
        const auto s = uniform_sample(rng, static_cast<std::size_t>(n));
        EXPECT_GE(exceedance(s, calibrate_threshold(s, 0.95)), 0.95) << n;
    }
}

TEST(Collaborative, Contracts)
{
    const std::vector<std::vector<double>> same{{0.1, 0.5, 0.9}, {0.2, 0.3, 0.4}};
    const auto p = collaborative_pvalues(same, same);
    ASSERT_EQ(p.size(), 2u);
    for (double x : p)
        EXPECT_EQ(x, 1.0);
    EXPECT_THROW(collaborative_pvalues({{0.5}}, {{0.5}}), InsufficientSamples);
    EXPECT_THROW(collaborative_pvalues(same, {{0.5, 0.6}}), DimensionMismatch);
}

TEST(Collaborative, IdenticalChannelsGiveOne)
{
    SimConfig cfg;
    cfg.rx = cfg.tx;
    cfg.rx_array = {4, 0.5};
    const auto library = synth_library(TargetClass::vehicle, 4, 1);
    std::vector<std::vector<StationObservation>> instances(3);
    for (std::size_t i = 0; i < instances.size(); ++i)
        for (int st = 0; st < 3; ++st)
        {
            ObservationGeometry g{cfg, Vec3(40.0 + 5 * st, 10.0 * static_cast<double>(i), 0), 0.5 * st, 0.0};
            const ClassModel model = build_class_model(TargetClass::vehicle, 1);
            SceneRealization real;
            real.targets.push_back({library[i], model.motion(g.position, g.heading)});
            const Cfr H = render_cfr(assemble(real, cfg, 0.0), cfg, 0.0);
            instances[i].push_back({H, H, g, {}});
        }
    const auto p = collaborative_eval(instances, library, 10, 2);
    ASSERT_EQ(p.size(), 3u);
    for (double x : p)
        EXPECT_EQ(x, 1.0);
    instances[0].resize(1);
    EXPECT_THROW(collaborative_eval(instances, library, 10), InsufficientSamples);
}

TEST(Report, JsonAndCsv)
{
    FidelityReport r;
    r.sliced_wasserstein = 0.25;
    r.ccdf_curve = ccdf(std::vector<double>{0.1, 0.2});
    r.ks.push_back({0.3, 0.7});
    const auto j = r.to_json();
    EXPECT_EQ(j["sliced_wasserstein"], 0.25);
    EXPECT_EQ(j["ks"][0]["p"], 0.7);
    std::ostringstream os;
    write_ccdf_csv(os, r.ccdf_curve);
    EXPECT_EQ(os.str(), "value,exceedance\n0.10000000000000001,1\n0.20000000000000001,0.5\n");
}
