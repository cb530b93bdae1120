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

#include "stcm/clutter.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace stcm;

namespace {

constexpr double kC = 299792458.0;

double bistatic_range(const Vec3 &p, const Vec3 &tx, const Vec3 &rx) { return (p - tx).norm() + (p - rx).norm(); }

/// Asymptotic one-sample Kolmogorov-Smirnov p-value against a closed-form CDF.
double ks_one_sample_p(std::vector<double> x, const std::function<double(double)> &cdf)
{
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 200; ++k)
        q += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(q, 0.0, 1.0);
}

ClutterParams params(int n, double zeta = 3.0)
{
    ClutterParams p;
    p.n_clusters = n;
    p.zeta = zeta;
    return p;
}

} // namespace

TEST(SampleClusters, EmptyWhenNoClusters)
{
    EXPECT_TRUE(sample_clusters(params(0), Vec3::Zero(), Vec3(100, 0, 0), 1).empty());
}

TEST(SampleClusters, SingleClusterTakesTotalPower)
{
    ClutterParams p = params(1, 0.0);
    p.total_power = 3.7e-8;
    const auto c = sample_clusters(p, Vec3::Zero(), Vec3(100, 0, 0), 4);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].power, p.total_power);
    EXPECT_EQ(c[0].excess_delay, 0.0);
}

TEST(SampleClusters, RawDelaysAreExponential)
{
    ClutterParams p = params(10000);
    p.r_tau = 3.0;
    p.sigma_tau = 100e-9;
    Rng rng(2024);
    const auto d = sample_raw_delays(p, rng);
    const double mean = 300e-9;
    const double pval = ks_one_sample_p(d, [&](double x) { return 1.0 - std::exp(-x / mean); });
    EXPECT_GT(pval, 0.01);
    // a wrong mean is rejected by the same oracle
    EXPECT_LT(ks_one_sample_p(d, [&](double x) { return 1.0 - std::exp(-x / (1.2 * mean)); }), 0.01);
}

TEST(SampleClusters, DelaysSortedShiftedAndPowerConserved)
{
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial)
    {
        ClutterParams p = params(1 + trial % 25, 0.5 * (trial % 7));
        p.total_power = std::pow(10.0, -5.0 - trial % 6);
        p.rays_per_cluster = 1 + trial % 5;
        const Vec3 tx = test::random_vec(rng, -50, 50);
        const Vec3 rx = trial % 4 == 0 ? tx : Vec3(test::random_vec(rng, -50, 50));
        const auto clusters = sample_clusters(p, tx, rx, static_cast<std::uint64_t>(trial));
        ASSERT_EQ(clusters.size(), static_cast<std::size_t>(p.n_clusters));
        EXPECT_EQ(clusters.front().excess_delay, 0.0);
        double sum = 0.0;
        for (std::size_t n = 0; n < clusters.size(); ++n)
        {
            EXPECT_GE(clusters[n].power, 0.0);
            if (n > 0)
            {
                EXPECT_GE(clusters[n].excess_delay, clusters[n - 1].excess_delay);
            }
            EXPECT_EQ(clusters[n].scatterers.size(), static_cast<std::size_t>(p.rays_per_cluster));
            sum += clusters[n].power;
        }
        EXPECT_NEAR(sum, p.total_power, 1e-9 * p.total_power);

        const auto paths = clutter_paths(clusters, tx, rx, 10e9, p.rays_per_cluster, 5);
        double path_power = 0.0;
        const double los = (tx - rx).norm() / kC;
        for (const auto &path : paths)
        {
            path_power += std::norm(path.amplitude);
            EXPECT_EQ(path.doppler, 0.0);
            EXPECT_EQ(path.kind, PathKind::Clutter);
            EXPECT_GE(path.delay, los);
            EXPECT_NEAR(path.delay, bistatic_range(path.vertices[1], tx, rx) / kC, 1e-12);
        }
        EXPECT_NEAR(path_power, p.total_power, 1e-9 * p.total_power);
    }
}

TEST(SampleClusters, Deterministic)
{
    const ClutterParams p = default_clutter_params(ScenarioClass::urban_street);
    const Vec3 tx(0, 0, 10), rx(100, 0, 10);
    EXPECT_EQ(sample_clusters(p, tx, rx, 77), sample_clusters(p, tx, rx, 77));
    EXPECT_NE(sample_clusters(p, tx, rx, 77), sample_clusters(p, tx, rx, 78));
}

TEST(SampleClusters, ScenarioTableOrdering)
{
    const auto urban = default_clutter_params(ScenarioClass::urban_street);
    const auto open = default_clutter_params(ScenarioClass::open_field);
    EXPECT_GT(urban.n_clusters, open.n_clusters);
    EXPECT_GT(urban.asa, open.asa);
    EXPECT_GT(urban.sigma_tau, open.sigma_tau);
    for (auto s : {ScenarioClass::urban_street, ScenarioClass::highway, ScenarioClass::indoor,
                   ScenarioClass::open_field, ScenarioClass::other})
        EXPECT_NO_THROW(default_clutter_params(s).validate());
}

TEST(ClutterParams, SetAndValidate)
{
    ClutterParams p;
    for (auto name : ClutterParams::field_names)
        EXPECT_TRUE(p.set(name, 2.0)) << name;
    EXPECT_FALSE(p.set("density", 1.0));
    EXPECT_NO_THROW(p.validate());
    p.r_tau = 1.0;
    EXPECT_THROW(p.validate(), SchemaError);
    p = ClutterParams{};
    p.rays_per_cluster = 0;
    EXPECT_THROW(p.validate(), SchemaError);
    p = ClutterParams{};
    p.n_clusters = -1;
    EXPECT_THROW(p.validate(), SchemaError);
}

TEST(PlaceScatterer, ZeroExcessOnSegment)
{
    const Vec3 tx(0, 0, 0), rx(100, 0, 0);
    const Vec3 p = place_scatterer(0.0, angles_of(tx - rx), tx, rx);
    EXPECT_NEAR(p.y(), 0.0, 1e-12);
    EXPECT_NEAR(p.z(), 0.0, 1e-12);
    EXPECT_GT(p.x(), 0.0);
    EXPECT_LT(p.x(), 100.0);
    EXPECT_THROW(place_scatterer(0.0, AzEl{kPi / 2, 0.0}, tx, rx), NoIntersection);
}

TEST(PlaceScatterer, BroadsideExample)
{
    const Vec3 tx(0, 0, 0), rx(100, 0, 0);
    const double range = 100.0 + kC * 100e-9;
    // oracle: bisection on s + sqrt(100^2 + s^2) = range along +y from rx
    double lo = 0.0, hi = range;
    for (int i = 0; i < 200; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        (mid + std::hypot(100.0, mid) < range ? lo : hi) = mid;
    }
    const Vec3 p = place_scatterer(100e-9, AzEl{kPi / 2, 0.0}, tx, rx);
    EXPECT_GT(p.y(), 0.0);
    EXPECT_NEAR((p - Vec3(100, lo, 0)).norm(), 0.0, 1e-9);
    EXPECT_NEAR(bistatic_range(p, tx, rx), 129.98, 0.005);
}

TEST(PlaceScatterer, RoundTripProperty)
{
    Rng rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int placed = 0;
    for (int trial = 0; trial < 2000; ++trial)
    {
        const Vec3 tx = test::random_vec(rng, -100, 100), rx = test::random_vec(rng, -100, 100);
        const double excess = 1e-9 + 500e-9 * u(rng);
        const AzEl aoa{kPi * (2 * u(rng) - 1), 0.5 * kPi * (2 * u(rng) - 1) * 0.99};
        try
        {
            const Vec3 p = place_scatterer(excess, aoa, tx, rx);
            EXPECT_NEAR(bistatic_range(p, tx, rx) / kC - (tx - rx).norm() / kC, excess, 1e-12);
            // p lies on the arrival ray
            EXPECT_NEAR((p - rx).normalized().dot(direction_from_angles(aoa.azimuth, aoa.elevation)), 1.0, 1e-9);
            ++placed;
        }
        catch (const NoIntersection &)
        {
        }
    }
    EXPECT_GT(placed, 1900); // a ray from a focus meets the ellipsoid except in degenerate cases
}

TEST(ClutterPaths, FourRaysShareClusterPower)
{
    ClutterParams p = params(1, 0.0);
    p.rays_per_cluster = 4;
    p.total_power = 1e-6;
    const Vec3 tx(0, 0, 0), rx(80, 0, 0);
    const auto clusters = sample_clusters(p, tx, rx, 3);
    const auto paths = clutter_paths(clusters, tx, rx, 10e9, 4, 3);
    ASSERT_EQ(paths.size(), 4u);
    for (const auto &path : paths)
        EXPECT_NEAR(std::norm(path.amplitude), 0.25e-6, 1e-18);
}

TEST(ClutterPaths, MonostaticStaysOutsideMinimumRange)
{
    const ClutterParams p = default_clutter_params(ScenarioClass::indoor);
    const auto clusters = sample_clusters(p, Vec3::Zero(), Vec3::Zero(), 12);
    for (const auto &path : clutter_paths(clusters, Vec3::Zero(), Vec3::Zero(), 10e9, p.rays_per_cluster, 12))
        EXPECT_GE(path.delay * kC, 2.0 * kMonostaticClutterRange - 1e-9);
}
