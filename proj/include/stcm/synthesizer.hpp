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

// Physics-grounded synthesis: path assembly from targets, clutter and
// interactions, and CFR/CIR rendering over snapshots.
//
// Conventions:
//   f_k = f_c - B/2 + k B/(K-1), k = 0..K-1 (both band edges included)
//   H[r,s,k] = sum_p a_p (f_k/f_c)^alpha_p exp(-j 2 pi f_k tau_p)
//              exp(+j 2 pi fD_p t) a_rx(aoa_p)[r] a_tx(aod_p)[s] + noise
//   ULA steering a(az)[n] = exp(j 2 pi spacing n sin(az))
//   CIR = unitary inverse DFT of each CFR row (energy preserving)

#pragma once

#include "stcm/interaction.hpp"
#include "stcm/parameters.hpp"

#include <unsupported/Eigen/FFT>

#include <cstring>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace stcm {

struct ArrayConfig
{
    int n_elements = 1; // 1 = SISO
    double spacing = 0.5; // wavelengths
    bool operator==(const ArrayConfig &) const = default;

    cplx steering(double azimuth, int n) const
    {
        return std::polar(1.0, kTwoPi * spacing * n * std::sin(azimuth));
    }
};

struct SimConfig
{
    double f_c = 10e9;
    double bandwidth = 1e9;
    int n_subcarriers = 129;
    double dt = 1e-3;
    int n_snapshots = 1;
    Vec3 tx = Vec3::Zero();
    Vec3 rx = Vec3(100.0, 0.0, 0.0);
    ArrayConfig tx_array;
    ArrayConfig rx_array;
    double noise_power = 0.0;
    std::uint64_t seed = 1;
    MultibounceConfig multibounce;
    std::uint64_t library_seed = 7; // class models for fresh targets

    void validate() const
    {
        if (!(f_c > 0.0))
            throw SchemaError("sim.f_c must be > 0");
        if (!(bandwidth > 0.0) || !(bandwidth < 2.0 * f_c))
            throw SchemaError("sim.bandwidth must be in (0, 2 f_c)");
        if (n_subcarriers < 2)
            throw SchemaError("sim.n_subcarriers must be >= 2");
        if (n_snapshots < 1)
            throw SchemaError("sim.n_snapshots must be >= 1");
        if (!(dt >= 0.0))
            throw SchemaError("sim.dt must be >= 0");
        if (tx_array.n_elements < 1 || rx_array.n_elements < 1)
            throw SchemaError("sim array n_elements must be >= 1");
        if (!(noise_power >= 0.0))
            throw SchemaError("sim.noise_power must be >= 0");
    }

    double subcarrier(int k) const
    {
        return f_c - 0.5 * bandwidth + k * bandwidth / static_cast<double>(n_subcarriers - 1);
    }

    bool monostatic() const { return (tx - rx).norm() < 1e-9; }

    std::string canonical() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "f_c=" << f_c << ";B=" << bandwidth << ";K=" << n_subcarriers << ";dt=" << dt
           << ";n=" << n_snapshots << ";tx=" << tx.x() << "," << tx.y() << "," << tx.z() << ";rx=" << rx.x()
           << "," << rx.y() << "," << rx.z() << ";txa=" << tx_array.n_elements << "," << tx_array.spacing
           << ";rxa=" << rx_array.n_elements << "," << rx_array.spacing << ";noise=" << noise_power
           << ";seed=" << seed << ";mb=" << multibounce.pairs << "," << multibounce.loss_db
           << ";lib=" << library_seed;
        return os.str();
    }

    std::uint64_t hash() const { return fnv1a64(canonical()); }
};

/// CFR tensor, row-major [rx element][tx element][subcarrier].
struct Cfr
{
    int n_rx = 1, n_tx = 1, n_k = 2;
    std::vector<cplx> data;

    Cfr() = default;
    Cfr(int r, int s, int k) : n_rx(r), n_tx(s), n_k(k), data(static_cast<std::size_t>(r * s * k)) {}

    cplx &at(int r, int s, int k) { return data[static_cast<std::size_t>((r * n_tx + s) * n_k + k)]; }
    const cplx &at(int r, int s, int k) const { return data[static_cast<std::size_t>((r * n_tx + s) * n_k + k)]; }
    std::span<const cplx> row(int r, int s) const
    {
        return {data.data() + static_cast<std::size_t>((r * n_tx + s) * n_k), static_cast<std::size_t>(n_k)};
    }
    double energy() const
    {
        double e = 0.0;
        for (const auto &x : data)
            e += std::norm(x);
        return e;
    }
    bool operator==(const Cfr &) const = default;
};

struct ChannelSnapshot
{
    double time = 0.0;
    std::vector<PropagationPath> paths;
    Cfr cfr;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

/// Everything needed to assemble paths at any time instant.
struct SceneRealization
{
    std::vector<TargetInstance> targets;
    std::vector<ClutterCluster> clusters;
    int rays_per_cluster = 4;
    std::uint64_t clutter_seed = 0;
    std::vector<Occluder> occluders;
    MultibounceConfig multibounce;
};

inline double los_delay(const SimConfig &cfg) { return (cfg.rx - cfg.tx).norm() / kSpeedOfLight; }

/// Union of LoS, target, clutter and multi-bounce paths after visibility,
/// sorted by delay. Monostatic configurations have no LoS path.
inline std::vector<PropagationPath> assemble(const SceneRealization &scene, const SimConfig &cfg, double t)
{
    std::vector<PropagationPath> paths;
    if (!cfg.monostatic())
    {
        PropagationPath los;
        los.kind = PathKind::LoS;
        los.vertices = {cfg.tx, cfg.rx};
        const double d = (cfg.rx - cfg.tx).norm();
        los.delay = d / kSpeedOfLight;
        los.amplitude = spreading({d}, cfg.f_c);
        los.aod = angles_of(cfg.rx - cfg.tx);
        los.aoa = angles_of(cfg.tx - cfg.rx);
        paths.push_back(std::move(los));
    }
    for (std::size_t i = 0; i < scene.targets.size(); ++i)
    {
        auto tp = target_paths(scene.targets[i].set, scene.targets[i].motion, cfg.tx, cfg.rx, cfg.f_c, t,
                               static_cast<int>(i));
        std::move(tp.begin(), tp.end(), std::back_inserter(paths));
    }
    auto cp = clutter_paths(scene.clusters, cfg.tx, cfg.rx, cfg.f_c, scene.rays_per_cluster, scene.clutter_seed);
    std::move(cp.begin(), cp.end(), std::back_inserter(paths));
    auto mp = multibounce_paths(scene.targets, scene.clusters, cfg.tx, cfg.rx, cfg.f_c, t, scene.multibounce);
    std::move(mp.begin(), mp.end(), std::back_inserter(paths));

    paths = apply_visibility(std::move(paths), scene.occluders);
    std::stable_sort(paths.begin(), paths.end(),
                     [](const PropagationPath &a, const PropagationPath &b) { return a.delay < b.delay; });
    return paths;
}

/// Noise-free CFR of a path set at time t.
inline Cfr render_cfr(std::span<const PropagationPath> paths, const SimConfig &cfg, double t)
{
    const int K = cfg.n_subcarriers, nr = cfg.rx_array.n_elements, ns = cfg.tx_array.n_elements;
    Cfr H(nr, ns, K);
    std::vector<double> freqs(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        freqs[static_cast<std::size_t>(k)] = cfg.subcarrier(k);
    std::vector<cplx> spectrum(static_cast<std::size_t>(K));
    std::vector<cplx> a_rx(static_cast<std::size_t>(nr)), a_tx(static_cast<std::size_t>(ns));
    for (const auto &p : paths)
    {
        const cplx base = p.amplitude * std::polar(1.0, kTwoPi * p.doppler * t);
        for (int k = 0; k < K; ++k)
        {
            const double f = freqs[static_cast<std::size_t>(k)];
            double phase = -kTwoPi * f * p.delay;
            cplx term = base * std::polar(1.0, phase);
            if (p.freq_exponent != 0.0)
                term *= std::pow(f / cfg.f_c, p.freq_exponent);
            spectrum[static_cast<std::size_t>(k)] = term;
        }
        for (int r = 0; r < nr; ++r)
            a_rx[static_cast<std::size_t>(r)] = cfg.rx_array.steering(p.aoa.azimuth, r);
        for (int s = 0; s < ns; ++s)
            a_tx[static_cast<std::size_t>(s)] = cfg.tx_array.steering(p.aod.azimuth, s);
        for (int r = 0; r < nr; ++r)
            for (int s = 0; s < ns; ++s)
            {
                const cplx w = a_rx[static_cast<std::size_t>(r)] * a_tx[static_cast<std::size_t>(s)];
                cplx *out = &H.at(r, s, 0);
                for (int k = 0; k < K; ++k)
                    out[k] += w * spectrum[static_cast<std::size_t>(k)];
            }
    }
    return H;
}

/// Adds circular complex Gaussian noise of the given per-element power.
inline void add_noise(Cfr &H, double power, Rng &rng)
{
    if (power <= 0.0)
        return;
    const double sigma = std::sqrt(0.5 * power);
    for (auto &x : H.data)
        x += cplx(sigma * standard_normal(rng), sigma * standard_normal(rng));
}

/// Unitary inverse DFT of one CFR row: h[n] = K^-1/2 sum_k H[k] e^{+j2pi kn/K}.
inline std::vector<cplx> cir_from_cfr(std::span<const cplx> row)
{
    const std::size_t K = row.size();
    std::vector<cplx> in(row.begin(), row.end()), out;
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    fft.inv(out, in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(K));
    for (auto &x : out)
        x *= scale;
    return out;
}

// ---- Scene instantiation ------------------------------------------------

using ClutterTable = std::map<ScenarioClass, ClutterParams>;

inline ClutterParams clutter_for(ScenarioClass scenario, const ClutterTable *table)
{
    if (table)
        if (auto it = table->find(scenario); it != table->end())
            return it->second;
    return default_clutter_params(scenario);
}

namespace detail {

inline std::array<double, 4> component_rates(const TargetSpec &t, const ClassModel &model)
{
    const PartType wanted = t.cls == TargetClass::vehicle ? PartType::wheel : PartType::rotor;
    for (const auto &c : t.components)
        if (c.part == wanted)
            return {c.rotation_hz, c.rotation_hz, c.rotation_hz, c.rotation_hz};
    return model.part_rates;
}

inline McsSet fresh_set(const TargetSpec &t, const ClassModel &model, const SimConfig &cfg)
{
    const Mat3 body = heading_rotation(t.heading);
    Vec3 view = bistatic_view(t.position, cfg.tx, cfg.rx);
    if ((t.position - cfg.tx).norm() < 1e-9)
        view = Vec3::UnitX();
    return model.view_set(body.transpose() * view);
}

} // namespace detail

/// Theta describing a scene as-is: first target's centers as seen from the
/// configured stations, its motion, and the scenario's clutter parameters.
inline ParameterVector default_parameters(const SemanticScene &scene, const SimConfig &cfg,
                                          const ClutterTable *table = nullptr)
{
    DecodedParameters d;
    d.clutter = clutter_for(scene.scenario, table);
    d.multibounce = cfg.multibounce;
    if (!scene.targets.empty())
    {
        const TargetSpec &t = scene.targets.front();
        const ClassModel model = build_class_model(t.cls, cfg.library_seed);
        d.centers = detail::fresh_set(t, model, cfg).centers;
        d.speed = t.velocity.norm();
        d.heading = t.heading;
        d.part_rates = detail::component_rates(t, model);
    }
    else
    {
        d.centers = build_class_model(TargetClass::vehicle, cfg.library_seed).view_set(Vec3::UnitX()).centers;
    }
    return encode_parameters(d);
}

/// Builds the scene realization from a scene and theta. Theta drives the
/// first target (centers, speed along its scene velocity direction or its
/// heading, part rates), the clutter and the interaction settings; other
/// targets take their class model's view.
inline SceneRealization instantiate(const SemanticScene &scene, const ParameterVector &theta, const SimConfig &cfg,
                                    const ClutterTable *table = nullptr)
{
    const int rays = clutter_for(scene.scenario, table).rays_per_cluster;
    const DecodedParameters d = decode_parameters(theta, rays);
    SceneRealization real;
    for (std::size_t i = 0; i < scene.targets.size(); ++i)
    {
        const TargetSpec &t = scene.targets[i];
        const ClassModel model = build_class_model(t.cls, cfg.library_seed);
        TargetInstance inst;
        inst.motion = {t.position, t.velocity, t.heading, class_parts(t.cls, detail::component_rates(t, model))};
        if (i == 0)
        {
            inst.set = to_mcs_set(d, t.cls);
            inst.motion.heading = d.heading;
            const Vec3 dir = t.velocity.norm() > 0.0 ? Vec3(t.velocity.normalized())
                                                     : Vec3(std::cos(d.heading), std::sin(d.heading), 0.0);
            inst.motion.velocity = d.speed * dir;
            inst.motion.parts = class_parts(t.cls, d.part_rates);
        }
        else
        {
            inst.set = detail::fresh_set(t, model, cfg);
        }
        real.targets.push_back(std::move(inst));
    }
    real.rays_per_cluster = d.clutter.rays_per_cluster;
    real.clutter_seed = cfg.seed;
    real.clusters = sample_clusters(d.clutter, cfg.tx, cfg.rx, cfg.seed);
    real.multibounce = d.multibounce;
    for (const auto &b : scene.background)
        if (b.acts_as_occluder)
            real.occluders.emplace_back(b.box, material_loss_db(b.material));
    return real;
}

/// Renders snapshots t_i = i * dt of a realization. Snapshot i draws its
/// noise from substream i of the master seed, so the output does not
/// depend on `threads`.
inline std::vector<ChannelSnapshot> render_snapshots(const SceneRealization &real, const SimConfig &cfg,
                                                     unsigned threads = 1)
{
    cfg.validate();
    std::vector<ChannelSnapshot> out(static_cast<std::size_t>(cfg.n_snapshots));
    const std::uint64_t hash = cfg.hash();
    parallel_for(out.size(), threads, [&](std::size_t i) {
        ChannelSnapshot &snap = out[i];
        snap.time = static_cast<double>(i) * cfg.dt;
        snap.paths = assemble(real, cfg, snap.time);
        snap.cfr = render_cfr(snap.paths, cfg, snap.time);
        snap.seed = stream_seed(cfg.seed, Stream::noise, i);
        snap.config_hash = hash;
        Rng rng(snap.seed);
        add_noise(snap.cfr, cfg.noise_power, rng);
    });
    return out;
}

/// Full pipeline: scene + theta (or a fresh theta from the scene) -> snapshots.
inline std::vector<ChannelSnapshot> simulate(const SemanticScene &scene, const std::optional<ParameterVector> &theta,
                                             const SimConfig &cfg, unsigned threads = 1,
                                             const ClutterTable *table = nullptr)
{
    cfg.validate();
    const ParameterVector th = theta ? *theta : default_parameters(scene, cfg, table);
    return render_snapshots(instantiate(scene, th, cfg, table), cfg, threads);
}

// ---- Snapshot file ------------------------------------------------------
//
// Little-endian. Header: "STCM1" (5 bytes), config hash (u64), K (u32),
// rx elements (u32), tx elements (u32), snapshots (u32). Then for every
// snapshot: time (f64), followed by the CFR as complex64 (f32 re, f32 im),
// rx-major: [rx][tx][k].

inline constexpr char kSnapshotMagic[5] = {'S', 'T', 'C', 'M', '1'};

namespace detail {

template <typename T>
void put_le(std::ostream &os, T v)
{
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char *>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream &is)
{
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char *>(b), sizeof(T)))
        throw FormatError("snapshot file: truncated");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace detail

inline void write_snapshots(std::ostream &os, std::span<const ChannelSnapshot> snaps)
{
    const Cfr &first = snaps.empty() ? Cfr() : snaps.front().cfr;
    os.write(kSnapshotMagic, 5);
    detail::put_le<std::uint64_t>(os, snaps.empty() ? 0 : snaps.front().config_hash);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(first.n_k));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(first.n_rx));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(first.n_tx));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(snaps.size()));
    for (const auto &s : snaps)
    {
        detail::put_le<double>(os, s.time);
        for (const auto &x : s.cfr.data)
        {
            detail::put_le<float>(os, static_cast<float>(x.real()));
            detail::put_le<float>(os, static_cast<float>(x.imag()));
        }
    }
}

struct SnapshotFile
{
    std::uint64_t config_hash = 0;
    std::vector<double> times;
    std::vector<Cfr> cfrs;
};

inline SnapshotFile read_snapshots(std::istream &is)
{
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kSnapshotMagic, 5) != 0)
        throw VersionMismatch("snapshot file: bad magic (expected STCM1)");
    SnapshotFile f;
    f.config_hash = detail::get_le<std::uint64_t>(is);
    const auto K = detail::get_le<std::uint32_t>(is);
    const auto nr = detail::get_le<std::uint32_t>(is);
    const auto ns = detail::get_le<std::uint32_t>(is);
    const auto n = detail::get_le<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        f.times.push_back(detail::get_le<double>(is));
        Cfr H(static_cast<int>(nr), static_cast<int>(ns), static_cast<int>(K));
        for (auto &x : H.data)
        {
            const float re = detail::get_le<float>(is);
            const float im = detail::get_le<float>(is);
            x = cplx(re, im);
        }
        f.cfrs.push_back(std::move(H));
    }
    return f;
}

/// CSV path table: snapshot,time,kind,delay_s,amp_re,amp_im,doppler_hz,
/// aod_az,aod_el,aoa_az,aoa_el,target,center,cluster,ray
inline void write_paths_csv(std::ostream &os, std::span<const ChannelSnapshot> snaps)
{
    os << "snapshot,time,kind,delay_s,amp_re,amp_im,doppler_hz,aod_az,aod_el,aoa_az,aoa_el,target,center,cluster,"
          "ray\n";
    std::ostringstream line;
    line.precision(17);
    for (std::size_t i = 0; i < snaps.size(); ++i)
        for (const auto &p : snaps[i].paths)
        {
            line.str("");
            line << i << ',' << snaps[i].time << ',' << to_string(p.kind) << ',' << p.delay << ','
                 << p.amplitude.real() << ',' << p.amplitude.imag() << ',' << p.doppler << ',' << p.aod.azimuth << ','
                 << p.aod.elevation << ',' << p.aoa.azimuth << ',' << p.aoa.elevation << ',' << p.target << ','
                 << p.center << ',' << p.cluster << ',' << p.ray << '\n';
            os << line.str();
        }
}

} // namespace stcm
