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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace stcm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---- Errors -------------------------------------------------------------

/// Base of every error raised by the library. The `kind()` string is stable
/// and is what the CLI prints in front of the message.
class Error : public std::runtime_error
{
  public:
    Error(std::string kind, const std::string &what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string &kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

#define STCM_DEFINE_ERROR(Name, Base)                                         \
    class Name : public Base                                                  \
    {                                                                         \
      public:                                                                 \
        explicit Name(const std::string &what) : Base(#Name, what) {}         \
                                                                              \
      protected:                                                              \
        Name(std::string kind, const std::string &what)                       \
            : Base(std::move(kind), what) {}                                  \
    };

class ValidationError : public Error
{
  public:
    using Error::Error;
};

STCM_DEFINE_ERROR(SchemaError, ValidationError)
STCM_DEFINE_ERROR(DanglingReference, ValidationError)
STCM_DEFINE_ERROR(DimensionMismatch, Error)
STCM_DEFINE_ERROR(UnknownPartId, Error)
STCM_DEFINE_ERROR(DegenerateGeometry, Error)
STCM_DEFINE_ERROR(UnsupportedClass, Error)
STCM_DEFINE_ERROR(NoIntersection, Error)
STCM_DEFINE_ERROR(ZeroLegLength, Error)
STCM_DEFINE_ERROR(TooFewSamples, Error)
STCM_DEFINE_ERROR(DegenerateModel, Error)
STCM_DEFINE_ERROR(VersionMismatch, Error)
STCM_DEFINE_ERROR(EmptySample, Error)
STCM_DEFINE_ERROR(EmptyLibrary, Error)
STCM_DEFINE_ERROR(InsufficientSamples, Error)
STCM_DEFINE_ERROR(TransportError, Error)
STCM_DEFINE_ERROR(ParseExhausted, Error)
STCM_DEFINE_ERROR(OfflineMode, Error)
STCM_DEFINE_ERROR(FormatError, Error)

#undef STCM_DEFINE_ERROR

// ---- Geometry helpers ---------------------------------------------------

/// Rotation about +z by `heading` radians (body -> world).
inline Mat3 heading_rotation(double heading)
{
    return Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
}

/// Unit direction from azimuth/elevation (azimuth from +x towards +y).
inline Vec3 direction_from_angles(double azimuth, double elevation)
{
    return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
            std::sin(elevation)};
}

struct AzEl
{
    double azimuth = 0.0;
    double elevation = 0.0;
    bool operator==(const AzEl &) const = default;
};

inline AzEl angles_of(const Vec3 &direction)
{
    const double n = direction.norm();
    if (n == 0.0)
        return {};
    return {std::atan2(direction.y(), direction.x()), std::asin(std::clamp(direction.z() / n, -1.0, 1.0))};
}

/// Angle between two (not necessarily unit) vectors, robust near 0 and pi.
inline double angle_between(const Vec3 &a, const Vec3 &b)
{
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline double wrap_angle(double a)
{
    a = std::remainder(a, kTwoPi);
    return a <= -kPi ? a + kTwoPi : a;
}

// ---- Seeded streams -----------------------------------------------------

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` of `master`. Counter-based, so the result does
/// not depend on how many other streams were drawn before.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Tags for the top-level substreams of a master seed.
enum class Stream : std::uint64_t
{
    library = 1,
    clutter = 2,
    clutter_phase = 3,
    noise = 4,
    generator = 5,
    projection = 6,
    protocol = 7,
};

inline std::uint64_t stream_seed(std::uint64_t master, Stream s, std::uint64_t index = 0)
{
    return stream_seed(stream_seed(master, static_cast<std::uint64_t>(s)), index);
}

using Rng = std::mt19937_64;

inline double uniform_open_closed(Rng &rng) // (0, 1]
{
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng &rng)
{
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// ---- Hashing ------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- Parallel helper ----------------------------------------------------

/// Runs body(i) for i in [0, n) on up to `threads` workers using static
/// contiguous chunks. Results must be written to per-index slots only.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w)
        {
            pool.emplace_back([&, w] {
                try
                {
                    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                    for (std::size_t i = lo; i < hi; ++i)
                        body(i);
                }
                catch (...)
                {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace stcm
