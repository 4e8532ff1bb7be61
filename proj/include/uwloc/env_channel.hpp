// SPDX-License-Identifier: Apache-2.0
//
// uwloc - direct localization in multipath underwater channels with mismatch bounds
// Copyright (C) 2026 The uwloc authors
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

#ifndef UWLOC_ENV_CHANNEL_HPP
#define UWLOC_ENV_CHANNEL_HPP

#include "common.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace uwloc
{
    // Coordinates are (x, y, z) in meters with z the depth below the surface (positive down).

    struct SspPoint
    {
        double depth; // [m]
        double speed; // [m/s]

        bool operator==(const SspPoint &) const = default;
    };

    struct Environment
    {
        std::string name;
        double water_depth = 100.0;               // [m], > 0
        std::vector<SspPoint> ssp;                // piecewise-linear profile spanning [0, water_depth]
        cd surface_reflection = {-1.0, 0.0};      // complex gain per surface bounce, |.| <= 1
        cd bottom_reflection = {0.5, 0.0};        // complex gain per bottom bounce, |.| <= 1
        double absorption_db_per_m = 0.0;         // >= 0
        int ray_budget = 3;                       // number of modeled arrivals R >= 1
    };

    struct Geometry
    {
        std::vector<Vec3> receivers;
        Box volume;
    };

    struct ChannelOptions
    {
        double min_distance = 10.0; // source-receiver distance below this is degenerate [m]
    };

    struct Arrival
    {
        double delay = 0.0;       // [s]
        cd gain = {0.0, 0.0};     // dimensionless
        double path_length = 0.0; // unfolded straight-ray length [m]
        int surface_bounces = 0;
        int bottom_bounces = 0;
    };

    using ArrivalRow = std::vector<Arrival>; // sorted by ascending delay

    struct ArrivalSet
    {
        std::vector<ArrivalRow> rows; // one per receiver

        std::size_t receivers() const { return rows.size(); }
        std::size_t rays() const { return rows.empty() ? 0 : rows.front().size(); }
    };

    // Isovelocity profile helper.
    inline Environment isovelocity_environment(double depth, double speed, int rays)
    {
        Environment env;
        env.name = "isovelocity";
        env.water_depth = depth;
        env.ssp = {{0.0, speed}, {depth, speed}};
        env.ray_budget = rays;
        return env;
    }

    // ============================================================================================
    // Validation
    // ============================================================================================

    // Returns the list of violated invariants; empty means the environment is valid.
    inline std::vector<std::string> validate_environment(const Environment &env)
    {
        std::vector<std::string> errors;
        if (!(env.water_depth > 0.0) || !std::isfinite(env.water_depth))
            errors.emplace_back("water depth must be positive");
        if (env.ssp.size() < 2)
            errors.emplace_back("sound speed profile needs at least two breakpoints");
        else
        {
            for (std::size_t i = 1; i < env.ssp.size(); ++i)
                if (!(env.ssp[i].depth > env.ssp[i - 1].depth))
                {
                    errors.emplace_back("breakpoints not increasing");
                    break;
                }
            const double tol = 1e-9 * std::max(1.0, std::abs(env.water_depth));
            if (std::abs(env.ssp.front().depth) > tol || std::abs(env.ssp.back().depth - env.water_depth) > tol)
                errors.emplace_back("breakpoints must span [0, water_depth]");
        }
        for (const auto &pt : env.ssp)
            if (!(pt.speed > 0.0) || !std::isfinite(pt.speed))
            {
                errors.emplace_back("sound speeds must be positive");
                break;
            }
        if (std::abs(env.surface_reflection) > 1.0 + 1e-12)
            errors.emplace_back("surface reflection magnitude exceeds 1");
        if (std::abs(env.bottom_reflection) > 1.0 + 1e-12)
            errors.emplace_back("bottom reflection magnitude exceeds 1");
        if (!(env.absorption_db_per_m >= 0.0))
            errors.emplace_back("absorption must be non-negative");
        if (env.ray_budget < 1)
            errors.emplace_back("ray budget must be >= 1");
        return errors;
    }

    inline std::vector<std::string> validate_geometry(const Environment &env, const Geometry &geo)
    {
        std::vector<std::string> errors;
        if (geo.receivers.empty())
            errors.emplace_back("at least one receiver is required");
        for (const auto &r : geo.receivers)
            if (r[2] < 0.0 || r[2] > env.water_depth)
            {
                errors.emplace_back("receiver depth outside the water column");
                break;
            }
        if ((geo.volume.hi.array() < geo.volume.lo.array()).any())
            errors.emplace_back("volume bounds are inverted");
        if (geo.volume.lo[2] < 0.0 || geo.volume.hi[2] > env.water_depth)
            errors.emplace_back("volume of interest leaves the water column");
        return errors;
    }

    // ============================================================================================
    // Straight-ray travel time through a depth-stratified profile
    // ============================================================================================

    namespace detail
    {
        inline double speed_at(std::span<const SspPoint> ssp, double z)
        {
            if (z <= ssp.front().depth)
                return ssp.front().speed;
            if (z >= ssp.back().depth)
                return ssp.back().speed;
            auto it = std::upper_bound(ssp.begin(), ssp.end(), z,
                                       [](double v, const SspPoint &p) { return v < p.depth; });
            const auto &b = *it;
            const auto &a = *(it - 1);
            const double t = (z - a.depth) / (b.depth - a.depth);
            return a.speed + t * (b.speed - a.speed);
        }

        // Vertical slowness integral int_a^b dz / c(z) for 0 <= a <= b <= D (physical depths).
        inline double column_slowness(std::span<const SspPoint> ssp, double a, double b)
        {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < ssp.size(); ++i)
            {
                const double z0 = ssp[i].depth, z1 = ssp[i + 1].depth;
                const double u = std::max(a, z0), v = std::min(b, z1);
                if (v <= u)
                    continue;
                const double g = (ssp[i + 1].speed - ssp[i].speed) / (z1 - z0);
                const double cu = ssp[i].speed + g * (u - z0);
                if (g == 0.0)
                    acc += (v - u) / cu;
                else
                    acc += std::log1p(g * (v - u) / cu) / g;
            }
            return acc;
        }

        // int_{za}^{zb} dz / c(fold(z)) with za <= zb on the unfolded (image) depth axis, where
        // fold() mirrors the axis back into [0, D] across the surface and bottom.
        inline double unfolded_slowness(std::span<const SspPoint> ssp, double depth, double za, double zb)
        {
            const auto m_lo = static_cast<long long>(std::floor(za / depth));
            const auto m_hi = static_cast<long long>(std::floor(zb / depth));
            double acc = 0.0;
            for (long long m = m_lo; m <= m_hi; ++m)
            {
                const double layer_lo = static_cast<double>(m) * depth;
                const double u = std::max(za, layer_lo);
                const double v = std::min(zb, layer_lo + depth);
                if (v <= u)
                    continue;
                double fu = u - layer_lo, fv = v - layer_lo;
                if (m % 2 != 0)
                {
                    fu = depth - fu;
                    fv = depth - fv;
                }
                fu = std::clamp(fu, 0.0, depth);
                fv = std::clamp(fv, 0.0, depth);
                acc += column_slowness(ssp, std::min(fu, fv), std::max(fu, fv));
            }
            return acc;
        }

        inline double fold_depth(double z, double depth)
        {
            const double m = std::floor(z / depth);
            double r = z - m * depth;
            if (static_cast<long long>(m) % 2 != 0)
                r = depth - r;
            return std::clamp(r, 0.0, depth);
        }
    } // namespace detail

    // Travel time along the straight segment a -> b: the line integral of 1/c(z). Endpoints may lie
    // on the unfolded image axis; the profile repeats mirrored with period 2 * water depth, where the
    // water depth is the last breakpoint of the profile.
    inline double stratified_delay(std::span<const SspPoint> ssp, const Vec3 &a, const Vec3 &b)
    {
        const double length = (b - a).norm();
        const double depth = ssp.back().depth;
        const double dz = std::abs(b[2] - a[2]);
        if (dz == 0.0)
            return length / detail::speed_at(ssp, detail::fold_depth(a[2], depth));
        const double slowness = detail::unfolded_slowness(ssp, depth, std::min(a[2], b[2]), std::max(a[2], b[2]));
        return length * slowness / dz;
    }

    // ============================================================================================
    // Image-method arrivals
    // ============================================================================================

    namespace detail
    {
        struct Image
        {
            double depth;
            int surface_bounces;
            int bottom_bounces;
        };

        // The two images of order n (n reflections, alternating surface/bottom).
        inline std::vector<Image> images_of_order(double source_depth, double water_depth, int n)
        {
            if (n == 0)
                return {{source_depth, 0, 0}};
            std::vector<Image> out;
            for (int first_is_surface = 1; first_is_surface >= 0; --first_is_surface)
            {
                double z = source_depth;
                int ns = 0, nb = 0;
                bool surface = first_is_surface != 0;
                for (int i = 0; i < n; ++i)
                {
                    if (surface)
                    {
                        z = -z;
                        ++ns;
                    }
                    else
                    {
                        z = 2.0 * water_depth - z;
                        ++nb;
                    }
                    surface = !surface;
                }
                out.push_back({z, ns, nb});
            }
            return out;
        }

        inline cd integer_power(cd base, int n)
        {
            cd out(1.0, 0.0);
            for (int i = 0; i < n; ++i)
                out *= base;
            return out;
        }

        inline double max_speed(std::span<const SspPoint> ssp)
        {
            double c = 0.0;
            for (const auto &p : ssp)
                c = std::max(c, p.speed);
            return c;
        }
    } // namespace detail

    // Arrivals from a source to one receiver, in order of delay, truncated to the ray budget.
    // Images are enumerated by increasing bounce count until no unseen image can beat the R-th
    // shortest delay found so far.
    inline ArrivalRow image_method_arrivals(const Environment &env, const Vec3 &source, const Vec3 &receiver,
                                            const ChannelOptions &opts = {})
    {
        if ((source - receiver).norm() < opts.min_distance)
            throw DegenerateGeometryError("source and receiver closer than the minimum distance");

        const std::span<const SspPoint> ssp(env.ssp);
        const double D = env.water_depth;
        const double horizontal = std::hypot(source[0] - receiver[0], source[1] - receiver[1]);
        const double c_max = detail::max_speed(ssp);
        const auto R = static_cast<std::size_t>(env.ray_budget);

        ArrivalRow candidates;
        for (int n = 0; n < 100000; ++n)
        {
            for (const auto &img : detail::images_of_order(source[2], D, n))
            {
                const Vec3 image_pos(source[0], source[1], img.depth);
                Arrival a;
                a.path_length = (receiver - image_pos).norm();
                a.delay = stratified_delay(ssp, image_pos, receiver);
                a.surface_bounces = img.surface_bounces;
                a.bottom_bounces = img.bottom_bounces;
                const double spreading = 1.0 / a.path_length;
                const double absorption = std::pow(10.0, -env.absorption_db_per_m * a.path_length / 20.0);
                a.gain = detail::integer_power(env.surface_reflection, img.surface_bounces) *
                         detail::integer_power(env.bottom_reflection, img.bottom_bounces) * (spreading * absorption);
                candidates.push_back(a);
            }
            if (candidates.size() >= R)
            {
                std::vector<double> delays;
                delays.reserve(candidates.size());
                for (const auto &c : candidates)
                    delays.push_back(c.delay);
                std::nth_element(delays.begin(), delays.begin() + static_cast<std::ptrdiff_t>(R - 1), delays.end());
                const double next_vertical = static_cast<double>(n) * D; // order n+1 lies >= n*D away
                if (std::hypot(horizontal, next_vertical) / c_max > delays[R - 1])
                    break;
            }
        }

        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Arrival &a, const Arrival &b) { return a.delay < b.delay; });
        candidates.resize(R);
        return candidates;
    }

    inline ArrivalSet channel_arrivals(const Environment &env, std::span<const Vec3> receivers, const Vec3 &source,
                                       const ChannelOptions &opts = {})
    {
        ArrivalSet set;
        set.rows.reserve(receivers.size());
        for (const auto &r : receivers)
            set.rows.push_back(image_method_arrivals(env, source, r, opts));
        return set;
    }

    // Mean over receivers of sum_r |b_rl|^2 at one source position.
    inline double channel_energy(const ArrivalSet &set)
    {
        double total = 0.0;
        for (const auto &row : set.rows)
            for (const auto &a : row)
                total += std::norm(a.gain);
        return set.rows.empty() ? 0.0 : total / static_cast<double>(set.rows.size());
    }

    // Monte Carlo average of a per-position energy over uniform positions in the volume.
    template <typename EnergyFn>
    double average_attenuation_of(const Box &volume, std::size_t sample_count, std::uint64_t seed, EnergyFn &&energy)
    {
        if (sample_count == 0)
            throw std::invalid_argument("sample_count must be >= 1");
        Rng rng(derive_seed(seed, "attenuation", 0));
        CompensatedSum acc;
        for (std::size_t i = 0; i < sample_count; ++i)
            acc.add(energy(uniform_in_box(rng, volume)));
        return acc.value() / static_cast<double>(sample_count);
    }

    // Average CIR attenuation over the volume of interest; the SNR axis is normalized by it.
    inline double average_attenuation(const Environment &env, const Geometry &geo, std::size_t sample_count,
                                      std::uint64_t seed, const ChannelOptions &opts = {})
    {
        return average_attenuation_of(geo.volume, sample_count, seed, [&](const Vec3 &p) {
            return channel_energy(channel_arrivals(env, geo.receivers, p, opts));
        });
    }
} // namespace uwloc

#endif
