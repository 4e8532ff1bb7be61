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

#ifndef UWLOC_COMMON_HPP
#define UWLOC_COMMON_HPP

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace uwloc
{
    using cd = std::complex<double>;
    using Vec3 = Eigen::Vector3d;

    inline constexpr double pi = 3.14159265358979323846;

    // ============================================================================================
    // Error types. The CLI maps each family onto a distinct exit code.
    // ============================================================================================

    struct ConfigError : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    struct DegenerateGeometryError : std::domain_error
    {
        using std::domain_error::domain_error;
    };

    struct StructureError : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    struct NumericalError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct EstimationError : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    struct IoError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // ============================================================================================
    // Axis-aligned box (volume of interest)
    // ============================================================================================

    struct Box
    {
        Vec3 lo = Vec3::Zero();
        Vec3 hi = Vec3::Zero();

        bool contains(const Vec3 &p, double tol = 1e-12) const
        {
            return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
        }
        Vec3 center() const { return 0.5 * (lo + hi); }
        Vec3 extent() const { return hi - lo; }
        double diagonal() const { return extent().norm(); }
        Vec3 clamp(const Vec3 &p) const { return p.cwiseMax(lo).cwiseMin(hi); }
    };

    // ============================================================================================
    // Divergence value with an explicit "infinite" state
    // ============================================================================================

    // Chi-square type quantities are either a finite non-negative real or +infinity (condition
    // violated / disjoint support). The infinite state is a value, not an exception, so bound curves
    // can carry "vacuous" points.
    class Divergence
    {
    public:
        constexpr Divergence() = default;
        static constexpr Divergence finite(double v) { return Divergence(v); }
        static constexpr Divergence infinite() { return Divergence(std::numeric_limits<double>::infinity()); }

        constexpr bool is_finite() const { return value_ < std::numeric_limits<double>::infinity(); }
        constexpr bool is_infinite() const { return !is_finite(); }
        constexpr double value() const { return value_; } // +inf when infinite

    private:
        constexpr explicit Divergence(double v) : value_(v) {}
        double value_ = 0.0;
    };

    // ============================================================================================
    // Numerics helpers
    // ============================================================================================

    // Neumaier compensated summation, reduced in insertion order.
    class CompensatedSum
    {
    public:
        void add(double x)
        {
            const double t = sum_ + x;
            if (std::abs(sum_) >= std::abs(x))
                comp_ += (sum_ - t) + x;
            else
                comp_ += (x - t) + sum_;
            sum_ = t;
        }
        double value() const { return sum_ + comp_; }

    private:
        double sum_ = 0.0;
        double comp_ = 0.0;
    };

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

    // ============================================================================================
    // Reproducible seeding
    // ============================================================================================

    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // Seed for one unit of work: hash(master_seed, stage, index). No RNG state is ever shared
    // between trials, so results do not depend on scheduling.
    inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index)
    {
        std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a
        for (unsigned char c : stage)
        {
            h ^= c;
            h *= 0x100000001B3ull;
        }
        return splitmix64(splitmix64(master ^ h) + index);
    }

    using Rng = std::mt19937_64;

    // Circular complex Gaussian with E|z|^2 = variance.
    inline cd circular_normal(Rng &rng, double variance)
    {
        std::normal_distribution<double> n(0.0, std::sqrt(0.5 * variance));
        const double re = n(rng);
        const double im = n(rng);
        return {re, im};
    }

    inline Vec3 uniform_in_box(Rng &rng, const Box &box)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vec3 p;
        for (int a = 0; a < 3; ++a)
            p[a] = box.lo[a] + u(rng) * (box.hi[a] - box.lo[a]);
        return p;
    }

    // ============================================================================================
    // Worker pool
    // ============================================================================================

    // Runs fn(i) for i in [0, count) on `workers` threads. fn must only write to slot i of its
    // outputs. If any call throws, the exception of the lowest failing index is rethrown.
    inline void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)> &fn)
    {
        if (workers <= 1 || count <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::mutex mu;
        std::size_t failed_at = count;
        std::exception_ptr failure;
        auto body = [&] {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard lock(mu);
                    if (i < failed_at)
                    {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        };
        const auto n = static_cast<std::size_t>(workers) < count ? static_cast<std::size_t>(workers) : count;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n; ++w)
            pool.emplace_back(body);
        for (auto &t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }
} // namespace uwloc

#endif
