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

// Hand-rolled generators and dense reference computations shared by the test suites.

#ifndef UWLOC_TESTS_SUPPORT_HPP
#define UWLOC_TESTS_SUPPORT_HPP

#include <uwloc/uwloc.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace gen
{
    using uwloc::cd;
    using uwloc::Vec3;

    class Gen
    {
    public:
        explicit Gen(std::uint64_t seed) : rng_(seed) {}

        double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
        int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
        double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
        cd complex_normal() { return {normal(), normal()}; }
        double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
        bool coin() { return integer(0, 1) == 1; }
        uwloc::Rng &engine() { return rng_; }

        Eigen::VectorXcd complex_vector(int n)
        {
            Eigen::VectorXcd v(n);
            for (int i = 0; i < n; ++i)
                v[i] = complex_normal();
            return v;
        }

        uwloc::FrequencyResponseStack stack(int L, int N, double scale = 1.0)
        {
            Eigen::MatrixXcd h(L, N);
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < N; ++k)
                    h(l, k) = scale * complex_normal();
            return uwloc::FrequencyResponseStack(std::move(h));
        }

        // Piecewise-linear profile with `points` breakpoints spanning [0, depth].
        uwloc::Environment environment(double depth, int points, int rays)
        {
            uwloc::Environment env;
            env.name = "generated";
            env.water_depth = depth;
            std::vector<double> z{0.0, depth};
            for (int i = 2; i < points; ++i)
                z.push_back(uniform(0.05 * depth, 0.95 * depth));
            std::sort(z.begin(), z.end());
            z.erase(std::unique(z.begin(), z.end()), z.end());
            for (double d : z)
                env.ssp.push_back({d, uniform(1470.0, 1540.0)});
            env.surface_reflection = std::polar(uniform(0.3, 1.0), uniform(-3.0, 3.0));
            env.bottom_reflection = std::polar(uniform(0.1, 1.0), uniform(-3.0, 3.0));
            env.absorption_db_per_m = uniform(0.0, 0.005);
            env.ray_budget = rays;
            return env;
        }

        Vec3 point(const uwloc::Box &box)
        {
            return {uniform(box.lo[0], box.hi[0]), uniform(box.lo[1], box.hi[1]), uniform(box.lo[2], box.hi[2])};
        }

        // Positive-definite real matrix with eigenvalues in [lo, hi].
        Eigen::MatrixXd spd(int n, double lo, double hi)
        {
            Eigen::MatrixXd A(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    A(i, j) = normal();
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
            const Eigen::MatrixXd Q = qr.householderQ();
            Eigen::VectorXd d(n);
            for (int i = 0; i < n; ++i)
                d[i] = uniform(lo, hi);
            return Q * d.asDiagonal() * Q.transpose();
        }

    private:
        uwloc::Rng rng_;
    };

    inline double rel_err(double got, double want)
    {
        return std::abs(got - want) / std::max(std::abs(want), 1e-300);
    }

    // Real Gaussian samples x = chol(S) z, row-major n x d.
    inline uwloc::SampleSet gaussian_samples(const Eigen::MatrixXd &S, std::size_t n, std::uint64_t seed)
    {
        const Eigen::MatrixXd C = S.llt().matrixL();
        const auto d = static_cast<std::size_t>(S.rows());
        uwloc::Rng rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> coords(n * d);
        Eigen::VectorXd z(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = 0; j < d; ++j)
                z[static_cast<Eigen::Index>(j)] = g(rng);
            const Eigen::VectorXd x = C * z;
            for (std::size_t j = 0; j < d; ++j)
                coords[i * d + j] = x[static_cast<Eigen::Index>(j)];
        }
        return uwloc::SampleSet(d, std::move(coords));
    }

    // Dense Gaussian log-likelihood -log det S - x^H S^{-1} x for S = s2 H H^H + v2 I.
    inline double dense_loglikelihood(const uwloc::Observation &obs, const uwloc::FrequencyResponseStack &h, double s2,
                                      double v2)
    {
        const Eigen::MatrixXcd S = uwloc::build_covariance(h, s2, v2);
        Eigen::LLT<Eigen::MatrixXcd> llt(S);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < S.rows(); ++i)
            logdet += 2.0 * std::log(std::real(llt.matrixLLT()(i, i)));
        const Eigen::VectorXcd y = llt.solve(obs.x);
        return -logdet - std::real(obs.x.dot(y));
    }

    // Small experiment used by the harness, CLI and reproducibility tests.
    inline uwloc::ExperimentConfig small_config()
    {
        uwloc::ExperimentConfig c;
        c.environment_Q = uwloc::isovelocity_environment(100.0, 1500.0, 3);
        c.environment_Q.name = "Q";
        c.environment_P = c.environment_Q;
        c.environment_P.name = "P";
        c.environment_P.ssp = {{0.0, 1510.0}, {50.0, 1495.0}, {100.0, 1490.0}};
        c.geometry.receivers = {Vec3(-120, -100, 20), Vec3(130, -90, 70), Vec3(110, 140, 35), Vec3(-100, 120, 85)};
        c.geometry.volume.lo = Vec3(-10, -10, 40);
        c.geometry.volume.hi = Vec3(10, 10, 60);
        c.N = 16;
        c.Ts = 0.004;
        c.snr_db = {0.0, 20.0};
        c.trials = 40;
        c.k_nn = 3;
        c.seed = 7;
        c.attenuation_samples = 200;
        c.grid_step = Vec3::Constant(5.0);
        c.source = Vec3(0, 0, 50);
        c.training_size = 256;
        c.net.hidden = {16};
        c.net.epochs = 3;
        c.net.batch_size = 32;
        return c;
    }

    // Fresh directory under the system temp dir, removed on destruction.
    class TempDir
    {
    public:
        explicit TempDir(const std::string &name)
            : path_(std::filesystem::temp_directory_path() / ("uwloc-test-" + name + "-" + std::to_string(::getpid())))
        {
            std::filesystem::remove_all(path_);
            std::filesystem::create_directories(path_);
        }
        ~TempDir()
        {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
        const std::filesystem::path &path() const { return path_; }

    private:
        std::filesystem::path path_;
    };
} // namespace gen

#endif
