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

#ifndef UWLOC_LOCALIZERS_HPP
#define UWLOC_LOCALIZERS_HPP

#include "signal_model.hpp"

#include <array>
#include <vector>

namespace uwloc
{
    // ============================================================================================
    // Search grid
    // ============================================================================================

    // Regular grid over a box. The per-axis node count is round(extent / step) + 1 and nodes sit on
    // both faces, so the effective spacing may differ slightly from the requested step.
    struct GridSpec
    {
        Box box;
        Vec3 step = Vec3::Constant(1.0);
        int refine_factor = 0;  // > 1: second pass on a grid `refine_factor` times finer around the argmax
        bool interpolate = true; // per-axis parabolic peak interpolation around the final argmax

        std::array<int, 3> counts() const
        {
            std::array<int, 3> n{};
            for (int a = 0; a < 3; ++a)
            {
                if (!(step[a] > 0.0))
                    throw std::invalid_argument("GridSpec: steps must be positive");
                const double extent = box.hi[a] - box.lo[a];
                n[a] = std::max(1, static_cast<int>(std::lround(extent / step[a])) + 1);
            }
            return n;
        }

        Vec3 spacing() const
        {
            const auto n = counts();
            Vec3 s;
            for (int a = 0; a < 3; ++a)
                s[a] = n[a] > 1 ? (box.hi[a] - box.lo[a]) / (n[a] - 1) : 0.0;
            return s;
        }

        std::size_t size() const
        {
            const auto n = counts();
            return static_cast<std::size_t>(n[0]) * n[1] * n[2];
        }

        // Linear index (ix * ny + iy) * nz + iz.
        Vec3 node(std::size_t idx) const
        {
            const auto n = counts();
            const Vec3 s = spacing();
            const auto iz = static_cast<int>(idx % n[2]);
            const auto iy = static_cast<int>((idx / n[2]) % n[1]);
            const auto ix = static_cast<int>(idx / (static_cast<std::size_t>(n[2]) * n[1]));
            return {box.lo[0] + ix * s[0], box.lo[1] + iy * s[1], box.lo[2] + iz * s[2]};
        }

        // RMSE of rounding a uniformly distributed position to the nearest node.
        double quantization_floor() const
        {
            const Vec3 s = spacing();
            return std::sqrt(s.squaredNorm() / 12.0);
        }
    };

    // ============================================================================================
    // Concentrated log-likelihood
    // ============================================================================================

    // Gaussian log-likelihood of x for a candidate response h(p), up to a p-independent constant:
    //   sum_k sigma_s2 |h^(k)^H x^(k)|^2 / (sigma_v2 (sigma_v2 + sigma_s2 |h^(k)|^2))
    //         - log(sigma_s2 |h^(k)|^2 + sigma_v2)
    // Each per-frequency block inverse is a rank-one (Sherman-Morrison) correction of I / sigma_v2.
    inline double concentrated_loglikelihood(const Observation &obs, const FrequencyResponseStack &candidate,
                                             double sigma_s2, double sigma_v2)
    {
        if (candidate.receivers() != obs.L || candidate.bins() != obs.N)
            throw std::invalid_argument("concentrated_loglikelihood: shape mismatch");
        CompensatedSum acc;
        const auto &h = candidate.matrix();
        for (int k = 0; k < obs.N; ++k)
        {
            cd proj(0.0, 0.0);
            double energy = 0.0;
            for (int l = 0; l < obs.L; ++l)
            {
                proj += std::conj(h(l, k)) * obs.at(l, k);
                energy += std::norm(h(l, k));
            }
            const double denom = sigma_v2 + sigma_s2 * energy;
            acc.add(sigma_s2 * std::norm(proj) / (sigma_v2 * denom) - std::log(denom));
        }
        return acc.value();
    }

    inline double concentrated_loglikelihood(const Observation &obs, const Environment &env,
                                             std::span<const Vec3> receivers, const Vec3 &candidate,
                                             const Eigen::VectorXd &omega, double sigma_s2, double sigma_v2,
                                             const ChannelOptions &opts = {})
    {
        return concentrated_loglikelihood(obs, frequency_response_stack(env, receivers, candidate, omega, opts),
                                          sigma_s2, sigma_v2);
    }

    namespace detail
    {
        // Vertex offset of the parabola through (-1, fm), (0, f0), (+1, fp), in [-1/2, 1/2];
        // zero when the three points are not strictly concave.
        inline double parabolic_offset(double fm, double f0, double fp)
        {
            const double curvature = fm - 2.0 * f0 + fp;
            if (!(curvature < 0.0))
                return 0.0;
            return std::clamp(0.5 * (fm - fp) / curvature, -0.5, 0.5);
        }

        // Argmax over a dense nx*ny*nz value array (lowest index wins ties), then parabolic
        // refinement along each axis. Returns the fractional node coordinates.
        inline Vec3 peak_of(std::span<const double> values, const std::array<int, 3> &n, bool interpolate)
        {
            std::size_t best = 0;
            for (std::size_t i = 1; i < values.size(); ++i)
                if (values[i] > values[best])
                    best = i;
            const int iz = static_cast<int>(best % n[2]);
            const int iy = static_cast<int>((best / n[2]) % n[1]);
            const int ix = static_cast<int>(best / (static_cast<std::size_t>(n[2]) * n[1]));
            Vec3 frac(ix, iy, iz);
            if (!interpolate)
                return frac;
            const std::array<int, 3> at{ix, iy, iz};
            const std::array<std::size_t, 3> stride{static_cast<std::size_t>(n[1]) * n[2],
                                                    static_cast<std::size_t>(n[2]), 1};
            for (int a = 0; a < 3; ++a)
            {
                if (at[a] == 0 || at[a] == n[a] - 1)
                    continue;
                frac[a] += parabolic_offset(values[best - stride[a]], values[best], values[best + stride[a]]);
            }
            return frac;
        }
    } // namespace detail

    // ============================================================================================
    // Maximum-likelihood grid search
    // ============================================================================================

    // Grid-search ML localizer for a presumed environment. Replica responses of every node are
    // computed once; `set_noise` precomputes the per-node weights for a signal/noise level, after
    // which the locate functions are const and safe to call concurrently.
    //
    // Replicas are stored in blocks of `block` nodes, split into real and imaginary planes,
    // [block][k][l][node], so the inner loop runs over contiguous nodes. Batches of observations
    // are scored block by block to keep the replica block in cache. The value of a node does not
    // depend on the batch it was scored in.
    class MlGridLocalizer
    {
    public:
        static constexpr std::size_t block = 64;
        static constexpr std::size_t batch = 16;

        MlGridLocalizer(Environment env, std::vector<Vec3> receivers, Eigen::VectorXd omega, GridSpec grid,
                        ChannelOptions opts = {}, int workers = 1)
            : env_(std::move(env)), receivers_(std::move(receivers)), omega_(std::move(omega)),
              grid_(std::move(grid)), opts_(opts)
        {
            L_ = receivers_.size();
            N_ = static_cast<std::size_t>(omega_.size());
            nodes_ = grid_.size();
            blocks_ = (nodes_ + block - 1) / block;
            re_.assign(blocks_ * N_ * L_ * block, 0.0);
            im_.assign(re_.size(), 0.0);
            energy_.assign(blocks_ * N_ * block, 0.0);
            parallel_for(nodes_, workers, [&](std::size_t i) {
                const auto stack = frequency_response_stack(env_, receivers_, grid_.node(i), omega_, opts_);
                const std::size_t b = i / block, n = i % block;
                for (std::size_t k = 0; k < N_; ++k)
                {
                    for (std::size_t l = 0; l < L_; ++l)
                    {
                        const cd h = stack.matrix()(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
                        re_[((b * N_ + k) * L_ + l) * block + n] = h.real();
                        im_[((b * N_ + k) * L_ + l) * block + n] = h.imag();
                    }
                    energy_[(b * N_ + k) * block + n] = stack.energy(static_cast<int>(k));
                }
            });
        }

        const GridSpec &grid() const { return grid_; }
        const Environment &environment() const { return env_; }
        std::size_t nodes() const { return nodes_; }

        void set_noise(double sigma_s2, double sigma_v2)
        {
            if (!(sigma_s2 >= 0.0) || !(sigma_v2 > 0.0))
                throw std::invalid_argument("MlGridLocalizer: need sigma_s2 >= 0 and sigma_v2 > 0");
            sigma_s2_ = sigma_s2;
            sigma_v2_ = sigma_v2;
            weight_.assign(energy_.size(), 0.0);
            // padding nodes can never win
            offset_.assign(blocks_ * block, -std::numeric_limits<double>::infinity());
            for (std::size_t i = 0; i < nodes_; ++i)
            {
                const std::size_t b = i / block, n = i % block;
                CompensatedSum c;
                for (std::size_t k = 0; k < N_; ++k)
                {
                    const double denom = sigma_v2 + sigma_s2 * energy_[(b * N_ + k) * block + n];
                    weight_[(b * N_ + k) * block + n] = sigma_s2 / (sigma_v2 * denom);
                    c.add(-std::log(denom));
                }
                offset_[i] = c.value();
            }
            ready_ = true;
        }

        // Objective value at every grid node (linear grid order).
        std::vector<double> objective(const Observation &obs) const
        {
            std::vector<double> values(blocks_ * block);
            evaluate(std::span<const Observation>(&obs, 1), values.data());
            values.resize(nodes_);
            return values;
        }

        Vec3 locate(const Observation &obs) const { return locate_batch(std::span<const Observation>(&obs, 1)).front(); }

        std::vector<Vec3> locate_batch(std::span<const Observation> obs) const
        {
            std::vector<Vec3> out;
            out.reserve(obs.size());
            const std::size_t stride = blocks_ * block;
            std::vector<double> values(batch * stride);
            for (std::size_t lo = 0; lo < obs.size(); lo += batch)
            {
                const std::size_t count = std::min(batch, obs.size() - lo);
                evaluate(obs.subspan(lo, count), values.data());
                for (std::size_t j = 0; j < count; ++j)
                    out.push_back(finish(obs[lo + j], std::span<const double>(values.data() + j * stride, nodes_)));
            }
            return out;
        }

    private:
        void require_ready(const Observation &obs) const
        {
            if (!ready_)
                throw std::logic_error("MlGridLocalizer: set_noise() must be called before locating");
            if (static_cast<std::size_t>(obs.L) != L_ || static_cast<std::size_t>(obs.N) != N_)
                throw std::invalid_argument("MlGridLocalizer: observation shape differs from the replica shape");
        }

        // values[j * blocks_ * block + node] for each observation j of the batch
        void evaluate(std::span<const Observation> obs, double *values) const
        {
            const std::size_t stride = blocks_ * block;
            std::vector<double> xr(obs.size() * N_ * L_), xi(xr.size());
            for (std::size_t j = 0; j < obs.size(); ++j)
            {
                require_ready(obs[j]);
                for (std::size_t k = 0; k < N_; ++k)
                    for (std::size_t l = 0; l < L_; ++l)
                    {
                        const cd x = obs[j].at(static_cast<int>(l), static_cast<int>(k));
                        xr[(j * N_ + k) * L_ + l] = x.real();
                        xi[(j * N_ + k) * L_ + l] = x.imag();
                    }
            }
            constexpr int lane = 8; // nodes kept in registers at once
            using Lane = Eigen::Array<double, lane, 1>;
            alignas(64) double acc[block];
            for (std::size_t b = 0; b < blocks_; ++b)
            {
                const double *R = re_.data() + b * N_ * L_ * block;
                const double *I = im_.data() + b * N_ * L_ * block;
                const double *W = weight_.data() + b * N_ * block;
                for (std::size_t j = 0; j < obs.size(); ++j)
                {
                    std::copy_n(offset_.data() + b * block, block, acc);
                    const double *xrj = xr.data() + j * N_ * L_;
                    const double *xij = xi.data() + j * N_ * L_;
                    for (std::size_t k = 0; k < N_; ++k)
                    {
                        const double *w = W + k * block;
                        for (std::size_t n0 = 0; n0 < block; n0 += lane)
                        {
                            Lane zr = Lane::Zero(), zi = Lane::Zero();
                            for (std::size_t l = 0; l < L_; ++l)
                            {
                                // conj(h) x
                                const double a = xrj[k * L_ + l], c = xij[k * L_ + l];
                                const Eigen::Map<const Lane> hr(R + (k * L_ + l) * block + n0);
                                const Eigen::Map<const Lane> hi(I + (k * L_ + l) * block + n0);
                                zr += hr * a + hi * c;
                                zi += hr * c - hi * a;
                            }
                            Eigen::Map<Lane>(acc + n0) += Eigen::Map<const Lane>(w + n0) * (zr.square() + zi.square());
                        }
                    }
                    std::copy_n(acc, block, values + j * stride + b * block);
                }
            }
        }

        Vec3 finish(const Observation &obs, std::span<const double> values) const
        {
            const auto n = grid_.counts();
            const Vec3 s = grid_.spacing();
            if (grid_.refine_factor <= 1)
            {
                const Vec3 frac = detail::peak_of(values, n, grid_.interpolate);
                return grid_.box.clamp(grid_.box.lo + frac.cwiseProduct(s));
            }

            // Second pass: finer grid over +-1 coarse step around the coarse argmax.
            const Vec3 coarse = detail::peak_of(values, n, false);
            const Vec3 center = grid_.box.lo + coarse.cwiseProduct(s);
            GridSpec fine;
            fine.box.lo = grid_.box.clamp(center - s);
            fine.box.hi = grid_.box.clamp(center + s);
            for (int a = 0; a < 3; ++a)
                fine.step[a] = s[a] > 0.0 ? s[a] / grid_.refine_factor : 1.0;
            const auto fn = fine.counts();
            const Vec3 fs = fine.spacing();
            std::vector<double> fine_values(fine.size());
            for (std::size_t i = 0; i < fine_values.size(); ++i)
                fine_values[i] = concentrated_loglikelihood(obs, env_, receivers_, fine.node(i), omega_, sigma_s2_,
                                                            sigma_v2_, opts_);
            const Vec3 frac = detail::peak_of(fine_values, fn, grid_.interpolate);
            return grid_.box.clamp(fine.box.lo + frac.cwiseProduct(fs));
        }

        Environment env_;
        std::vector<Vec3> receivers_;
        Eigen::VectorXd omega_;
        GridSpec grid_;
        ChannelOptions opts_;
        std::size_t L_ = 0, N_ = 0;
        std::size_t nodes_ = 0, blocks_ = 0;
        std::vector<double> re_, im_;  // [block][k][l][node]
        std::vector<double> energy_;  // [block][k][node]
        std::vector<double> weight_;  // [block][k][node]
        std::vector<double> offset_;  // [block][node]
        double sigma_s2_ = 0.0, sigma_v2_ = 1.0;
        bool ready_ = false;
    };

    // One-shot convenience wrapper; builds the replica table on every call.
    inline Vec3 grid_search_ml(const Observation &obs, const Environment &env, std::span<const Vec3> receivers,
                               const Eigen::VectorXd &omega, const GridSpec &grid, double sigma_s2, double sigma_v2,
                               const ChannelOptions &opts = {})
    {
        MlGridLocalizer loc(env, std::vector<Vec3>(receivers.begin(), receivers.end()), omega, grid, opts);
        loc.set_noise(sigma_s2, sigma_v2);
        return loc.locate(obs);
    }
} // namespace uwloc

#endif
