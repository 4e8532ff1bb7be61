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

#ifndef UWLOC_CSD_ESTIMATOR_HPP
#define UWLOC_CSD_ESTIMATOR_HPP

#include "common.hpp"
#include "kd_tree.hpp"

#include <string>
#include <vector>

namespace uwloc
{
    // M points in R^d, row-major.
    class SampleSet
    {
    public:
        SampleSet() = default;
        SampleSet(std::size_t dim, std::string label = {}) : dim_(dim), label_(std::move(label))
        {
            if (dim_ == 0)
                throw std::invalid_argument("SampleSet: dimension must be >= 1");
        }
        SampleSet(std::size_t dim, std::vector<double> coords, std::string label = {})
            : dim_(dim), coords_(std::move(coords)), label_(std::move(label))
        {
            if (dim_ == 0 || coords_.size() % dim_ != 0)
                throw std::invalid_argument("SampleSet: coordinate count is not a multiple of the dimension");
        }

        void push_back(std::span<const double> p)
        {
            if (p.size() != dim_)
                throw std::invalid_argument("SampleSet: point has the wrong dimension");
            coords_.insert(coords_.end(), p.begin(), p.end());
        }
        void push_back(const Vec3 &p)
        {
            const double v[3] = {p[0], p[1], p[2]};
            push_back(std::span<const double>(v, 3));
        }

        std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
        std::size_t dim() const { return dim_; }
        const std::string &label() const { return label_; }
        std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
        std::span<const double> coords() const { return coords_; }
        std::vector<double> &mutable_coords() { return coords_; }

    private:
        std::size_t dim_ = 0;
        std::vector<double> coords_;
        std::string label_;
    };

    // Distance from `query` to its k-th nearest neighbor in `points` (exact). With `exclude_self`,
    // one point at distance exactly zero (the query itself) is skipped.
    inline double knn_radius(const SampleSet &points, std::span<const double> query, int k, bool exclude_self)
    {
        if (k < 1)
            throw std::invalid_argument("knn_radius: k must be >= 1");
        const std::size_t need = static_cast<std::size_t>(k) + (exclude_self ? 1 : 0);
        if (points.size() < need)
            throw EstimationError("knn_radius: not enough points for k");
        KdTree tree(points.coords(), points.dim());
        auto d2 = tree.knn_squared(query, need);
        if (exclude_self && !d2.empty() && d2.front() == 0.0)
            d2.erase(d2.begin());
        return std::sqrt(d2[static_cast<std::size_t>(k) - 1]);
    }

    struct CsdEstimate
    {
        std::size_t n = 0;               // samples from P
        std::size_t m = 0;               // samples from Q
        int k = 0;
        std::size_t d = 0;
        double raw = 0.0;                // may be negative
        double clamped = 0.0;            // max(raw, 0), used in bounds
        std::size_t excluded_points = 0; // P points dropped because their own k-NN radius was zero
    };

    // k-NN plug-in estimate of chi^2(P || Q) from X ~ P (n points) and Y ~ Q (m points):
    //   (k-1)/k * (1/n) sum_i m nu_k(X_i)^d / ((n-1) rho_k(X_i)^d) - 1,
    // rho_k the k-NN radius of X_i among the other X, nu_k its k-NN radius among Y. The factor
    // (k-1)/k removes the ratio bias of the k-NN density estimates.
    //
    // `paired` declares that X_i and Y_i were produced from the same random draws. The twin Y_i is
    // then left out of X_i's search in Y (and m becomes m-1), which keeps the Y neighbors of X_i
    // independent of it.
    inline CsdEstimate estimate_csd(const SampleSet &samples_P, const SampleSet &samples_Q, int k, bool paired = false)
    {
        if (k < 2)
            throw EstimationError("estimate_csd: k must be >= 2");
        if (samples_P.dim() != samples_Q.dim())
            throw EstimationError("estimate_csd: sample sets have different dimensions");
        const std::size_t n = samples_P.size(), m = samples_Q.size();
        const auto kk = static_cast<std::size_t>(k);
        if (n < kk + 1 || m < kk + (paired ? 1 : 0))
            throw EstimationError("estimate_csd: sample sets too small for k");
        if (paired && n != m)
            throw EstimationError("estimate_csd: paired samples need equal sizes");

        const std::size_t d = samples_P.dim();
        KdTree tree_P(samples_P.coords(), d);
        KdTree tree_Q(samples_Q.coords(), d);
        const double m_eff = static_cast<double>(paired ? m - 1 : m);
        const double log_scale = std::log(m_eff) - std::log(static_cast<double>(n - 1));

        CompensatedSum acc;
        std::size_t used = 0, excluded = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto x = samples_P.point(i);
            const double rho2 = tree_P.knn_squared(x, kk, i).back();
            if (!(rho2 > 0.0))
            {
                ++excluded;
                continue;
            }
            const double nu2 = tree_Q.knn_squared(x, kk, paired ? i : KdTree::npos).back();
            ++used;
            if (nu2 == 0.0)
                continue; // zero Q-radius: the density-ratio term vanishes
            // m nu^d / ((n-1) rho^d) in log-space
            acc.add(std::exp(log_scale + 0.5 * static_cast<double>(d) * (std::log(nu2) - std::log(rho2))));
        }
        if (used == 0)
            throw EstimationError("estimate_csd: every P point has a duplicate-induced zero radius");

        CsdEstimate est;
        est.n = n;
        est.m = m;
        est.k = k;
        est.d = d;
        est.excluded_points = excluded;
        est.raw = (static_cast<double>(k - 1) / static_cast<double>(k)) * acc.value() / static_cast<double>(used) - 1.0;
        est.clamped = std::max(0.0, est.raw);
        return est;
    }
} // namespace uwloc

#endif
