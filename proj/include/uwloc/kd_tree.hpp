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

#ifndef UWLOC_KD_TREE_HPP
#define UWLOC_KD_TREE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace uwloc
{
    // Exact k-nearest-neighbor search over a fixed point cloud (Euclidean metric, runtime
    // dimension). The tree references the caller's coordinate buffer, which must outlive it.
    // Construction is single-threaded; queries are const and may run concurrently.
    class KdTree
    {
    public:
        static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

        KdTree(std::span<const double> coords, std::size_t dim, std::size_t leaf_size = 12)
            : coords_(coords), dim_(dim), leaf_size_(std::max<std::size_t>(1, leaf_size))
        {
            if (dim_ == 0 || coords_.size() % dim_ != 0)
                throw std::invalid_argument("KdTree: coordinate buffer is not a multiple of the dimension");
            const std::size_t n = coords_.size() / dim_;
            index_.resize(n);
            std::iota(index_.begin(), index_.end(), std::size_t{0});
            if (n > 0)
            {
                nodes_.reserve(2 * (n / leaf_size_ + 1));
                build(0, n);
            }
        }

        std::size_t size() const { return index_.size(); }
        std::size_t dim() const { return dim_; }

        // Squared distances of the k nearest points to `query`, ascending. The point with index
        // `exclude` (if any) is skipped.
        std::vector<double> knn_squared(std::span<const double> query, std::size_t k, std::size_t exclude = npos) const
        {
            std::priority_queue<double> heap; // max-heap of the best k so far
            if (k == 0 || nodes_.empty())
                return {};
            search(0, query, k, exclude, heap);
            std::vector<double> out(heap.size());
            for (std::size_t i = out.size(); i-- > 0;)
            {
                out[i] = heap.top();
                heap.pop();
            }
            return out;
        }

        double kth_distance(std::span<const double> query, std::size_t k, std::size_t exclude = npos) const
        {
            auto d = knn_squared(query, k, exclude);
            if (d.size() < k)
                throw std::invalid_argument("KdTree: fewer points than k");
            return std::sqrt(d.back());
        }

    private:
        struct Node
        {
            std::size_t begin, end;     // range in index_
            std::size_t left = 0, right = 0;
            std::size_t split_dim = 0;
            double split = 0.0;
            bool leaf = true;
        };

        double coord(std::size_t point, std::size_t d) const { return coords_[point * dim_ + d]; }

        std::size_t build(std::size_t begin, std::size_t end)
        {
            const std::size_t id = nodes_.size();
            nodes_.push_back({begin, end});
            if (end - begin <= leaf_size_)
                return id;

            // split on the widest dimension at the median
            std::size_t best_dim = 0;
            double best_spread = -1.0;
            for (std::size_t d = 0; d < dim_; ++d)
            {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t i = begin; i < end; ++i)
                {
                    const double v = coord(index_[i], d);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                if (hi - lo > best_spread)
                {
                    best_spread = hi - lo;
                    best_dim = d;
                }
            }
            if (best_spread <= 0.0)
                return id; // all points identical: keep as a leaf

            const std::size_t mid = begin + (end - begin) / 2;
            std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                             index_.begin() + static_cast<std::ptrdiff_t>(mid),
                             index_.begin() + static_cast<std::ptrdiff_t>(end),
                             [&](std::size_t a, std::size_t b) { return coord(a, best_dim) < coord(b, best_dim); });
            const double split = coord(index_[mid], best_dim);

            const std::size_t left = build(begin, mid);
            const std::size_t right = build(mid, end);
            Node &node = nodes_[id];
            node.leaf = false;
            node.split_dim = best_dim;
            node.split = split;
            node.left = left;
            node.right = right;
            return id;
        }

        void search(std::size_t id, std::span<const double> q, std::size_t k, std::size_t exclude,
                    std::priority_queue<double> &heap) const
        {
            const Node &node = nodes_[id];
            if (node.leaf)
            {
                for (std::size_t i = node.begin; i < node.end; ++i)
                {
                    const std::size_t p = index_[i];
                    if (p == exclude)
                        continue;
                    double d2 = 0.0;
                    for (std::size_t d = 0; d < dim_; ++d)
                    {
                        const double t = coord(p, d) - q[d];
                        d2 += t * t;
                    }
                    if (heap.size() < k)
                        heap.push(d2);
                    else if (d2 < heap.top())
                    {
                        heap.pop();
                        heap.push(d2);
                    }
                }
                return;
            }
            const double diff = q[node.split_dim] - node.split;
            const std::size_t near = diff < 0.0 ? node.left : node.right;
            const std::size_t far = diff < 0.0 ? node.right : node.left;
            search(near, q, k, exclude, heap);
            // Points equal to the split value may sit on either side, so the far side is pruned
            // only on strict inequality.
            if (heap.size() < k || diff * diff <= heap.top())
                search(far, q, k, exclude, heap);
        }

        std::span<const double> coords_;
        std::size_t dim_;
        std::size_t leaf_size_;
        std::vector<std::size_t> index_;
        std::vector<Node> nodes_;
    };

    // O(M) scan, reference for the tree.
    inline std::vector<double> knn_squared_brute(std::span<const double> coords, std::size_t dim,
                                                 std::span<const double> query, std::size_t k,
                                                 std::size_t exclude = KdTree::npos)
    {
        std::vector<double> d2;
        const std::size_t n = coords.size() / dim;
        d2.reserve(n);
        for (std::size_t p = 0; p < n; ++p)
        {
            if (p == exclude)
                continue;
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d)
            {
                const double t = coords[p * dim + d] - query[d];
                acc += t * t;
            }
            d2.push_back(acc);
        }
        const std::size_t kk = std::min(k, d2.size());
        std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(kk), d2.end());
        d2.resize(kk);
        return d2;
    }
} // namespace uwloc

#endif
