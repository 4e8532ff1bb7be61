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

#ifndef UWLOC_NET_HPP
#define UWLOC_NET_HPP

#include "signal_model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace uwloc
{
    // ============================================================================================
    // Feature encoding
    // ============================================================================================

    struct FeatureOptions
    {
        bool normalize = true;
        double attenuation = 1.0; // average CIR attenuation used for the magnitude normalization
    };

    inline std::size_t feature_length(int L, int N)
    {
        return static_cast<std::size_t>(2 * N * L + N * L * (L - 1));
    }

    // Layout, for an observation with L receivers and N bins:
    //   [0, NL)            |x_l[k]| / sqrt(attenuation)                       at l*N + k
    //   [NL, 2NL)          |x_l[k]|^2 / e_k, e_k = sum_l' |x_l'[k]|^2         at NL + l*N + k
    //   [2NL, 2NL+NL(L-1)) re, im of x_l[k] conj(x_m[k]) / e_k for l < m,
    //                      bin-major, pairs in lexicographic order
    // Bins with e_k = 0 contribute zeros. Without normalization the attenuation is taken as 1.
    // Scaling x by c scales block one by c and leaves the rest unchanged; a global phase leaves
    // every entry unchanged.
    inline Eigen::VectorXd extract_features(const Observation &obs, const FeatureOptions &opts = {})
    {
        const int L = obs.L, N = obs.N;
        Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature_length(L, N)));
        const double inv_scale = opts.normalize ? 1.0 / std::sqrt(opts.attenuation) : 1.0;
        const Eigen::Index NL = static_cast<Eigen::Index>(N) * L;
        Eigen::Index c = 2 * NL;
        for (int k = 0; k < N; ++k)
        {
            double e = 0.0;
            for (int l = 0; l < L; ++l)
                e += std::norm(obs.at(l, k));
            for (int l = 0; l < L; ++l)
            {
                const Eigen::Index i = static_cast<Eigen::Index>(l) * N + k;
                f[i] = std::abs(obs.at(l, k)) * inv_scale;
                if (e > 0.0)
                    f[NL + i] = std::norm(obs.at(l, k)) / e;
            }
            for (int l = 0; l < L; ++l)
                for (int m = l + 1; m < L; ++m)
                {
                    if (e > 0.0)
                    {
                        const cd z = obs.at(l, k) * std::conj(obs.at(m, k)) / e;
                        f[c] = z.real();
                        f[c + 1] = z.imag();
                    }
                    c += 2;
                }
        }
        return f;
    }

    // ============================================================================================
    // Training data and model
    // ============================================================================================

    struct TrainingSet
    {
        std::vector<Observation> observations;
        std::vector<Vec3> labels;
        std::string environment;
        double snr_db_lo = 0.0, snr_db_hi = 0.0;
        std::uint64_t seed = 0;

        std::size_t size() const { return labels.size(); }
    };

    struct NetHyperparameters
    {
        std::vector<int> hidden{256, 256, 256};
        double learning_rate = 1e-3;
        int epochs = 30;
        int batch_size = 64;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    // Fully connected ReLU network. Inputs are standardized with (feature_mean, feature_scale);
    // outputs live in target units, position = target_center + target_scale .* output, and the
    // final position is clipped to `volume`.
    struct NetModel
    {
        std::vector<int> layer_sizes; // input, hidden..., 3
        std::vector<Eigen::MatrixXd> weights; // weights[i] is layer_sizes[i+1] x layer_sizes[i]
        std::vector<Eigen::VectorXd> biases;
        Eigen::VectorXd feature_mean;
        Eigen::VectorXd feature_scale;
        Vec3 target_center = Vec3::Zero();
        Vec3 target_scale = Vec3::Ones();
        Box volume;
        FeatureOptions features;
        NetHyperparameters hyper;

        std::size_t input_dim() const { return layer_sizes.empty() ? 0 : static_cast<std::size_t>(layer_sizes.front()); }
        bool empty() const { return weights.empty(); }
    };

    // He-initialized network for `input_dim` features; identity feature standardization and a
    // target normalization that maps `volume` onto [-1, 1]^3.
    inline NetModel make_net(std::size_t input_dim, const Box &volume, const NetHyperparameters &hyper,
                             std::uint64_t seed, const FeatureOptions &features = {})
    {
        NetModel m;
        m.hyper = hyper;
        m.volume = volume;
        m.features = features;
        m.layer_sizes.push_back(static_cast<int>(input_dim));
        for (int h : hyper.hidden)
        {
            if (h < 1)
                throw std::invalid_argument("make_net: hidden layer widths must be >= 1");
            m.layer_sizes.push_back(h);
        }
        m.layer_sizes.push_back(3);
        Rng rng(seed);
        for (std::size_t i = 0; i + 1 < m.layer_sizes.size(); ++i)
        {
            const int in = m.layer_sizes[i], out = m.layer_sizes[i + 1];
            std::normal_distribution<double> g(0.0, std::sqrt(2.0 / in));
            Eigen::MatrixXd W(out, in);
            for (Eigen::Index c = 0; c < W.cols(); ++c)
                for (Eigen::Index r = 0; r < W.rows(); ++r)
                    W(r, c) = g(rng);
            m.weights.push_back(std::move(W));
            m.biases.push_back(Eigen::VectorXd::Zero(out));
        }
        m.feature_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim));
        m.feature_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(input_dim));
        m.target_center = volume.center();
        m.target_scale = (0.5 * volume.extent()).cwiseMax(1e-12);
        return m;
    }

    namespace detail
    {
        // Forward pass on standardized inputs (one column per example). `acts` receives the
        // post-activation of every layer (acts[0] = input) when non-null.
        inline Eigen::MatrixXd forward(const NetModel &m, const Eigen::MatrixXd &input,
                                       std::vector<Eigen::MatrixXd> *acts = nullptr)
        {
            Eigen::MatrixXd a = input;
            if (acts)
            {
                acts->clear();
                acts->push_back(a);
            }
            for (std::size_t i = 0; i < m.weights.size(); ++i)
            {
                Eigen::MatrixXd z = m.weights[i] * a;
                z.colwise() += m.biases[i];
                if (i + 1 < m.weights.size())
                    z = z.cwiseMax(0.0);
                a = std::move(z);
                if (acts)
                    acts->push_back(a);
            }
            return a;
        }

        inline Eigen::MatrixXd standardize(const NetModel &m, Eigen::MatrixXd features)
        {
            features.colwise() -= m.feature_mean;
            features.array().colwise() /= m.feature_scale.array();
            return features;
        }

        inline Vec3 to_position(const NetModel &m, const Eigen::Vector3d &out)
        {
            return m.volume.clamp(m.target_center + m.target_scale.cwiseProduct(out));
        }
    } // namespace detail

    // Feature matrix, one column per observation.
    inline Eigen::MatrixXd feature_matrix(std::span<const Observation> obs, const FeatureOptions &opts)
    {
        if (obs.empty())
            return {};
        const auto F = static_cast<Eigen::Index>(feature_length(obs.front().L, obs.front().N));
        Eigen::MatrixXd X(F, static_cast<Eigen::Index>(obs.size()));
        for (std::size_t i = 0; i < obs.size(); ++i)
        {
            if (static_cast<Eigen::Index>(feature_length(obs[i].L, obs[i].N)) != F)
                throw std::invalid_argument("feature_matrix: observations have different shapes");
            X.col(static_cast<Eigen::Index>(i)) = extract_features(obs[i], opts);
        }
        return X;
    }

    // ============================================================================================
    // Training
    // ============================================================================================

    struct TrainingError : NumericalError
    {
        using NumericalError::NumericalError;
    };

    struct TrainResult
    {
        NetModel model;
        std::vector<double> loss_curve; // per epoch: mean squared position error (m^2) over the epoch
    };

    // Mini-batch Adam on the mean squared error in normalized target units, from a precomputed
    // feature matrix (F x J) and label matrix (3 x J). Feature standardization constants are
    // fitted on the given features. A model with no layers is initialized with make_net.
    inline TrainResult train_net(const Eigen::MatrixXd &features, const Eigen::MatrixXd &labels, NetModel model,
                                 std::uint64_t seed)
    {
        const Eigen::Index J = features.cols();
        if (labels.rows() != 3 || labels.cols() != J)
            throw std::invalid_argument("train_net: need one 3-d label per feature column");
        if (model.empty())
            throw std::invalid_argument("train_net: model has no layers (use make_net)");
        if (model.input_dim() != static_cast<std::size_t>(features.rows()))
            throw std::invalid_argument("train_net: feature length differs from the model input");
        const NetHyperparameters &hp = model.hyper;
        if (hp.batch_size < 1 || hp.epochs < 1 || !(hp.learning_rate > 0.0))
            throw std::invalid_argument("train_net: invalid hyperparameters");
        if (J < hp.batch_size)
            throw std::invalid_argument("train_net: training set smaller than one batch");
        if (!features.allFinite() || !labels.allFinite())
            throw TrainingError("train_net: non-finite features or labels");

        model.feature_mean = features.rowwise().mean();
        Eigen::VectorXd var = (features.colwise() - model.feature_mean).rowwise().squaredNorm() / static_cast<double>(J);
        model.feature_scale = var.cwiseSqrt();
        for (Eigen::Index i = 0; i < model.feature_scale.size(); ++i)
            if (!(model.feature_scale[i] > 1e-12))
                model.feature_scale[i] = 1.0;

        const Eigen::MatrixXd X = detail::standardize(model, features);
        Eigen::MatrixXd Y = labels;
        Y.colwise() -= model.target_center;
        Y.array().colwise() /= model.target_scale.array();

        const std::size_t layers = model.weights.size();
        std::vector<Eigen::MatrixXd> mW, vW;
        std::vector<Eigen::VectorXd> mb, vb;
        for (std::size_t i = 0; i < layers; ++i)
        {
            mW.push_back(Eigen::MatrixXd::Zero(model.weights[i].rows(), model.weights[i].cols()));
            vW.push_back(mW.back());
            mb.push_back(Eigen::VectorXd::Zero(model.biases[i].size()));
            vb.push_back(mb.back());
        }

        std::vector<Eigen::Index> order(static_cast<std::size_t>(J));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng(seed);
        const Eigen::Vector3d scale2 = model.target_scale.cwiseAbs2();

        TrainResult result;
        std::uint64_t step = 0;
        std::vector<Eigen::MatrixXd> acts;
        for (int epoch = 0; epoch < hp.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), rng);
            CompensatedSum epoch_loss;
            Eigen::Index seen = 0;
            const Eigen::Index batches = J / hp.batch_size; // a trailing partial batch is dropped
            for (Eigen::Index b = 0; b < batches; ++b)
            {
                const Eigen::Index B = hp.batch_size;
                Eigen::MatrixXd xb(X.rows(), B), yb(3, B);
                for (Eigen::Index j = 0; j < B; ++j)
                {
                    const Eigen::Index src = order[static_cast<std::size_t>(b * B + j)];
                    xb.col(j) = X.col(src);
                    yb.col(j) = Y.col(src);
                }
                const Eigen::MatrixXd out = detail::forward(model, xb, &acts);
                const Eigen::MatrixXd diff = out - yb;
                const double batch_sq_m = (diff.array().square().colwise() * scale2.array()).sum();
                if (!std::isfinite(batch_sq_m))
                {
                    std::ostringstream msg;
                    msg << "train_net: loss diverged at epoch " << epoch << ", batch " << b
                        << " (learning rate " << hp.learning_rate << ", step " << step << ")";
                    throw TrainingError(msg.str());
                }
                epoch_loss.add(batch_sq_m);
                seen += B;

                // backward pass, d(mean_j |out_j - y_j|^2)
                Eigen::MatrixXd delta = (2.0 / static_cast<double>(B)) * diff;
                ++step;
                const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
                for (std::size_t i = layers; i-- > 0;)
                {
                    const Eigen::MatrixXd gW = delta * acts[i].transpose();
                    const Eigen::VectorXd gb = delta.rowwise().sum();
                    if (i > 0)
                    {
                        Eigen::MatrixXd back = model.weights[i].transpose() * delta;
                        delta = (acts[i].array() > 0.0).select(back, 0.0);
                    }
                    mW[i] = hp.beta1 * mW[i] + (1.0 - hp.beta1) * gW;
                    vW[i] = hp.beta2 * vW[i] + (1.0 - hp.beta2) * gW.cwiseAbs2();
                    mb[i] = hp.beta1 * mb[i] + (1.0 - hp.beta1) * gb;
                    vb[i] = hp.beta2 * vb[i] + (1.0 - hp.beta2) * gb.cwiseAbs2();
                    model.weights[i].array() -= hp.learning_rate * (mW[i].array() / c1) /
                                                ((vW[i].array() / c2).sqrt() + hp.epsilon);
                    model.biases[i].array() -= hp.learning_rate * (mb[i].array() / c1) /
                                               ((vb[i].array() / c2).sqrt() + hp.epsilon);
                }
            }
            result.loss_curve.push_back(epoch_loss.value() / static_cast<double>(seen));
        }
        result.model = std::move(model);
        return result;
    }

    inline TrainResult train_net(const TrainingSet &train, NetModel model, std::uint64_t seed)
    {
        if (train.observations.size() != train.labels.size())
            throw std::invalid_argument("train_net: observation and label counts differ");
        Eigen::MatrixXd Y(3, static_cast<Eigen::Index>(train.labels.size()));
        for (std::size_t i = 0; i < train.labels.size(); ++i)
            Y.col(static_cast<Eigen::Index>(i)) = train.labels[i];
        return train_net(feature_matrix(train.observations, model.features), Y, std::move(model), seed);
    }

    // ============================================================================================
    // Prediction
    // ============================================================================================

    inline std::vector<Vec3> predict_features(const NetModel &m, const Eigen::MatrixXd &features)
    {
        if (m.empty())
            throw std::invalid_argument("predict: model has no layers");
        if (static_cast<std::size_t>(features.rows()) != m.input_dim())
            throw std::invalid_argument("predict: feature length differs from the model input");
        const Eigen::MatrixXd out = detail::forward(m, detail::standardize(m, features));
        std::vector<Vec3> p(static_cast<std::size_t>(out.cols()));
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            p[static_cast<std::size_t>(j)] = detail::to_position(m, out.col(j));
        return p;
    }

    inline std::vector<Vec3> predict_batch(const NetModel &m, std::span<const Observation> obs)
    {
        if (obs.empty())
            return {};
        return predict_features(m, feature_matrix(obs, m.features));
    }

    inline Vec3 predict(const NetModel &m, const Observation &obs)
    {
        Eigen::MatrixXd f = extract_features(obs, m.features);
        return predict_features(m, f).front();
    }
} // namespace uwloc

#endif
