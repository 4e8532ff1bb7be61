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

#ifndef UWLOC_SIGNAL_MODEL_HPP
#define UWLOC_SIGNAL_MODEL_HPP

#include "env_channel.hpp"

namespace uwloc
{
    // Bin frequencies w_k = 2 pi k / (N Ts), k = 0..N-1.
    inline Eigen::VectorXd angular_frequencies(int N, double Ts)
    {
        if (N < 1 || !(Ts > 0.0))
            throw std::invalid_argument("angular_frequencies: need N >= 1 and Ts > 0");
        Eigen::VectorXd w(N);
        for (int k = 0; k < N; ++k)
            w[k] = 2.0 * pi * static_cast<double>(k) / (static_cast<double>(N) * Ts);
        return w;
    }

    // D(k, r) = exp(-j w_k tau_r); row k is d[k]^H so that D * b is the frequency response.
    inline Eigen::MatrixXcd steering_matrix(const ArrivalRow &arrivals, const Eigen::VectorXd &omega)
    {
        Eigen::MatrixXcd D(omega.size(), static_cast<Eigen::Index>(arrivals.size()));
        for (Eigen::Index k = 0; k < omega.size(); ++k)
            for (std::size_t r = 0; r < arrivals.size(); ++r)
                D(k, static_cast<Eigen::Index>(r)) = std::polar(1.0, -omega[k] * arrivals[r].delay);
        return D;
    }

    inline Eigen::VectorXcd gains_of(const ArrivalRow &arrivals)
    {
        Eigen::VectorXcd b(static_cast<Eigen::Index>(arrivals.size()));
        for (std::size_t r = 0; r < arrivals.size(); ++r)
            b[static_cast<Eigen::Index>(r)] = arrivals[r].gain;
        return b;
    }

    inline Eigen::VectorXcd frequency_response(const Eigen::MatrixXcd &D, const Eigen::VectorXcd &b)
    {
        if (D.cols() != b.size())
            throw std::invalid_argument("frequency_response: steering matrix and gain vector disagree");
        return D * b;
    }

    // h(l, k) = frequency response of receiver l at bin k.
    class FrequencyResponseStack
    {
    public:
        FrequencyResponseStack() = default;
        explicit FrequencyResponseStack(Eigen::MatrixXcd h) : h_(std::move(h)) {}

        int receivers() const { return static_cast<int>(h_.rows()); }
        int bins() const { return static_cast<int>(h_.cols()); }
        const Eigen::MatrixXcd &matrix() const { return h_; }

        // Per-frequency vector across receivers, h^(k) in C^L.
        Eigen::VectorXcd column(int k) const { return h_.col(k); }
        double energy(int k) const { return h_.col(k).squaredNorm(); }

        Eigen::VectorXd energies() const { return h_.colwise().squaredNorm().transpose(); }

        // Stacked H = [diag(h_1); ...; diag(h_L)] in C^{NL x N}, receiver-major rows.
        Eigen::MatrixXcd stacked() const
        {
            const int L = receivers(), N = bins();
            Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(N) * L, N);
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < N; ++k)
                    H(static_cast<Eigen::Index>(l) * N + k, k) = h_(l, k);
            return H;
        }

    private:
        Eigen::MatrixXcd h_;
    };

    inline FrequencyResponseStack frequency_response_stack(const ArrivalSet &set, const Eigen::VectorXd &omega)
    {
        Eigen::MatrixXcd h(static_cast<Eigen::Index>(set.rows.size()), omega.size());
        for (std::size_t l = 0; l < set.rows.size(); ++l)
        {
            const auto &row = set.rows[l];
            for (Eigen::Index k = 0; k < omega.size(); ++k)
            {
                cd acc(0.0, 0.0);
                for (const auto &a : row)
                    acc += a.gain * std::polar(1.0, -omega[k] * a.delay);
                h(static_cast<Eigen::Index>(l), k) = acc;
            }
        }
        return FrequencyResponseStack(std::move(h));
    }

    inline FrequencyResponseStack frequency_response_stack(const Environment &env, std::span<const Vec3> receivers,
                                                           const Vec3 &source, const Eigen::VectorXd &omega,
                                                           const ChannelOptions &opts = {})
    {
        return frequency_response_stack(channel_arrivals(env, receivers, source, opts), omega);
    }

    // ============================================================================================
    // Waveform and observations
    // ============================================================================================

    struct WaveformSpectrum
    {
        Eigen::VectorXcd s;
        double sigma_s2 = 1.0;
    };

    inline WaveformSpectrum draw_waveform(int N, double sigma_s2, std::uint64_t seed)
    {
        if (N < 1)
            throw std::invalid_argument("draw_waveform: N must be >= 1");
        if (!(sigma_s2 > 0.0))
            throw std::invalid_argument("draw_waveform: signal power must be positive");
        Rng rng(seed);
        WaveformSpectrum w;
        w.sigma_s2 = sigma_s2;
        w.s.resize(N);
        for (int k = 0; k < N; ++k)
            w.s[k] = circular_normal(rng, sigma_s2);
        return w;
    }

    enum class NoiseModel
    {
        circular_gaussian,
        // Zero-mean, variance-matched uniform square noise. Robustness experiments only: the
        // closed-form divergences assume Gaussian noise.
        uniform_square,
    };

    // Stacked observation x = [x_1; ...; x_L], x_l[k] at index l*N + k.
    struct Observation
    {
        Eigen::VectorXcd x;
        int L = 0;
        int N = 0;
        double sigma_v2 = 0.0;
        double snr = 0.0; // normalized snr the noise level was derived from (informational)

        cd at(int l, int k) const { return x[static_cast<Eigen::Index>(l) * N + k]; }

        // Per-frequency vector across receivers, x^(k) in C^L.
        Eigen::VectorXcd per_frequency(int k) const
        {
            Eigen::VectorXcd v(L);
            for (int l = 0; l < L; ++l)
                v[l] = at(l, k);
            return v;
        }
    };

    // x_l[k] = s[k] h_l[k] + v_l[k], noise drawn from `seed`.
    inline Observation synthesize_observation(const FrequencyResponseStack &stack, const WaveformSpectrum &waveform,
                                              double sigma_v2, std::uint64_t seed,
                                              NoiseModel noise = NoiseModel::circular_gaussian)
    {
        if (!(sigma_v2 >= 0.0))
            throw std::invalid_argument("synthesize_observation: noise variance must be >= 0");
        const int L = stack.receivers(), N = stack.bins();
        if (waveform.s.size() != N)
            throw std::invalid_argument("synthesize_observation: waveform length differs from the bin count");
        Observation obs;
        obs.L = L;
        obs.N = N;
        obs.sigma_v2 = sigma_v2;
        obs.x.resize(static_cast<Eigen::Index>(L) * N);
        Rng rng(seed);
        const double half_width = std::sqrt(1.5 * sigma_v2); // U(-a, a) has variance a^2/3 = sigma_v2/2
        std::uniform_real_distribution<double> uni(-half_width, half_width);
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < N; ++k)
            {
                cd v(0.0, 0.0);
                if (sigma_v2 > 0.0)
                {
                    if (noise == NoiseModel::circular_gaussian)
                        v = circular_normal(rng, sigma_v2);
                    else
                    {
                        const double re = uni(rng);
                        const double im = uni(rng);
                        v = {re, im};
                    }
                }
                obs.x[static_cast<Eigen::Index>(l) * N + k] = waveform.s[k] * stack.matrix()(l, k) + v;
            }
        return obs;
    }

    // Noise variance giving a normalized snr (linear) relative to the average CIR attenuation:
    // sigma_v2 = sigma_s2 * attenuation / snr.
    inline double noise_variance_for_snr(double snr_linear, double sigma_s2, double average_attenuation)
    {
        if (!(snr_linear > 0.0) || !(average_attenuation > 0.0))
            throw std::invalid_argument("noise_variance_for_snr: snr and attenuation must be positive");
        return sigma_s2 * average_attenuation / snr_linear;
    }

    // Inverse of noise_variance_for_snr: sigma_s2 / (sigma_v2 / attenuation).
    inline double normalized_snr(double sigma_s2, double sigma_v2, double average_attenuation)
    {
        return sigma_s2 / (sigma_v2 / average_attenuation);
    }
} // namespace uwloc

#endif
