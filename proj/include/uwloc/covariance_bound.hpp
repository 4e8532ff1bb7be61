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

#ifndef UWLOC_COVARIANCE_BOUND_HPP
#define UWLOC_COVARIANCE_BOUND_HPP

#include "csd_estimator.hpp"
#include "signal_model.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <vector>

namespace uwloc
{
    // ============================================================================================
    // Covariance of the stacked observation and its per-frequency block form
    // ============================================================================================

    // sigma_s2 H H^H + sigma_v2 I in receiver-major stacking (index l*N + k).
    inline Eigen::MatrixXcd build_covariance(const FrequencyResponseStack &stack, double sigma_s2, double sigma_v2)
    {
        if (!(sigma_s2 >= 0.0) || !(sigma_v2 > 0.0))
            throw std::invalid_argument("build_covariance: need sigma_s2 >= 0 and sigma_v2 > 0");
        const int L = stack.receivers(), N = stack.bins();
        const auto n = static_cast<Eigen::Index>(L) * N;
        Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(n, n);
        const auto &h = stack.matrix();
        for (int k = 0; k < N; ++k)
            for (int l = 0; l < L; ++l)
            {
                const auto d = static_cast<Eigen::Index>(l) * N + k;
                cov(d, d) = sigma_s2 * std::norm(h(l, k));
                for (int m = l + 1; m < L; ++m)
                {
                    const auto i = static_cast<Eigen::Index>(l) * N + k, j = static_cast<Eigen::Index>(m) * N + k;
                    cov(i, j) = sigma_s2 * h(l, k) * std::conj(h(m, k));
                    cov(j, i) = std::conj(cov(i, j));
                }
            }
        cov.diagonal().array() += sigma_v2;
        return cov;
    }

    // Per-frequency blocks of a receiver-major block-structured covariance. The permutation maps
    // receiver-major index l*N + k to frequency-major index k*L + l; applying it to rows and
    // columns yields blkdiag(blocks[0], ..., blocks[N-1]).
    struct BlockForm
    {
        int L = 0;
        int N = 0;
        std::vector<Eigen::MatrixXcd> blocks; // N matrices, L x L

        // perm[k*L + l] = l*N + k
        std::vector<Eigen::Index> permutation() const
        {
            std::vector<Eigen::Index> perm(static_cast<std::size_t>(L) * N);
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < L; ++l)
                    perm[static_cast<std::size_t>(k) * L + l] = static_cast<Eigen::Index>(l) * N + k;
            return perm;
        }

        Eigen::MatrixXcd block_diagonal() const
        {
            const auto n = static_cast<Eigen::Index>(L) * N;
            Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
            for (int k = 0; k < N; ++k)
                out.block(static_cast<Eigen::Index>(k) * L, static_cast<Eigen::Index>(k) * L, L, L) = blocks[k];
            return out;
        }

        // Inverse permutation back to the receiver-major covariance.
        Eigen::MatrixXcd reassemble() const
        {
            const auto n = static_cast<Eigen::Index>(L) * N;
            Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < L; ++l)
                    for (int m = 0; m < L; ++m)
                        out(static_cast<Eigen::Index>(l) * N + k, static_cast<Eigen::Index>(m) * N + k) = blocks[k](l, m);
            return out;
        }
    };

    inline BlockForm block_diagonalize(const Eigen::MatrixXcd &cov, int L, int N, double tol = 1e-12)
    {
        const auto n = static_cast<Eigen::Index>(L) * N;
        if (L < 1 || N < 1 || cov.rows() != n || cov.cols() != n)
            throw StructureError("block_diagonalize: matrix size is not L*N");
        const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if ((i % N) != (j % N) && std::abs(cov(i, j)) > tol * scale)
                    throw StructureError("block_diagonalize: N x N sub-blocks are not diagonal");
        BlockForm form;
        form.L = L;
        form.N = N;
        form.blocks.resize(N);
        for (int k = 0; k < N; ++k)
        {
            form.blocks[k].resize(L, L);
            for (int l = 0; l < L; ++l)
                for (int m = 0; m < L; ++m)
                    form.blocks[k](l, m) = cov(static_cast<Eigen::Index>(l) * N + k, static_cast<Eigen::Index>(m) * N + k);
        }
        return form;
    }

    // Blocks straight from the frequency responses: sigma_s2 h^(k) h^(k)^H + sigma_v2 I_L.
    inline BlockForm block_diagonalize(const FrequencyResponseStack &stack, double sigma_s2, double sigma_v2)
    {
        BlockForm form;
        form.L = stack.receivers();
        form.N = stack.bins();
        form.blocks.reserve(form.N);
        for (int k = 0; k < form.N; ++k)
        {
            const Eigen::VectorXcd h = stack.column(k);
            Eigen::MatrixXcd blk = sigma_s2 * h * h.adjoint();
            blk.diagonal().array() += sigma_v2;
            form.blocks.push_back(std::move(blk));
        }
        return form;
    }

    // Eigenvalues of sigma_s2 h h^H + sigma_v2 I (rank-one update of a scaled identity):
    // [sigma_s2 |h|^2 + sigma_v2, sigma_v2, ..., sigma_v2].
    inline Eigen::VectorXd eigenvalues_closed_form(const Eigen::VectorXcd &h, double sigma_s2, double sigma_v2)
    {
        if (!(sigma_v2 > 0.0))
            throw std::invalid_argument("eigenvalues_closed_form: sigma_v2 must be positive");
        Eigen::VectorXd lambda = Eigen::VectorXd::Constant(h.size(), sigma_v2);
        if (h.size() > 0)
            lambda[0] = sigma_s2 * h.squaredNorm() + sigma_v2;
        return lambda;
    }

    // lambda^(D) for all bins, frequency-major (index k*L + l).
    inline Eigen::VectorXd eigenvalues_closed_form(const FrequencyResponseStack &stack, double sigma_s2, double sigma_v2)
    {
        const int L = stack.receivers(), N = stack.bins();
        Eigen::VectorXd out(static_cast<Eigen::Index>(L) * N);
        for (int k = 0; k < N; ++k)
            out.segment(static_cast<Eigen::Index>(k) * L, L) = eigenvalues_closed_form(stack.column(k), sigma_s2, sigma_v2);
        return out;
    }

    // ============================================================================================
    // Joint diagonalization of a Hermitian positive-definite pair
    // ============================================================================================

    struct JointDiagonalization
    {
        Eigen::MatrixXcd U;          // unit-norm eigenvectors of Omega = Sigma_Q Sigma_P^{-1}
        Eigen::VectorXd psi;         // eigenvalues of Omega (real, positive for a PD pair), ascending
        double offdiag_Q = 0.0;      // ||offdiag(U^H Sigma_Q U)||_F / ||Sigma_Q||_F
        double offdiag_P = 0.0;      // same for Sigma_P
        double min_separation = 0.0; // min_{m != n} |psi_m - conj(psi_n)| / max|psi|
        bool distinct = true;        // psi_m != conj(psi_n) for all m != n, within tolerance
        std::string report;          // non-empty when the distinctness condition fails
    };

    namespace detail
    {
        inline double offdiag_fraction(const Eigen::MatrixXcd &M, const Eigen::MatrixXcd &reference)
        {
            Eigen::MatrixXcd off = M;
            off.diagonal().setZero();
            return off.norm() / reference.norm();
        }
    } // namespace detail

    // Omega U = U diag(psi). Eigenvectors come from the Hermitian-definite pencil
    // Sigma_Q u = psi Sigma_P u (u = Sigma_P^{-1} w). Inside each cluster of equal psi the basis is
    // re-diagonalized against Sigma_P, which makes U unitary and fully diagonalizing whenever the
    // pair commutes. For non-commuting pairs the residual off-diagonal mass is reported.
    inline JointDiagonalization joint_diagonalizer(const Eigen::MatrixXcd &sigma_Q, const Eigen::MatrixXcd &sigma_P,
                                                   double tol = 1e-9)
    {
        const Eigen::Index n = sigma_Q.rows();
        if (sigma_P.rows() != n || sigma_Q.cols() != n || sigma_P.cols() != n)
            throw std::invalid_argument("joint_diagonalizer: size mismatch");
        Eigen::LLT<Eigen::MatrixXcd> chol(sigma_P);
        if (chol.info() != Eigen::Success)
            throw NumericalError("joint_diagonalizer: Sigma_P is not positive definite");

        // M = C^{-1} Sigma_Q C^{-H}, Hermitian, same spectrum as Omega.
        const Eigen::MatrixXcd CinvQ = chol.matrixL().solve(sigma_Q);
        Eigen::MatrixXcd M = chol.matrixL().solve(CinvQ.adjoint());
        M = 0.5 * (M + M.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
        if (es.info() != Eigen::Success)
            throw NumericalError("joint_diagonalizer: eigensolver failed");

        JointDiagonalization jd;
        jd.psi = es.eigenvalues();
        // Omega eigenvectors: w = Sigma_P u = C C^H C^{-H} v = C v.
        Eigen::MatrixXcd W = chol.matrixL() * es.eigenvectors();

        const double psi_scale = std::max(jd.psi.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        jd.min_separation = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i + 1 < n; ++i)
            jd.min_separation = std::min(jd.min_separation, std::abs(jd.psi[i + 1] - jd.psi[i]) / psi_scale);
        if (n < 2)
            jd.min_separation = 1.0;
        jd.distinct = jd.min_separation > tol;
        if (!jd.distinct)
            jd.report = "eigenvalues of Sigma_Q Sigma_P^{-1} are not distinct (relative separation " +
                        std::to_string(jd.min_separation) + "); the joint-diagonalizer condition does not hold";

        // Clusters of (near-)equal psi: orthonormalize and rotate so Sigma_P is diagonal inside.
        Eigen::Index start = 0;
        while (start < n)
        {
            Eigen::Index end = start + 1;
            while (end < n && std::abs(jd.psi[end] - jd.psi[end - 1]) <= tol * psi_scale)
                ++end;
            const Eigen::Index width = end - start;
            if (width > 1)
            {
                Eigen::HouseholderQR<Eigen::MatrixXcd> qr(W.middleCols(start, width));
                const Eigen::MatrixXcd Qb = qr.householderQ() * Eigen::MatrixXcd::Identity(n, width);
                Eigen::MatrixXcd S = Qb.adjoint() * sigma_P * Qb;
                S = 0.5 * (S + S.adjoint()).eval();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> inner(S);
                W.middleCols(start, width) = Qb * inner.eigenvectors();
            }
            start = end;
        }
        for (Eigen::Index j = 0; j < n; ++j)
            W.col(j).normalize();
        jd.U = std::move(W);
        jd.offdiag_Q = detail::offdiag_fraction(jd.U.adjoint() * sigma_Q * jd.U, sigma_Q);
        jd.offdiag_P = detail::offdiag_fraction(jd.U.adjoint() * sigma_P * jd.U, sigma_P);
        return jd;
    }

    // ============================================================================================
    // Eigenvalue ratios, mismatch condition, closed-form divergence
    // ============================================================================================

    struct GammaReport
    {
        Eigen::MatrixXd gamma;            // N x L; gamma(k, 0) carries the ratio, the rest are 1
        std::vector<bool> bin_ok;         // per-bin gamma(k, 0) > 1/2
        bool condition_ok = true;
    };

    namespace detail
    {
        inline void require_same_shape(const FrequencyResponseStack &a, const FrequencyResponseStack &b)
        {
            if (a.receivers() != b.receivers() || a.bins() != b.bins())
                throw std::invalid_argument("frequency-response stacks have different shapes");
        }

        // 2a > b with a boundary band of relative width 1e-12 treated as violated.
        inline bool gamma_condition(double a, double b) { return 2.0 * a - b > 1e-12 * std::max(2.0 * a, b); }
    } // namespace detail

    // gamma[k,1] = (snr |hQ|^2 + 1) / (snr |hP|^2 + 1); gamma[k,l>=2] = 1.
    inline GammaReport gamma_and_condition(const FrequencyResponseStack &hQ, const FrequencyResponseStack &hP, double snr)
    {
        detail::require_same_shape(hQ, hP);
        if (!(snr > 0.0))
            throw std::invalid_argument("gamma_and_condition: snr must be positive");
        const int L = hQ.receivers(), N = hQ.bins();
        GammaReport rep;
        rep.gamma = Eigen::MatrixXd::Ones(N, L);
        rep.bin_ok.resize(N);
        for (int k = 0; k < N; ++k)
        {
            const double a = snr * hQ.energy(k) + 1.0;
            const double b = snr * hP.energy(k) + 1.0;
            rep.gamma(k, 0) = a / b;
            rep.bin_ok[k] = detail::gamma_condition(a, b);
            rep.condition_ok = rep.condition_ok && rep.bin_ok[k];
        }
        return rep;
    }

    // Delta^2 = prod_k a_k^2 / (b_k (2 a_k - b_k)) - 1 with a = snr|hQ|^2 + 1, b = snr|hP|^2 + 1.
    // Each factor equals 1 / (1 - u^2) with u = (a - b) / a, accumulated as -log1p(-u^2) in
    // compensated log-space. Infinite when the gamma > 1/2 condition fails in any bin.
    inline Divergence delta_squared_closed_form(const FrequencyResponseStack &hQ, const FrequencyResponseStack &hP,
                                                double snr)
    {
        detail::require_same_shape(hQ, hP);
        if (!(snr > 0.0))
            throw std::invalid_argument("delta_squared_closed_form: snr must be positive");
        CompensatedSum log_sum;
        for (int k = 0; k < hQ.bins(); ++k)
        {
            const double q = hQ.energy(k), p = hP.energy(k);
            const double a = snr * q + 1.0;
            const double b = snr * p + 1.0;
            if (!detail::gamma_condition(a, b))
                return Divergence::infinite();
            const double u = snr * (q - p) / a;
            log_sum.add(-std::log1p(-u * u));
        }
        const double d2 = std::expm1(log_sum.value());
        if (!std::isfinite(d2))
            return Divergence::infinite();
        return Divergence::finite(std::max(0.0, d2));
    }

    // ============================================================================================
    // Exact chi-square divergence between zero-mean Gaussians
    // ============================================================================================

    namespace detail
    {
        // log(chi^2 + 1) for complex circular Gaussians:
        //   log det Sigma_Q - log det Sigma_P - sum_i log(2 - mu_i),
        // with mu the eigenvalues of Sigma_P Sigma_Q^{-1}. Returns +inf if any mu >= 2.
        template <typename Matrix>
        double log_csd_plus_one(const Matrix &sigma_Q, const Matrix &sigma_P)
        {
            if (sigma_Q.rows() != sigma_P.rows() || sigma_Q.rows() != sigma_Q.cols() || sigma_P.rows() != sigma_P.cols())
                throw std::invalid_argument("csd_exact: size mismatch");
            Eigen::LLT<Matrix> cq(sigma_Q), cp(sigma_P);
            if (cq.info() != Eigen::Success || cp.info() != Eigen::Success)
                throw NumericalError("csd_exact: covariance is not positive definite");
            CompensatedSum acc;
            const auto &LQ = cq.matrixLLT();
            const auto &LP = cp.matrixLLT();
            for (Eigen::Index i = 0; i < LQ.rows(); ++i)
            {
                acc.add(2.0 * std::log(std::real(LQ(i, i))));
                acc.add(-2.0 * std::log(std::real(LP(i, i))));
            }
            // mu = eig(C^{-1} Sigma_P C^{-H}), C = chol(Sigma_Q)
            const Matrix A = cq.matrixL().solve(sigma_P);
            Matrix M = cq.matrixL().solve(A.adjoint());
            M = (0.5 * (M + M.adjoint())).eval();
            Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
            const auto &mu = es.eigenvalues();
            for (Eigen::Index i = 0; i < mu.size(); ++i)
            {
                const double r = 2.0 - mu[i];
                if (!(r > 1e-12 * 2.0))
                    return std::numeric_limits<double>::infinity();
                acc.add(-std::log(r));
            }
            return acc.value();
        }
    } // namespace detail

    // chi^2(P || Q) for P = CN(0, Sigma_P), Q = CN(0, Sigma_Q):
    // det(Sigma_Q) / (det(Sigma_P) det(2I - Sigma_P Sigma_Q^{-1})) - 1.
    inline Divergence csd_exact(const Eigen::MatrixXcd &sigma_Q, const Eigen::MatrixXcd &sigma_P)
    {
        const double lg = detail::log_csd_plus_one(sigma_Q, sigma_P);
        if (!std::isfinite(lg))
            return Divergence::infinite();
        return Divergence::finite(std::max(0.0, std::expm1(lg)));
    }

    // Real-valued Gaussians N(0, Sigma_P), N(0, Sigma_Q): the same determinant ratio to the power 1/2.
    inline Divergence csd_exact_real(const Eigen::MatrixXd &sigma_Q, const Eigen::MatrixXd &sigma_P)
    {
        const double lg = detail::log_csd_plus_one(sigma_Q, sigma_P);
        if (!std::isfinite(lg))
            return Divergence::infinite();
        return Divergence::finite(std::max(0.0, std::expm1(0.5 * lg)));
    }

    // ============================================================================================
    // SNR limits
    // ============================================================================================

    struct SnrLimits
    {
        std::vector<double> rho;     // |hP^(k)|^2 / |hQ^(k)|^2
        Divergence high_snr_limit;   // prod_k 1/(rho_k (2 - rho_k)) - 1
        double low_snr_snr = 1e-6;   // snr at which the low-snr value is evaluated
        Divergence delta2_low_snr;   // Delta^2(low_snr_snr), expected -> 0
    };

    inline SnrLimits snr_limits(const FrequencyResponseStack &hQ, const FrequencyResponseStack &hP,
                                double low_snr = 1e-6)
    {
        detail::require_same_shape(hQ, hP);
        SnrLimits lim;
        lim.low_snr_snr = low_snr;
        CompensatedSum log_sum;
        bool finite = true;
        for (int k = 0; k < hQ.bins(); ++k)
        {
            const double q = hQ.energy(k);
            if (!(q > 0.0))
                throw std::invalid_argument("snr_limits: presumed response has a zero-energy bin");
            const double rho = hP.energy(k) / q;
            lim.rho.push_back(rho);
            if (!(rho > 0.0) || !(rho < 2.0))
                finite = false;
            else
                log_sum.add(-std::log1p(-(1.0 - rho) * (1.0 - rho))); // rho (2 - rho) = 1 - (1 - rho)^2
        }
        lim.high_snr_limit = finite ? Divergence::finite(std::max(0.0, std::expm1(log_sum.value())))
                                    : Divergence::infinite();
        lim.delta2_low_snr = delta_squared_closed_form(hQ, hP, low_snr);
        return lim;
    }

    // ============================================================================================
    // Mismatch report (closed form + exact determinant form)
    // ============================================================================================

    struct MismatchReport
    {
        Eigen::VectorXd lambda_Q; // frequency-major, length N*L
        Eigen::VectorXd lambda_P;
        GammaReport gamma;
        Divergence delta2_closed;
        std::optional<Divergence> csd_exact; // dense determinant form, when requested
        SnrLimits limits;
        double snr = 0.0;
    };

    // Dense determinant evaluation is O((NL)^3); skip it with `with_exact = false` for large stacks.
    inline MismatchReport mismatch_report(const FrequencyResponseStack &hQ, const FrequencyResponseStack &hP,
                                          double sigma_s2, double sigma_v2, bool with_exact = true)
    {
        MismatchReport rep;
        rep.snr = sigma_s2 / sigma_v2;
        rep.lambda_Q = eigenvalues_closed_form(hQ, sigma_s2, sigma_v2);
        rep.lambda_P = eigenvalues_closed_form(hP, sigma_s2, sigma_v2);
        rep.gamma = gamma_and_condition(hQ, hP, rep.snr);
        rep.delta2_closed = delta_squared_closed_form(hQ, hP, rep.snr);
        if (with_exact)
        {
            rep.csd_exact = csd_exact(build_covariance(hQ, sigma_s2, sigma_v2), build_covariance(hP, sigma_s2, sigma_v2));
        }
        rep.limits = snr_limits(hQ, hP);
        return rep;
    }

    // ============================================================================================
    // MSE upper bounds
    // ============================================================================================

    // mse_Q + sqrt(var_Q * Delta^2); +inf ("vacuous") when Delta^2 is infinite.
    inline double weak_bound(double mse_Q, double var_Q, Divergence delta2)
    {
        if (!(mse_Q >= 0.0) || !(var_Q >= 0.0))
            throw std::invalid_argument("weak_bound: mse and variance must be non-negative");
        if (var_Q == 0.0)
            return mse_Q;
        if (delta2.is_infinite())
            return std::numeric_limits<double>::infinity();
        return mse_Q + std::sqrt(var_Q * delta2.value());
    }

    struct BoundEvaluation
    {
        double mse_Q = 0.0;
        double mse_P = 0.0;
        double var_Q = 0.0; // Var_Q(|e|^2), unbiased
        CsdEstimate csd;    // chi^2(P_e || Q_e) estimate; csd.clamped enters the bound
        double strong_bound = 0.0;
    };

    struct ErrorMoments
    {
        double mse = 0.0;
        double var = 0.0;
    };

    // Mean and unbiased variance of |e|^2 over a sample set of error vectors.
    inline ErrorMoments error_moments(const SampleSet &errors)
    {
        const std::size_t n = errors.size();
        if (n < 2)
            throw EstimationError("error_moments: need at least two samples");
        CompensatedSum s;
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            double acc = 0.0;
            for (double v : errors.point(i))
                acc += v * v;
            sq[i] = acc;
            s.add(acc);
        }
        ErrorMoments m;
        m.mse = s.value() / static_cast<double>(n);
        CompensatedSum v;
        for (double e : sq)
            v.add((e - m.mse) * (e - m.mse));
        m.var = v.value() / static_cast<double>(n - 1);
        return m;
    }

    // MSE_P <= MSE_Q + sqrt(Var_Q(|e|^2) chi^2(P_e || Q_e)) evaluated from error samples only.
    // `paired` means errors_Q[i] and errors_P[i] share their random draws; see estimate_csd.
    inline BoundEvaluation strong_bound(const SampleSet &errors_Q, const SampleSet &errors_P, int k_nn,
                                        bool paired = false)
    {
        if (errors_Q.size() < 2 || errors_P.size() < 2)
            throw EstimationError("strong_bound: need at least two error samples under each model");
        BoundEvaluation ev;
        const auto mq = error_moments(errors_Q);
        ev.mse_Q = mq.mse;
        ev.var_Q = mq.var;
        ev.mse_P = error_moments(errors_P).mse;
        ev.csd = estimate_csd(errors_P, errors_Q, k_nn, paired);
        ev.strong_bound = ev.mse_Q + std::sqrt(ev.var_Q * ev.csd.clamped);
        return ev;
    }

    // Same bound with the divergence estimated against `reference_Q`, a Q sample independent of
    // errors_P. errors_Q and errors_P may then share their random draws; mse_Q and var_Q still come
    // from errors_Q.
    inline BoundEvaluation strong_bound(const SampleSet &errors_Q, const SampleSet &errors_P,
                                        const SampleSet &reference_Q, int k_nn)
    {
        if (errors_Q.size() < 2 || errors_P.size() < 2)
            throw EstimationError("strong_bound: need at least two error samples under each model");
        BoundEvaluation ev;
        const auto mq = error_moments(errors_Q);
        ev.mse_Q = mq.mse;
        ev.var_Q = mq.var;
        ev.mse_P = error_moments(errors_P).mse;
        ev.csd = estimate_csd(errors_P, reference_Q, k_nn, false);
        ev.strong_bound = ev.mse_Q + std::sqrt(ev.var_Q * ev.csd.clamped);
        return ev;
    }
} // namespace uwloc

#endif
