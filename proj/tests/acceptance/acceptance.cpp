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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Runs from the build directory; outputs land in ./acceptance_out.

#include "support.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <sys/wait.h>

using namespace uwloc;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::string detail;
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    std::string fmt(double v, int precision = 4)
    {
        std::ostringstream s;
        s << std::setprecision(precision) << v;
        return s.str();
    }

    Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXcd &M)
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    double log_abs_det(const Eigen::MatrixXcd &M)
    {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            acc += std::log(std::abs(lu.matrixLU()(i, i)));
        return acc;
    }

    FrequencyResponseStack scalar_stack(double energy)
    {
        Eigen::MatrixXcd h(1, 1);
        h(0, 0) = std::sqrt(energy);
        return FrequencyResponseStack(h);
    }

    // h_P^(k) = c_k h_Q^(k), real c_k; `violate` pushes one bin past 2|h_Q|^2 + 1/snr.
    FrequencyResponseStack commuting_partner(gen::Gen &g, const FrequencyResponseStack &hQ, double snr, bool violate)
    {
        Eigen::MatrixXcd hp = hQ.matrix();
        const int bad = violate ? g.integer(0, hQ.bins() - 1) : -1;
        for (int k = 0; k < hQ.bins(); ++k)
        {
            const double limit = 2.0 * hQ.energy(k) + 1.0 / snr;
            const double p = k == bad ? limit * g.uniform(1.01, 2.0) : limit * g.uniform(0.02, 0.95);
            hp.col(k) *= std::sqrt(p / hQ.energy(k)) * (g.coin() ? 1.0 : -1.0);
        }
        return FrequencyResponseStack(hp);
    }

    std::string slurp(const std::filesystem::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        if (!in)
            throw IoError("cannot read '" + p.string() + "'");
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    const std::filesystem::path out_root = "acceptance_out";

    // --------------------------------------------------------------------------------------------

    Outcome eigenvalues_closed_form_vs_dense()
    {
        const auto t0 = Clock::now();
        gen::Gen g(9001);
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial)
        {
            const int L = g.integer(2, 4);
            const double s2 = g.log_uniform(1e-2, 1e2), v2 = g.log_uniform(1e-2, 10.0);
            const Eigen::VectorXcd h = g.complex_vector(L);
            Eigen::MatrixXcd B = s2 * h * h.adjoint();
            B.diagonal().array() += v2;
            Eigen::VectorXd closed = eigenvalues_closed_form(h, s2, v2);
            std::sort(closed.data(), closed.data() + closed.size());
            const auto dense = sorted_eigenvalues(B);
            for (int i = 0; i < L; ++i)
                worst = std::max(worst, gen::rel_err(closed[i], dense[i]));
        }
        const double t = seconds_since(t0);
        return {worst < 1e-10 && t < 5.0, "200 instances, max rel err " + fmt(worst) + ", " + fmt(t, 3) + " s"};
    }

    Outcome block_structure()
    {
        const auto t0 = Clock::now();
        gen::Gen g(9002);
        double worst_det = 0.0, worst_eig = 0.0;
        for (int trial = 0; trial < 100; ++trial)
        {
            const int L = g.integer(1, 4), N = g.integer(1, 8);
            const double s2 = g.log_uniform(1e-2, 10.0), v2 = g.log_uniform(1e-2, 1.0);
            const auto S = build_covariance(g.stack(L, N), s2, v2);
            const auto form = block_diagonalize(S, L, N);
            double log_prod = 0.0;
            std::vector<double> spectrum;
            for (const auto &b : form.blocks)
            {
                log_prod += log_abs_det(b);
                const auto e = sorted_eigenvalues(b);
                spectrum.insert(spectrum.end(), e.data(), e.data() + e.size());
            }
            worst_det = std::max(worst_det, std::abs(std::expm1(log_abs_det(S) - log_prod)));
            std::sort(spectrum.begin(), spectrum.end());
            const auto dense = sorted_eigenvalues(S);
            for (Eigen::Index i = 0; i < dense.size(); ++i)
                worst_eig = std::max(worst_eig, std::abs(dense[i] - spectrum[static_cast<std::size_t>(i)]) /
                                                    dense.cwiseAbs().maxCoeff());
        }
        const double t = seconds_since(t0);
        return {worst_det < 1e-10 && worst_eig < 1e-10 && t < 10.0,
                "100 instances, det rel err " + fmt(worst_det) + ", spectrum rel err " + fmt(worst_eig) + ", " +
                    fmt(t, 3) + " s"};
    }

    Outcome chi2_cross_oracle()
    {
        const auto t0 = Clock::now();
        gen::Gen g(9003);
        double worst = 0.0;
        int finite_failures = 0, infinite_failures = 0;
        for (int trial = 0; trial < 100; ++trial)
        {
            const int L = g.integer(1, 4), N = g.integer(1, 8);
            const double s2 = g.log_uniform(0.1, 10.0), v2 = g.log_uniform(0.1, 10.0);
            const auto hQ = g.stack(L, N);
            const auto hP = commuting_partner(g, hQ, s2 / v2, false);
            const auto closed = delta_squared_closed_form(hQ, hP, s2 / v2);
            const auto exact = csd_exact(build_covariance(hQ, s2, v2), build_covariance(hP, s2, v2));
            if (!closed.is_finite() || !exact.is_finite())
                ++finite_failures;
            else
                worst = std::max(worst, gen::rel_err(closed.value(), exact.value()));
        }
        for (int trial = 0; trial < 100; ++trial)
        {
            const int L = g.integer(1, 4), N = g.integer(1, 8);
            const double s2 = g.log_uniform(0.1, 10.0), v2 = g.log_uniform(0.1, 10.0);
            const auto hQ = g.stack(L, N);
            const auto hP = commuting_partner(g, hQ, s2 / v2, true);
            if (!delta_squared_closed_form(hQ, hP, s2 / v2).is_infinite() ||
                !csd_exact(build_covariance(hQ, s2, v2), build_covariance(hP, s2, v2)).is_infinite())
                ++infinite_failures;
        }
        const double t = seconds_since(t0);
        return {worst < 1e-10 && finite_failures == 0 && infinite_failures == 0 && t < 10.0,
                "100 finite pairs max rel err " + fmt(worst) + " (" + std::to_string(finite_failures) +
                    " not finite), 100 violating pairs with " + std::to_string(infinite_failures) +
                    " not infinite, " + fmt(t, 3) + " s"};
    }

    Outcome hand_value()
    {
        const auto closed = delta_squared_closed_form(scalar_stack(1.0), scalar_stack(0.5), 1.0);
        const auto exact = csd_exact(build_covariance(scalar_stack(1.0), 1.0, 1.0),
                                     build_covariance(scalar_stack(0.5), 1.0, 1.0));
        const double want = 1.0 / 15.0;
        const double ec = std::abs(closed.value() - want), ee = std::abs(exact.value() - want);
        return {closed.is_finite() && exact.is_finite() && ec < 1e-12 && ee < 1e-12,
                "closed form err " + fmt(ec) + ", determinant form err " + fmt(ee)};
    }

    Outcome snr_limits_check()
    {
        gen::Gen g(9005);
        double worst_high = 0.0, worst_low = 0.0;
        for (int trial = 0; trial < 100; ++trial)
        {
            const int L = g.integer(1, 4), N = g.integer(1, 8);
            // unit-energy presumed bins: snr is the per-bin snr
            Eigen::MatrixXcd hq = g.stack(L, N).matrix();
            hq.colwise().normalize();
            const FrequencyResponseStack hQ(hq);
            Eigen::MatrixXcd hp = hq;
            std::vector<double> rho(static_cast<std::size_t>(N));
            for (int k = 0; k < N; ++k)
            {
                // endpoints of the range included
                rho[k] = k == 0 ? 0.5 : k == 1 ? 1.5 : g.uniform(0.5, 1.5);
                hp.col(k) *= std::sqrt(rho[k]);
            }
            const FrequencyResponseStack hP(hp);
            double prod = 1.0;
            for (double r : rho)
                prod *= 1.0 / (r * (2.0 - r));
            const double limit = prod - 1.0;
            const auto high = delta_squared_closed_form(hQ, hP, 1e8);
            const auto reported = snr_limits(hQ, hP).high_snr_limit;
            worst_high = std::max({worst_high, gen::rel_err(high.value(), limit),
                                   gen::rel_err(reported.value(), limit)});
            worst_low = std::max(worst_low, delta_squared_closed_form(hQ, hP, 1e-6).value());
        }
        return {worst_high < 1e-6 && worst_low < 1e-3,
                "100 stacks, high-snr rel err " + fmt(worst_high) + ", max low-snr value " + fmt(worst_low)};
    }

    Outcome csd_calibration()
    {
        const auto t0 = Clock::now();
        const std::size_t n = 100000;
        const double want_1d = 2.0 / std::sqrt(3.0) - 1.0;
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed)
        {
            const auto p = gen::gaussian_samples(Eigen::MatrixXd::Identity(1, 1), n, 100 + 2 * seed);
            const auto q = gen::gaussian_samples(Eigen::MatrixXd::Constant(1, 1, 2.0), n, 101 + 2 * seed);
            sum += estimate_csd(p, q, 5).raw;
        }
        const double err_1d = gen::rel_err(sum / 10.0, want_1d);

        // three 3-D pairs with finite divergence
        gen::Gen g(9006);
        double worst_3d = 0.0;
        std::string per_pair;
        for (int pair = 0; pair < 3; ++pair)
        {
            const Eigen::MatrixXd sq = g.spd(3, 0.8, 1.6);
            const Eigen::MatrixXd sp = g.spd(3, 0.5, 1.0);
            const auto exact = csd_exact_real(sq, sp);
            if (!exact.is_finite())
                return {false, "3-D pair " + std::to_string(pair) + " has an infinite divergence"};
            const auto est = estimate_csd(gen::gaussian_samples(sp, n, 200 + 2 * pair),
                                          gen::gaussian_samples(sq, n, 201 + 2 * pair), 5);
            const double e = gen::rel_err(est.raw, exact.value());
            worst_3d = std::max(worst_3d, e);
            per_pair += (pair ? ", " : "") + fmt(est.raw) + " vs " + fmt(exact.value());
        }
        const double t = seconds_since(t0);
        return {err_1d < 0.15 && worst_3d < 0.2 && t < 60.0,
                "1-D mean of 10 seeds " + fmt(sum / 10.0) + " vs " + fmt(want_1d) + " (rel err " + fmt(err_1d) +
                    "), 3-D " + per_pair + " (max rel err " + fmt(worst_3d) + "), " + fmt(t, 3) + " s"};
    }

    // Criterion 7 result, reused by criterion 8.
    std::optional<ExperimentResult> mismatch_run;

    Outcome bound_validity()
    {
        const auto t0 = Clock::now();
        const auto c = load_experiment_config(std::filesystem::path(UWLOC_SOURCE_DIR) / "configs" / "mismatch_pair.json");
        if (c.geometry.receivers.size() != 4 || c.N != 64 || c.trials != 10000 || c.snr_db.size() < 15)
            return {false, "mismatch_pair.json does not meet the required scale"};
        mismatch_run = run_experiment(c, std::max(1u, std::thread::hardware_concurrency()));
        emit_experiment(*mismatch_run, out_root / "mismatch_pair");
        const auto &pts = mismatch_run->curves.front().points;

        int a_fail = 0, b_fail = 0;
        std::vector<double> gap;
        for (const auto &p : pts)
        {
            const bool active = p.delta2 > 0.0;
            if (active && p.rmse_p < p.rmse_q)
                ++a_fail;
            if (p.rmse_p > p.bound_strong)
                ++b_fail;
            gap.push_back((p.bound_strong - p.rmse_p) / p.rmse_p);
        }
        const double mid_max = *std::max_element(gap.begin() + 1, gap.end() - 1);
        const bool c_ok = gap.front() < mid_max && gap.back() < mid_max;
        const double t = seconds_since(t0);
        return {a_fail == 0 && b_fail == 0 && c_ok && t < 1800.0,
                std::to_string(pts.size()) + " snr points x " + std::to_string(c.trials) + " trials: (a) " +
                    std::to_string(a_fail) + " violations, (b) " + std::to_string(b_fail) +
                    " violations, (c) extreme gaps " + fmt(gap.front()) + " / " + fmt(gap.back()) +
                    " vs mid-grid max " + fmt(mid_max) + ", " + fmt(t, 4) + " s"};
    }

    Outcome estimator_sanity()
    {
        if (!mismatch_run)
            return {false, "needs the bound-validity run"};
        const auto &c = mismatch_run->config;
        const auto &top = *std::max_element(
            mismatch_run->curves.front().points.begin(), mismatch_run->curves.front().points.end(),
            [](const CurvePoint &a, const CurvePoint &b) { return a.snr_db < b.snr_db; });
        const double floor = GridSpec{c.geometry.volume, c.grid_step}.quantization_floor();
        const bool ml_ok = top.rmse_q <= 2.0 * floor;

        const double att = mismatch_run->average_attenuation;
        const auto train = generate_dataset(c, c.environment_Q, static_cast<std::size_t>(c.training_size),
                                            derive_seed(c.seed, "acceptance-train", 0), att);
        const auto test = generate_dataset(c, c.environment_Q, 1000, derive_seed(c.seed, "acceptance-test", 0), att);
        FeatureOptions fo;
        fo.attenuation = att;
        const auto model = make_net(feature_length(static_cast<int>(c.geometry.receivers.size()), c.N),
                                    c.geometry.volume, c.net, derive_seed(c.seed, "acceptance-init", 0), fo);
        const auto trained = train_net(train, model, derive_seed(c.seed, "acceptance-sgd", 0));
        const auto pred = predict_batch(trained.model, test.observations);
        Vec3 mean = Vec3::Zero();
        for (const auto &l : train.labels)
            mean += l / static_cast<double>(train.size());
        double se_net = 0.0, se_mean = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i)
        {
            se_net += (pred[i] - test.labels[i]).squaredNorm();
            se_mean += (mean - test.labels[i]).squaredNorm();
        }
        const double rmse_net = std::sqrt(se_net / test.size()), rmse_mean = std::sqrt(se_mean / test.size());
        const bool net_ok = 2.0 * rmse_net <= rmse_mean;
        return {ml_ok && net_ok, "ML grid rmse " + fmt(top.rmse_q) + " at " + fmt(top.snr_db) + " dB vs 2 x floor " +
                                     fmt(2.0 * floor) + "; net rmse " + fmt(rmse_net) + " vs mean baseline " +
                                     fmt(rmse_mean) + " on 1000 matched examples"};
    }

    Outcome reproducibility()
    {
        const auto config = std::filesystem::path(UWLOC_SOURCE_DIR) / "configs" / "repro_small.json";
        std::vector<std::string> csv;
        for (const char *run : {"repro_a", "repro_b"})
        {
            const auto dir = out_root / run;
            std::filesystem::remove_all(dir);
            const std::string cmd = std::string(UWLOC_CLI_PATH) + " experiment --config " + config.string() +
                                    " --workers 1 --out " + dir.string() + " > /dev/null";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
                return {false, std::string("experiment run ") + run + " failed"};
            csv.push_back(slurp(dir / "curve.csv"));
        }
        return {csv[0] == csv[1] && !csv[0].empty(),
                "two CLI runs with --workers 1: curve.csv " + std::string(csv[0] == csv[1] ? "identical" : "differs") +
                    " (" + std::to_string(csv[0].size()) + " bytes)"};
    }
}

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"eigenvalues closed form vs dense", eigenvalues_closed_form_vs_dense},
        {"block structure", block_structure},
        {"chi-square cross-oracle", chi2_cross_oracle},
        {"hand value 1/15", hand_value},
        {"snr limits", snr_limits_check},
        {"csd estimator calibration", csd_calibration},
        {"bound validity", bound_validity},
        {"estimator sanity", estimator_sanity},
        {"reproducibility", reproducibility},
    };
    std::filesystem::create_directories(out_root);
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
