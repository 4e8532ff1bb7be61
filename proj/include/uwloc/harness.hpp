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

#ifndef UWLOC_HARNESS_HPP
#define UWLOC_HARNESS_HPP

#include "config.hpp"
#include "covariance_bound.hpp"
#include "io.hpp"
#include "localizers.hpp"
#include "net.hpp"

#include <sstream>

namespace uwloc
{
    inline constexpr const char *version_string = "0.1.0";

    // Re-raises any exception escaping `fn` with the stage name and replay seed prefixed, keeping
    // its error family (and so the CLI exit code).
    template <typename Fn>
    decltype(auto) run_stage(const std::string &stage, std::uint64_t seed, Fn &&fn)
    {
        const std::string where = "stage '" + stage + "' (seed " + std::to_string(seed) + "): ";
        try
        {
            return fn();
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(where + e.what());
        }
        catch (const IoError &e)
        {
            throw IoError(where + e.what());
        }
        catch (const std::exception &e)
        {
            throw NumericalError(where + e.what());
        }
    }

    // ============================================================================================
    // Results
    // ============================================================================================

    struct CurvePoint
    {
        double snr_db = 0.0;
        double rmse_q = 0.0;
        double rmse_p = 0.0;
        double bound_strong = 0.0; // sqrt of the strong MSE bound
        double bound_weak = 0.0;   // sqrt of the weak MSE bound; +inf when vacuous
        double delta2 = 0.0;       // +inf when the finiteness condition fails
        double csd_estimate = 0.0; // zero-clamped estimate entering the strong bound
        bool condition_ok = true;
        int trials = 0;
        std::uint64_t seed = 0;

        bool operator==(const CurvePoint &) const = default;
    };

    inline constexpr const char *curve_csv_header =
        "snr_db,rmse_q,rmse_p,bound_strong,bound_weak,delta2,csd_estimate,condition_ok,trials,seed";

    inline std::string curve_to_csv(std::span<const CurvePoint> points)
    {
        using detail::format_double;
        std::string out = std::string(curve_csv_header) + "\n";
        for (const auto &p : points)
        {
            out += format_double(p.snr_db) + ',' + format_double(p.rmse_q) + ',' + format_double(p.rmse_p) + ',' +
                   format_double(p.bound_strong) + ',' + format_double(p.bound_weak) + ',' + format_double(p.delta2) +
                   ',' + format_double(p.csd_estimate) + ',' + (p.condition_ok ? "1" : "0") + ',' +
                   std::to_string(p.trials) + ',' + std::to_string(p.seed) + '\n';
        }
        return out;
    }

    inline std::vector<CurvePoint> parse_curve_csv(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || detail::split_csv_line(line).size() != 10 ||
            line.rfind(curve_csv_header, 0) != 0)
            throw IoError("curve csv: missing or unexpected header");
        std::vector<CurvePoint> points;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto c = detail::split_csv_line(line);
            if (c.size() != 10)
                throw IoError("curve csv: expected 10 columns in '" + line + "'");
            CurvePoint p;
            p.snr_db = detail::parse_double(c[0]);
            p.rmse_q = detail::parse_double(c[1]);
            p.rmse_p = detail::parse_double(c[2]);
            p.bound_strong = detail::parse_double(c[3]);
            p.bound_weak = detail::parse_double(c[4]);
            p.delta2 = detail::parse_double(c[5]);
            p.csd_estimate = detail::parse_double(c[6]);
            if (c[7] != "0" && c[7] != "1")
                throw IoError("curve csv: condition_ok must be 0 or 1");
            p.condition_ok = c[7] == "1";
            try
            {
                p.trials = std::stoi(c[8]);
                p.seed = std::stoull(c[9]);
            }
            catch (const std::exception &)
            {
                throw IoError("curve csv: bad integer column in '" + line + "'");
            }
            points.push_back(p);
        }
        return points;
    }

    // Per-point numbers that do not go into curve.csv.
    struct PointDiagnostics
    {
        double sigma_v2 = 0.0;
        double snr_raw = 0.0; // sigma_s2 / sigma_v2, the snr entering the closed form
        double mse_q = 0.0, mse_p = 0.0, var_q = 0.0;
        CsdEstimate csd;
        double delta2_exact = 0.0; // dense determinant form
    };

    struct EstimatorCurve
    {
        std::string estimator;
        std::vector<CurvePoint> points;
        std::vector<PointDiagnostics> diagnostics;
        std::vector<double> loss_curve; // network only
    };

    struct ExperimentResult
    {
        ExperimentConfig config;
        Vec3 source = Vec3::Zero();
        double average_attenuation = 0.0;
        SnrLimits limits;
        std::vector<EstimatorCurve> curves;
    };

    // ============================================================================================
    // Stages
    // ============================================================================================

    // Source position: the configured one, else drawn once from the master seed.
    inline Vec3 experiment_source(const ExperimentConfig &c)
    {
        if (c.source)
            return *c.source;
        Rng rng(derive_seed(c.seed, "source", 0));
        return uniform_in_box(rng, c.geometry.volume);
    }

    inline double experiment_attenuation(const ExperimentConfig &c)
    {
        return average_attenuation(c.environment_Q, c.geometry, static_cast<std::size_t>(c.attenuation_samples),
                                   derive_seed(c.seed, "attenuation", 0), c.channel_options());
    }

    // J labeled examples from `env`: positions uniform in the volume, snr uniform in dB over the
    // configured training range, noise scaled to the attenuation-normalized snr.
    inline TrainingSet generate_dataset(const ExperimentConfig &c, const Environment &env, std::size_t J,
                                        std::uint64_t seed, double attenuation, int workers = 1)
    {
        if (J == 0)
            throw ConfigError("generate_dataset: J must be >= 1");
        const Eigen::VectorXd omega = angular_frequencies(c.N, c.Ts);
        TrainingSet set;
        set.environment = env.name;
        set.seed = seed;
        set.snr_db_lo = c.train_snr_db_lo;
        set.snr_db_hi = c.train_snr_db_hi;
        set.observations.resize(J);
        set.labels.resize(J);
        parallel_for(J, workers, [&](std::size_t i) {
            Rng rng(derive_seed(seed, "dataset", i));
            const Vec3 p = uniform_in_box(rng, c.geometry.volume);
            std::uniform_real_distribution<double> u(c.train_snr_db_lo, c.train_snr_db_hi);
            const double snr_db = c.train_snr_db_hi > c.train_snr_db_lo ? u(rng) : c.train_snr_db_lo;
            const double snr = db_to_linear(snr_db);
            const double sigma_v2 = noise_variance_for_snr(snr, 1.0, attenuation);
            const auto stack = frequency_response_stack(env, c.geometry.receivers, p, omega, c.channel_options());
            const auto w = draw_waveform(c.N, 1.0, derive_seed(seed, "dataset-waveform", i));
            Observation o = synthesize_observation(stack, w, sigma_v2, derive_seed(seed, "dataset-noise", i));
            o.snr = snr;
            set.observations[i] = std::move(o);
            set.labels[i] = p;
        });
        return set;
    }

    namespace detail
    {
        inline SampleSet errors_to_samples(const std::vector<Vec3> &est, const Vec3 &truth, std::string label)
        {
            SampleSet s(3, std::move(label));
            s.mutable_coords().reserve(est.size() * 3);
            for (const auto &e : est)
                s.push_back(Vec3(e - truth));
            return s;
        }

        // Estimator abstraction for the Monte Carlo loop: maps a batch of observations (one snr
        // point) to position estimates.
        using BatchLocalizer = std::function<std::vector<Vec3>(const std::vector<Observation> &, double sigma_v2)>;

        struct TrialDraws
        {
            std::vector<Observation> q, p;
        };

        // Trial t uses waveform and noise seeds indexed by t alone, shared between the Q and P
        // observations and across snr points; only the noise scale changes.
        inline TrialDraws draw_trials(const ExperimentConfig &c, const FrequencyResponseStack &hQ,
                                      const FrequencyResponseStack &hP, double sigma_v2, double snr,
                                      std::string_view stage, int workers, bool with_p = true)
        {
            const std::string ws = std::string(stage) + "-waveform", ns = std::string(stage) + "-noise";
            TrialDraws d;
            const auto T = static_cast<std::size_t>(c.trials);
            d.q.resize(T);
            d.p.resize(with_p ? T : 0);
            parallel_for(T, workers, [&](std::size_t t) {
                const auto w = draw_waveform(c.N, 1.0, derive_seed(c.seed, ws, t));
                const auto noise_seed = derive_seed(c.seed, ns, t);
                d.q[t] = synthesize_observation(hQ, w, sigma_v2, noise_seed);
                d.q[t].snr = snr;
                if (with_p)
                {
                    d.p[t] = synthesize_observation(hP, w, sigma_v2, noise_seed);
                    d.p[t].snr = snr;
                }
            });
            return d;
        }

        inline EstimatorCurve monte_carlo_curve(const ExperimentConfig &c, const std::string &name,
                                                const FrequencyResponseStack &hQ, const FrequencyResponseStack &hP,
                                                const Vec3 &source, double attenuation, const BatchLocalizer &locate,
                                                int workers)
        {
            EstimatorCurve curve;
            curve.estimator = name;
            for (std::size_t i = 0; i < c.snr_db.size(); ++i)
            {
                const double snr_db = c.snr_db[i];
                const double snr = db_to_linear(snr_db);
                const double sigma_v2 = noise_variance_for_snr(snr, 1.0, attenuation);
                const std::string tag = name + "@" + detail::format_double(snr_db) + "dB";

                const auto draws = run_stage("trials " + tag, c.seed, [&] {
                    return draw_trials(c, hQ, hP, sigma_v2, snr, "trial", workers);
                });
                const auto est_q = run_stage("localize-Q " + tag, c.seed, [&] { return locate(draws.q, sigma_v2); });
                const auto est_p = run_stage("localize-P " + tag, c.seed, [&] { return locate(draws.p, sigma_v2); });
                const SampleSet err_q = errors_to_samples(est_q, source, "Q");
                const SampleSet err_p = errors_to_samples(est_p, source, "P");

                PointDiagnostics diag;
                diag.sigma_v2 = sigma_v2;
                diag.snr_raw = 1.0 / sigma_v2;
                // The divergence estimate needs a Q sample independent of the P trials.
                const auto reference = run_stage("reference " + tag, c.seed, [&] {
                    const auto extra = draw_trials(c, hQ, hP, sigma_v2, snr, "reference", workers, false);
                    return errors_to_samples(locate(extra.q, sigma_v2), source, "Q-reference");
                });
                const BoundEvaluation bound = run_stage("bound " + tag, c.seed, [&] {
                    if (c.independent_bound_samples)
                        return strong_bound(reference, err_p, c.k_nn, false);
                    return strong_bound(err_q, err_p, reference, c.k_nn);
                });
                const ErrorMoments mq = error_moments(err_q);
                diag.mse_q = mq.mse;
                diag.mse_p = bound.mse_P;
                diag.var_q = bound.var_Q;
                diag.csd = bound.csd;

                const auto mismatch = run_stage("divergence " + tag, c.seed,
                                                [&] { return mismatch_report(hQ, hP, 1.0, sigma_v2, true); });
                diag.delta2_exact = mismatch.csd_exact ? mismatch.csd_exact->value() : 0.0;

                CurvePoint pt;
                pt.snr_db = snr_db;
                pt.rmse_q = std::sqrt(mq.mse);
                pt.rmse_p = std::sqrt(bound.mse_P);
                pt.bound_strong = std::sqrt(bound.strong_bound);
                pt.bound_weak = std::sqrt(weak_bound(bound.mse_Q, bound.var_Q, mismatch.delta2_closed));
                pt.delta2 = mismatch.delta2_closed.value();
                pt.csd_estimate = bound.csd.clamped;
                pt.condition_ok = mismatch.gamma.condition_ok;
                pt.trials = c.trials;
                pt.seed = c.seed;
                curve.points.push_back(pt);
                curve.diagnostics.push_back(diag);
            }
            return curve;
        }
    } // namespace detail

    // Full pipeline: source and channels, estimator set-up, and one Monte Carlo curve per
    // configured estimator. Results depend only on the config, never on `workers`.
    inline ExperimentResult run_experiment(const ExperimentConfig &c, int workers = 1)
    {
        run_stage("config", c.seed, [&] { validate_config(c); });
        ExperimentResult r;
        r.config = c;
        const Eigen::VectorXd omega = angular_frequencies(c.N, c.Ts);
        r.source = experiment_source(c);
        const auto opts = c.channel_options();
        const auto hQ = run_stage("channel-Q", c.seed, [&] {
            return frequency_response_stack(c.environment_Q, c.geometry.receivers, r.source, omega, opts);
        });
        const auto hP = run_stage("channel-P", c.seed, [&] {
            return frequency_response_stack(c.environment_P, c.geometry.receivers, r.source, omega, opts);
        });
        r.average_attenuation = run_stage("attenuation", c.seed, [&] { return experiment_attenuation(c); });
        r.limits = run_stage("limits", c.seed, [&] { return snr_limits(hQ, hP); });

        if (c.estimator == "ml-grid" || c.estimator == "both")
        {
            GridSpec grid;
            grid.box = c.geometry.volume;
            grid.step = c.grid_step;
            grid.refine_factor = c.refine_factor;
            grid.interpolate = c.interpolate;
            auto loc = run_stage("replicas", c.seed, [&] {
                return std::make_shared<MlGridLocalizer>(c.environment_Q, c.geometry.receivers, omega, grid, opts,
                                                         workers);
            });
            detail::BatchLocalizer batch = [&, loc](const std::vector<Observation> &obs, double sigma_v2) {
                loc->set_noise(1.0, sigma_v2);
                constexpr std::size_t chunk = 4 * MlGridLocalizer::batch;
                const std::size_t chunks = (obs.size() + chunk - 1) / chunk;
                std::vector<Vec3> out(obs.size());
                parallel_for(chunks, workers, [&](std::size_t ci) {
                    const std::size_t lo = ci * chunk, hi = std::min(obs.size(), lo + chunk);
                    const auto p = loc->locate_batch(std::span<const Observation>(obs.data() + lo, hi - lo));
                    std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
                });
                return out;
            };
            r.curves.push_back(detail::monte_carlo_curve(c, "ml-grid", hQ, hP, r.source, r.average_attenuation, batch,
                                                         workers));
        }
        if (c.estimator == "net" || c.estimator == "both")
        {
            const auto data_seed = derive_seed(c.seed, "training-data", 0);
            const auto train = run_stage("training-data", data_seed, [&] {
                return generate_dataset(c, c.environment_Q, static_cast<std::size_t>(c.training_size), data_seed,
                                        r.average_attenuation, workers);
            });
            const auto train_seed = derive_seed(c.seed, "training", 0);
            FeatureOptions fo;
            fo.attenuation = r.average_attenuation;
            auto result = run_stage("training", train_seed, [&] {
                NetModel m = make_net(feature_length(static_cast<int>(c.geometry.receivers.size()), c.N),
                                      c.geometry.volume, c.net, derive_seed(train_seed, "init", 0), fo);
                return train_net(train, std::move(m), train_seed);
            });
            const NetModel model = std::move(result.model);
            detail::BatchLocalizer batch = [&](const std::vector<Observation> &obs, double) {
                constexpr std::size_t chunk = 512;
                const std::size_t chunks = (obs.size() + chunk - 1) / chunk;
                std::vector<Vec3> out(obs.size());
                parallel_for(chunks, workers, [&](std::size_t ci) {
                    const std::size_t lo = ci * chunk, hi = std::min(obs.size(), lo + chunk);
                    const auto p = predict_batch(model, std::span<const Observation>(obs.data() + lo, hi - lo));
                    std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
                });
                return out;
            };
            auto curve = detail::monte_carlo_curve(c, "net", hQ, hP, r.source, r.average_attenuation, batch, workers);
            curve.loss_curve = std::move(result.loss_curve);
            r.curves.push_back(std::move(curve));
        }
        return r;
    }

    // ============================================================================================
    // Output
    // ============================================================================================

    inline std::string experiment_report(const ExperimentResult &r, const EstimatorCurve &curve)
    {
        using detail::format_double;
        std::ostringstream o;
        o << "uwloc " << version_string << "\n";
        o << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << "\n";
#if defined(__clang__)
        o << "compiler clang " << __clang_major__ << '.' << __clang_minor__ << "\n";
#elif defined(__GNUC__)
        o << "compiler gcc " << __GNUC__ << '.' << __GNUC_MINOR__ << "\n";
#endif
        o << "estimator " << curve.estimator << "\n";
        o << "seed " << r.config.seed << "\n";
        o << "trials " << r.config.trials << "\n";
        o << "snr_grid_db";
        for (double s : r.config.snr_db)
            o << ' ' << format_double(s);
        o << "\n";
        o << "source " << format_double(r.source[0]) << ' ' << format_double(r.source[1]) << ' '
          << format_double(r.source[2]) << "\n";
        o << "average_attenuation " << format_double(r.average_attenuation) << "\n";
        o << "high_snr_limit " << format_double(r.limits.high_snr_limit.value()) << "\n";
        o << "delta2_at_low_snr " << format_double(r.limits.delta2_low_snr.value()) << "\n";
        if (!curve.loss_curve.empty())
        {
            o << "training_loss_m2";
            for (double l : curve.loss_curve)
                o << ' ' << format_double(l);
            o << "\n";
        }
        o << "\n# per point: snr_db sigma_v2 snr_raw mse_q mse_p var_q csd_raw csd_clamped csd_excluded delta2_exact\n";
        for (std::size_t i = 0; i < curve.points.size(); ++i)
        {
            const auto &d = curve.diagnostics[i];
            o << format_double(curve.points[i].snr_db) << ' ' << format_double(d.sigma_v2) << ' '
              << format_double(d.snr_raw) << ' ' << format_double(d.mse_q) << ' ' << format_double(d.mse_p) << ' '
              << format_double(d.var_q) << ' ' << format_double(d.csd.raw) << ' ' << format_double(d.csd.clamped)
              << ' ' << d.csd.excluded_points << ' ' << format_double(d.delta2_exact) << "\n";
        }
        o << "\n# config\n" << experiment_to_json(r.config).dump(2) << "\n";
        return o.str();
    }

    // Writes curve.csv, curve.dat (whitespace separated, '#' header) and report.txt into `dir`.
    inline void emit_outputs(std::span<const CurvePoint> points, const std::string &report,
                             const std::filesystem::path &dir)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create '" + dir.string() + "': " + ec.message());
        auto write = [&](const std::string &name, const std::string &text) {
            std::ofstream out(dir / name, std::ios::binary);
            if (!out)
                throw IoError("cannot open '" + (dir / name).string() + "' for writing");
            out << text;
            out.flush();
            if (!out)
                throw IoError("write failed on '" + (dir / name).string() + "'");
        };
        write("curve.csv", curve_to_csv(points));
        std::string dat = "# snr_db rmse_q rmse_p bound_strong bound_weak delta2 csd_estimate condition_ok trials seed\n";
        for (const auto &p : points)
        {
            using detail::format_double;
            dat += format_double(p.snr_db) + ' ' + format_double(p.rmse_q) + ' ' + format_double(p.rmse_p) + ' ' +
                   format_double(p.bound_strong) + ' ' + format_double(p.bound_weak) + ' ' +
                   format_double(p.delta2) + ' ' + format_double(p.csd_estimate) + ' ' +
                   (p.condition_ok ? "1" : "0") + ' ' + std::to_string(p.trials) + ' ' + std::to_string(p.seed) +
                   '\n';
        }
        write("curve.dat", dat);
        write("report.txt", report);
    }

    // One directory per estimator when several ran, else the output directory itself.
    inline void emit_experiment(const ExperimentResult &r, const std::filesystem::path &dir)
    {
        for (const auto &curve : r.curves)
        {
            const auto target = r.curves.size() > 1 ? dir / curve.estimator : dir;
            emit_outputs(curve.points, experiment_report(r, curve), target);
        }
    }
} // namespace uwloc

#endif
