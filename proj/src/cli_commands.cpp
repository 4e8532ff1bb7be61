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

#include "cli_commands.hpp"

#include <uwloc/uwloc.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwloc::cli
{
    namespace
    {
        using nlohmann::json;
        namespace fs = std::filesystem;

        struct Globals
        {
            std::string config;
            std::optional<std::uint64_t> seed;
            int workers = 1;
            std::string out;
        };

        ExperimentConfig load(const Globals &g)
        {
            if (g.config.empty())
                throw ConfigError("--config is required for this command");
            auto c = load_experiment_config(g.config);
            if (g.seed)
                c.seed = *g.seed;
            return c;
        }

        fs::path out_dir(const Globals &g, const ExperimentConfig *c)
        {
            fs::path dir = !g.out.empty() ? fs::path(g.out) : c ? fs::path(c->output_dir) : fs::path("out");
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec)
                throw IoError("cannot create '" + dir.string() + "': " + ec.message());
            return dir;
        }

        const Environment &pick_environment(const ExperimentConfig &c, const std::string &which)
        {
            if (which == "Q")
                return c.environment_Q;
            if (which == "P")
                return c.environment_P;
            throw ConfigError("--env must be Q or P");
        }

        void write_text(const fs::path &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw IoError("cannot open '" + path.string() + "' for writing");
            out << text;
            out.flush();
            if (!out)
                throw IoError("write failed on '" + path.string() + "'");
        }

        std::optional<Vec3> as_point(const std::vector<double> &v)
        {
            if (v.empty())
                return std::nullopt;
            return Vec3(v[0], v[1], v[2]);
        }

        // ----------------------------------------------------------------------------------------

        struct SimulateArgs
        {
            std::string env = "Q";
            std::size_t count = 1;
            std::optional<double> snr_db;
            std::vector<double> source;
        };

        int simulate(const Globals &g, const SimulateArgs &a, std::ostream &out)
        {
            const auto c = load(g);
            const auto &env = pick_environment(c, a.env);
            const Vec3 src = as_point(a.source).value_or(experiment_source(c));
            if (!c.geometry.volume.contains(src))
                throw ConfigError("--source lies outside the volume of interest");
            const double snr_db = a.snr_db.value_or(c.snr_db.front());
            const double att = run_stage("attenuation", c.seed, [&] { return experiment_attenuation(c); });
            const double v2 = noise_variance_for_snr(db_to_linear(snr_db), 1.0, att);
            const auto omega = angular_frequencies(c.N, c.Ts);
            const auto stack = run_stage("channel", c.seed, [&] {
                return frequency_response_stack(env, c.geometry.receivers, src, omega, c.channel_options());
            });
            std::vector<Observation> obs(a.count);
            parallel_for(a.count, g.workers, [&](std::size_t i) {
                const auto w = draw_waveform(c.N, 1.0, derive_seed(c.seed, "simulate-waveform", i));
                obs[i] = synthesize_observation(stack, w, v2, derive_seed(c.seed, "simulate-noise", i));
                obs[i].snr = db_to_linear(snr_db);
            });
            const auto dir = out_dir(g, &c);
            write_observations(dir / "observations.bin", obs, stack.receivers(), stack.bins(), c.seed);
            write_positions_csv(dir / "positions.csv", std::vector<Vec3>(a.count, src));
            out << "wrote " << a.count << " observations (env " << env.name << ", snr " << snr_db << " dB, seed "
                << c.seed << ") to " << dir.string() << "\n";
            return exit_ok;
        }

        struct GenDataArgs
        {
            std::string env = "Q";
            std::optional<std::size_t> count;
        };

        int gen_data(const Globals &g, const GenDataArgs &a, std::ostream &out)
        {
            const auto c = load(g);
            const auto &env = pick_environment(c, a.env);
            const std::size_t J = a.count.value_or(static_cast<std::size_t>(c.training_size));
            const double att = run_stage("attenuation", c.seed, [&] { return experiment_attenuation(c); });
            const auto seed = derive_seed(c.seed, "training-data", 0);
            const auto set = run_stage("gen-data", seed, [&] { return generate_dataset(c, env, J, seed, att, g.workers); });
            const auto dir = out_dir(g, &c);
            write_training_set(dir, set);
            out << "wrote " << J << " labeled examples (env " << env.name << ", seed " << seed << ") to "
                << dir.string() << "\n";
            return exit_ok;
        }

        struct TrainArgs
        {
            std::string data;
        };

        int train(const Globals &g, const TrainArgs &a, std::ostream &out)
        {
            const auto c = load(g);
            const double att = run_stage("attenuation", c.seed, [&] { return experiment_attenuation(c); });
            TrainingSet set;
            if (!a.data.empty())
                set = read_training_set(a.data);
            else
            {
                const auto seed = derive_seed(c.seed, "training-data", 0);
                set = run_stage("training-data", seed, [&] {
                    return generate_dataset(c, c.environment_Q, static_cast<std::size_t>(c.training_size), seed, att,
                                            g.workers);
                });
            }
            if (set.size() == 0)
                throw ConfigError("training set is empty");
            const auto train_seed = derive_seed(c.seed, "training", 0);
            FeatureOptions fo;
            fo.attenuation = att;
            const auto &o0 = set.observations.front();
            const auto result = run_stage("training", train_seed, [&] {
                auto m = make_net(feature_length(o0.L, o0.N), c.geometry.volume, c.net,
                                  derive_seed(train_seed, "init", 0), fo);
                return train_net(set, std::move(m), train_seed);
            });
            const auto dir = out_dir(g, &c);
            save_model(dir / "model.bin", result.model);
            std::string loss = "epoch,mse_m2\n";
            for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
                loss += std::to_string(e) + ',' + detail::format_double(result.loss_curve[e]) + '\n';
            write_text(dir / "loss.csv", loss);
            out << "trained on " << set.size() << " examples, final epoch mse "
                << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back()) << " m^2; model written to "
                << (dir / "model.bin").string() << "\n";
            return exit_ok;
        }

        struct LocalizeArgs
        {
            std::string observations;
            std::string estimator;
            std::string model;
            std::string env = "Q";
        };

        int localize(const Globals &g, const LocalizeArgs &a, std::ostream &out)
        {
            const auto c = load(g);
            const auto dump = read_observations(a.observations);
            const std::string est = a.estimator.empty() ? (c.estimator == "net" ? "net" : "ml-grid") : a.estimator;
            std::vector<Vec3> positions(dump.observations.size());
            if (est == "ml-grid")
            {
                const auto &env = pick_environment(c, a.env);
                const auto omega = angular_frequencies(c.N, c.Ts);
                if (dump.N != c.N || dump.L != static_cast<int>(c.geometry.receivers.size()))
                    throw ConfigError("observation shape differs from the configured receivers and bins");
                GridSpec grid;
                grid.box = c.geometry.volume;
                grid.step = c.grid_step;
                grid.refine_factor = c.refine_factor;
                grid.interpolate = c.interpolate;
                MlGridLocalizer loc(env, c.geometry.receivers, omega, grid, c.channel_options(), g.workers);
                // one pass per distinct noise level
                std::map<double, std::vector<std::size_t>> by_noise;
                for (std::size_t i = 0; i < dump.observations.size(); ++i)
                    by_noise[dump.observations[i].sigma_v2].push_back(i);
                for (const auto &[v2, idx] : by_noise)
                {
                    if (!(v2 > 0.0))
                        throw ConfigError("observations without noise cannot be localized by the ML grid");
                    loc.set_noise(1.0, v2);
                    parallel_for(idx.size(), g.workers,
                                 [&](std::size_t j) { positions[idx[j]] = loc.locate(dump.observations[idx[j]]); });
                }
            }
            else if (est == "net")
            {
                if (a.model.empty())
                    throw ConfigError("--model is required for the net estimator");
                const auto m = load_model(a.model);
                positions = predict_batch(m, dump.observations);
            }
            else
                throw ConfigError("--estimator must be ml-grid or net");
            const auto dir = out_dir(g, &c);
            write_positions_csv(dir / "estimates.csv", positions);
            out << "localized " << positions.size() << " observations with " << est << "; estimates in "
                << (dir / "estimates.csv").string() << "\n";
            return exit_ok;
        }

        int bound(const Globals &g, std::ostream &out)
        {
            const auto c = load(g);
            const auto omega = angular_frequencies(c.N, c.Ts);
            const Vec3 src = experiment_source(c);
            const auto opts = c.channel_options();
            const auto hQ = run_stage("channel-Q", c.seed, [&] {
                return frequency_response_stack(c.environment_Q, c.geometry.receivers, src, omega, opts);
            });
            const auto hP = run_stage("channel-P", c.seed, [&] {
                return frequency_response_stack(c.environment_P, c.geometry.receivers, src, omega, opts);
            });
            const double att = run_stage("attenuation", c.seed, [&] { return experiment_attenuation(c); });
            const auto limits = snr_limits(hQ, hP);

            std::string csv = "snr_db,snr_raw,delta2_closed,chi2_exact,condition_ok,failing_bins\n";
            bool all_ok = true;
            for (double snr_db : c.snr_db)
            {
                const double v2 = noise_variance_for_snr(db_to_linear(snr_db), 1.0, att);
                const auto rep = run_stage("bound", c.seed, [&] { return mismatch_report(hQ, hP, 1.0, v2, true); });
                int failing = 0;
                for (bool ok : rep.gamma.bin_ok)
                    failing += ok ? 0 : 1;
                all_ok = all_ok && rep.gamma.condition_ok;
                csv += detail::format_double(snr_db) + ',' + detail::format_double(rep.snr) + ',' +
                       detail::format_double(rep.delta2_closed.value()) + ',' +
                       detail::format_double(rep.csd_exact ? rep.csd_exact->value() : 0.0) + ',' +
                       (rep.gamma.condition_ok ? "1" : "0") + ',' + std::to_string(failing) + '\n';
            }
            const auto dir = out_dir(g, &c);
            write_text(dir / "bound.csv", csv);

            json summary{{"source", {src[0], src[1], src[2]}},
                         {"seed", c.seed},
                         {"average_attenuation", att},
                         {"high_snr_limit", detail::format_double(limits.high_snr_limit.value())},
                         {"delta2_at_low_snr", limits.delta2_low_snr.value()},
                         {"rho", limits.rho},
                         {"condition_ok_everywhere", all_ok}};
            write_text(dir / "bound.json", summary.dump(2) + "\n");
            out << summary.dump(2) << "\n";
            if (!all_ok)
            {
                out << "finiteness condition violated at one or more snr points; see " << (dir / "bound.csv").string()
                    << "\n";
                return exit_numerical;
            }
            return exit_ok;
        }

        struct CsdArgs
        {
            std::string p, q;
            std::optional<int> k;
            bool paired = false;
        };

        int estimate(const Globals &g, const CsdArgs &a, std::ostream &out)
        {
            int k = 5;
            if (!g.config.empty())
                k = load(g).k_nn;
            if (a.k)
                k = *a.k;
            const auto P = read_samples_csv(a.p, "P");
            const auto Q = read_samples_csv(a.q, "Q");
            const auto est = estimate_csd(P, Q, k, a.paired);
            json j{{"n", est.n},   {"m", est.m},           {"k", est.k},
                   {"d", est.d},   {"raw", est.raw},       {"clamped", est.clamped},
                   {"paired", a.paired}, {"excluded_points", est.excluded_points}};
            out << j.dump(2) << "\n";
            if (!g.out.empty())
                write_text(out_dir(g, nullptr) / "csd.json", j.dump(2) + "\n");
            return exit_ok;
        }

        struct ExperimentArgs
        {
            std::string estimator;
            std::optional<int> trials;
        };

        int experiment(const Globals &g, const ExperimentArgs &a, std::ostream &out)
        {
            auto c = load(g);
            if (!a.estimator.empty())
                c.estimator = a.estimator;
            if (a.trials)
                c.trials = *a.trials;
            const auto result = run_experiment(c, g.workers);
            const auto dir = out_dir(g, &c);
            emit_experiment(result, dir);
            for (const auto &curve : result.curves)
            {
                out << curve.estimator << ": " << curve.points.size() << " snr points, " << c.trials
                    << " trials each, seed " << c.seed << "\n";
                for (const auto &p : curve.points)
                    out << "  " << detail::format_double(p.snr_db) << " dB  rmse_q " << p.rmse_q << "  rmse_p "
                        << p.rmse_p << "  strong " << p.bound_strong << "  weak "
                        << detail::format_double(p.bound_weak) << "\n";
            }
            out << "outputs in " << dir.string() << "\n";
            return exit_ok;
        }
    } // namespace

    int exit_code_for(const std::exception &e)
    {
        if (dynamic_cast<const ConfigError *>(&e))
            return exit_config;
        if (dynamic_cast<const IoError *>(&e))
            return exit_io;
        if (dynamic_cast<const NumericalError *>(&e) || dynamic_cast<const StructureError *>(&e) ||
            dynamic_cast<const EstimationError *>(&e) || dynamic_cast<const DegenerateGeometryError *>(&e))
            return exit_numerical;
        if (dynamic_cast<const std::invalid_argument *>(&e))
            return exit_config;
        if (dynamic_cast<const std::filesystem::filesystem_error *>(&e))
            return exit_io;
        return exit_numerical;
    }

    int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Direct underwater source localization with environment-mismatch bounds", "uwloc_cli"};
        app.set_version_flag("--version", version_string);
        app.require_subcommand(1);
        app.fallthrough();

        Globals g;
        app.add_option("--config", g.config, "experiment configuration (JSON)");
        app.add_option("--seed", g.seed, "master seed; overrides the configured one");
        app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);
        app.add_option("--out", g.out, "output directory; defaults to the configured one");

        SimulateArgs sim;
        auto *c_sim = app.add_subcommand("simulate", "synthesize observations of one source");
        c_sim->add_option("--env", sim.env, "Q or P")->capture_default_str();
        c_sim->add_option("--count", sim.count, "number of observations")->capture_default_str();
        c_sim->add_option("--snr-db", sim.snr_db, "normalized snr; defaults to the first grid point");
        c_sim->add_option("--source", sim.source, "source position x y z")->expected(3);

        GenDataArgs gd;
        auto *c_gd = app.add_subcommand("gen-data", "write a labeled training set");
        c_gd->add_option("--env", gd.env, "Q or P")->capture_default_str();
        c_gd->add_option("--count", gd.count, "number of examples; defaults to training_size");

        TrainArgs tr;
        auto *c_tr = app.add_subcommand("train", "train the network localizer");
        c_tr->add_option("--data", tr.data, "training set directory; generated from the config when absent");

        LocalizeArgs lo;
        auto *c_lo = app.add_subcommand("localize", "estimate source positions from an observation dump");
        c_lo->add_option("--observations", lo.observations, "observation dump")->required();
        c_lo->add_option("--estimator", lo.estimator, "ml-grid or net");
        c_lo->add_option("--model", lo.model, "trained model file for the net estimator");
        c_lo->add_option("--env", lo.env, "presumed environment for the ML grid (Q or P)")->capture_default_str();

        auto *c_bd = app.add_subcommand("bound", "closed-form and exact divergence for the configured pair");

        CsdArgs cs;
        auto *c_cs = app.add_subcommand("estimate-csd", "k-NN chi-square divergence between two sample files");
        c_cs->add_option("--p", cs.p, "CSV samples from P")->required();
        c_cs->add_option("--q", cs.q, "CSV samples from Q")->required();
        c_cs->add_option("--k", cs.k, "neighbor count; defaults to k_nn or 5");
        c_cs->add_flag("--paired", cs.paired, "row i of both files comes from the same random draws");

        ExperimentArgs ex;
        auto *c_ex = app.add_subcommand("experiment", "Monte Carlo rmse and bound curves");
        c_ex->add_option("--estimator", ex.estimator, "ml-grid, net or both; overrides the config");
        c_ex->add_option("--trials", ex.trials, "trials per snr point; overrides the config");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? exit_ok : exit_config;
        }

        try
        {
            if (c_sim->parsed())
                return simulate(g, sim, out);
            if (c_gd->parsed())
                return gen_data(g, gd, out);
            if (c_tr->parsed())
                return train(g, tr, out);
            if (c_lo->parsed())
                return localize(g, lo, out);
            if (c_bd->parsed())
                return bound(g, out);
            if (c_cs->parsed())
                return estimate(g, cs, out);
            if (c_ex->parsed())
                return experiment(g, ex, out);
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return exit_code_for(e);
        }
        return exit_config;
    }
} // namespace uwloc::cli
