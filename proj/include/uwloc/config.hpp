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

#ifndef UWLOC_CONFIG_HPP
#define UWLOC_CONFIG_HPP

#include "env_channel.hpp"
#include "net.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace uwloc
{
    using json = nlohmann::json;

    // Everything one experiment run needs. JSON keys match the field names.
    struct ExperimentConfig
    {
        Environment environment_Q;
        Environment environment_P;
        Geometry geometry;
        int N = 64;
        double Ts = 0.004;
        std::vector<double> snr_db;
        int trials = 10000;
        std::string estimator = "ml-grid"; // ml-grid | net | both
        int k_nn = 5;
        std::uint64_t seed = 1;
        std::string output_dir = "out";
        std::optional<Vec3> source; // drawn uniformly in the volume from the seed when absent
        bool independent_bound_samples = false;
        int attenuation_samples = 10000;
        double min_distance = 10.0;

        // ML grid
        Vec3 grid_step = Vec3::Constant(2.0);
        int refine_factor = 0;
        bool interpolate = true;

        // network
        int training_size = 20000;
        double train_snr_db_lo = 10.0;
        double train_snr_db_hi = 30.0;
        NetHyperparameters net;

        ChannelOptions channel_options() const { return ChannelOptions{min_distance}; }
    };

    inline std::vector<double> default_snr_grid()
    {
        std::vector<double> g;
        for (int db = -10; db <= 30; db += 2)
            g.push_back(db);
        return g;
    }

    namespace detail
    {
        inline Vec3 vec3_from_json(const json &j, const std::string &what)
        {
            if (!j.is_array() || j.size() != 3)
                throw ConfigError(what + ": expected an array of three numbers");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        inline cd complex_from_json(const json &j, const std::string &what)
        {
            if (j.is_number())
                return {j.get<double>(), 0.0};
            if (j.is_array() && j.size() == 2)
                return {j[0].get<double>(), j[1].get<double>()};
            throw ConfigError(what + ": expected a number or [re, im]");
        }

        inline void reject_unknown_keys(const json &j, const std::set<std::string> &known, const std::string &where)
        {
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known.count(it.key()))
                    throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }

        inline json vec3_to_json(const Vec3 &v) { return json::array({v[0], v[1], v[2]}); }
    } // namespace detail

    inline Environment environment_from_json(const json &j, const std::string &fallback_name = "environment")
    {
        if (!j.is_object())
            throw ConfigError(fallback_name + ": expected an object");
        detail::reject_unknown_keys(j,
                                    {"name", "water_depth", "ssp", "surface_reflection", "bottom_reflection",
                                     "absorption_db_per_m", "ray_budget"},
                                    fallback_name);
        try
        {
            Environment env;
            env.name = j.value("name", fallback_name);
            env.water_depth = j.at("water_depth").get<double>();
            for (const auto &p : j.at("ssp"))
            {
                if (!p.is_array() || p.size() != 2)
                    throw ConfigError(fallback_name + ".ssp: entries must be [depth, speed]");
                env.ssp.push_back({p[0].get<double>(), p[1].get<double>()});
            }
            if (j.contains("surface_reflection"))
                env.surface_reflection = detail::complex_from_json(j["surface_reflection"], fallback_name + ".surface_reflection");
            if (j.contains("bottom_reflection"))
                env.bottom_reflection = detail::complex_from_json(j["bottom_reflection"], fallback_name + ".bottom_reflection");
            env.absorption_db_per_m = j.value("absorption_db_per_m", 0.0);
            env.ray_budget = j.value("ray_budget", 3);
            const auto errors = validate_environment(env);
            if (!errors.empty())
                throw ConfigError(fallback_name + ": " + errors.front());
            return env;
        }
        catch (const json::exception &e)
        {
            throw ConfigError(fallback_name + ": " + e.what());
        }
    }

    inline json environment_to_json(const Environment &env)
    {
        json ssp = json::array();
        for (const auto &p : env.ssp)
            ssp.push_back(json::array({p.depth, p.speed}));
        return json{{"name", env.name},
                    {"water_depth", env.water_depth},
                    {"ssp", ssp},
                    {"surface_reflection", json::array({env.surface_reflection.real(), env.surface_reflection.imag()})},
                    {"bottom_reflection", json::array({env.bottom_reflection.real(), env.bottom_reflection.imag()})},
                    {"absorption_db_per_m", env.absorption_db_per_m},
                    {"ray_budget", env.ray_budget}};
    }

    inline Geometry geometry_from_json(const json &j)
    {
        try
        {
            Geometry g;
            for (const auto &r : j.at("receivers"))
                g.receivers.push_back(detail::vec3_from_json(r, "receivers"));
            const auto &v = j.at("volume");
            g.volume.lo = detail::vec3_from_json(v.at("lo"), "volume.lo");
            g.volume.hi = detail::vec3_from_json(v.at("hi"), "volume.hi");
            return g;
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("geometry: ") + e.what());
        }
    }

    inline ExperimentConfig experiment_from_json(const json &j)
    {
        if (!j.is_object())
            throw ConfigError("config: expected a JSON object");
        detail::reject_unknown_keys(
            j,
            {"environment", "environment_Q", "environment_P", "receivers", "volume", "N", "Ts", "snr_db", "trials",
             "estimator", "k_nn", "seed", "output_dir", "source", "independent_bound_samples", "attenuation_samples",
             "min_distance", "grid_step", "refine_factor", "interpolate", "training_size", "train_snr_db", "net"},
            "config");
        try
        {
            ExperimentConfig c;
            // A single "environment" stands for a matched pair.
            if (j.contains("environment"))
            {
                if (j.contains("environment_Q") || j.contains("environment_P"))
                    throw ConfigError("config: give either 'environment' or the Q/P pair, not both");
                c.environment_Q = environment_from_json(j["environment"], "environment");
                c.environment_P = c.environment_Q;
            }
            else
            {
                c.environment_Q = environment_from_json(j.at("environment_Q"), "environment_Q");
                c.environment_P = environment_from_json(j.at("environment_P"), "environment_P");
            }
            c.geometry = geometry_from_json(j);
            c.N = j.value("N", c.N);
            c.Ts = j.value("Ts", c.Ts);
            c.snr_db = j.contains("snr_db") ? j["snr_db"].get<std::vector<double>>() : default_snr_grid();
            c.trials = j.value("trials", c.trials);
            c.estimator = j.value("estimator", c.estimator);
            c.k_nn = j.value("k_nn", c.k_nn);
            c.seed = j.value("seed", c.seed);
            c.output_dir = j.value("output_dir", c.output_dir);
            if (j.contains("source") && !j["source"].is_null())
                c.source = detail::vec3_from_json(j["source"], "source");
            c.independent_bound_samples = j.value("independent_bound_samples", false);
            c.attenuation_samples = j.value("attenuation_samples", c.attenuation_samples);
            c.min_distance = j.value("min_distance", c.min_distance);
            if (j.contains("grid_step"))
            {
                if (j["grid_step"].is_number())
                    c.grid_step = Vec3::Constant(j["grid_step"].get<double>());
                else
                    c.grid_step = detail::vec3_from_json(j["grid_step"], "grid_step");
            }
            c.refine_factor = j.value("refine_factor", c.refine_factor);
            c.interpolate = j.value("interpolate", c.interpolate);
            c.training_size = j.value("training_size", c.training_size);
            if (j.contains("train_snr_db"))
            {
                const auto r = j["train_snr_db"].get<std::vector<double>>();
                if (r.size() != 2)
                    throw ConfigError("train_snr_db: expected [lo, hi]");
                c.train_snr_db_lo = r[0];
                c.train_snr_db_hi = r[1];
            }
            if (j.contains("net"))
            {
                const auto &n = j["net"];
                detail::reject_unknown_keys(n, {"hidden", "learning_rate", "epochs", "batch_size"}, "net");
                c.net.hidden = n.value("hidden", c.net.hidden);
                c.net.learning_rate = n.value("learning_rate", c.net.learning_rate);
                c.net.epochs = n.value("epochs", c.net.epochs);
                c.net.batch_size = n.value("batch_size", c.net.batch_size);
            }
            return c;
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    inline json experiment_to_json(const ExperimentConfig &c)
    {
        json j;
        j["environment_Q"] = environment_to_json(c.environment_Q);
        j["environment_P"] = environment_to_json(c.environment_P);
        json rx = json::array();
        for (const auto &r : c.geometry.receivers)
            rx.push_back(detail::vec3_to_json(r));
        j["receivers"] = rx;
        j["volume"] = {{"lo", detail::vec3_to_json(c.geometry.volume.lo)}, {"hi", detail::vec3_to_json(c.geometry.volume.hi)}};
        j["N"] = c.N;
        j["Ts"] = c.Ts;
        j["snr_db"] = c.snr_db;
        j["trials"] = c.trials;
        j["estimator"] = c.estimator;
        j["k_nn"] = c.k_nn;
        j["seed"] = c.seed;
        j["output_dir"] = c.output_dir;
        j["source"] = c.source ? detail::vec3_to_json(*c.source) : json(nullptr);
        j["independent_bound_samples"] = c.independent_bound_samples;
        j["attenuation_samples"] = c.attenuation_samples;
        j["min_distance"] = c.min_distance;
        j["grid_step"] = detail::vec3_to_json(c.grid_step);
        j["refine_factor"] = c.refine_factor;
        j["interpolate"] = c.interpolate;
        j["training_size"] = c.training_size;
        j["train_snr_db"] = {c.train_snr_db_lo, c.train_snr_db_hi};
        j["net"] = {{"hidden", c.net.hidden},
                    {"learning_rate", c.net.learning_rate},
                    {"epochs", c.net.epochs},
                    {"batch_size", c.net.batch_size}};
        return j;
    }

    // Throws ConfigError with the first problem found.
    inline void validate_config(const ExperimentConfig &c)
    {
        for (const auto *env : {&c.environment_Q, &c.environment_P})
        {
            const auto e = validate_environment(*env);
            if (!e.empty())
                throw ConfigError(env->name + ": " + e.front());
            const auto g = validate_geometry(*env, c.geometry);
            if (!g.empty())
                throw ConfigError("geometry: " + g.front());
        }
        if (c.snr_db.empty())
            throw ConfigError("snr grid must not be empty");
        if (c.trials < 1)
            throw ConfigError("trials must be >= 1");
        if (c.estimator != "ml-grid" && c.estimator != "net" && c.estimator != "both")
            throw ConfigError("estimator must be one of ml-grid, net, both");
        if (c.k_nn < 2)
            throw ConfigError("k_nn must be >= 2");
        if (c.N < 1 || !(c.Ts > 0.0))
            throw ConfigError("need N >= 1 and Ts > 0");
        if (c.attenuation_samples < 1)
            throw ConfigError("attenuation_samples must be >= 1");
        if ((c.grid_step.array() <= 0.0).any())
            throw ConfigError("grid steps must be positive");
        if (c.source && !c.geometry.volume.contains(*c.source))
            throw ConfigError("source lies outside the volume of interest");
        if (c.estimator != "ml-grid")
        {
            if (c.training_size < c.net.batch_size)
                throw ConfigError("training_size must be at least one batch");
            if (c.train_snr_db_hi < c.train_snr_db_lo)
                throw ConfigError("train_snr_db must be [lo, hi] with lo <= hi");
        }
    }

    inline ExperimentConfig load_experiment_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open config '" + path.string() + "'");
        json j;
        try
        {
            j = json::parse(in, nullptr, true, true);
        }
        catch (const json::exception &e)
        {
            throw ConfigError("config '" + path.string() + "': " + e.what());
        }
        auto c = experiment_from_json(j);
        validate_config(c);
        return c;
    }
} // namespace uwloc

#endif
