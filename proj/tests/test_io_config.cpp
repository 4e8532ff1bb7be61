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

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

#include <fstream>

using namespace uwloc;
using json = nlohmann::json;

namespace
{
    void write_text(const std::filesystem::path &p, const std::string &text)
    {
        std::ofstream out(p);
        out << text;
    }

    Observation random_observation(gen::Gen &g, int L, int N)
    {
        Observation o;
        o.L = L;
        o.N = N;
        o.sigma_v2 = g.log_uniform(1e-3, 1.0);
        o.snr = g.uniform(0.0, 100.0);
        o.x = g.complex_vector(L * N);
        return o;
    }

    json minimal_config()
    {
        return json::parse(R"({
            "environment": {"water_depth": 100, "ssp": [[0, 1500], [100, 1500]]},
            "receivers": [[-120, -100, 20], [130, -90, 70], [110, 140, 35], [-100, 120, 85]],
            "volume": {"lo": [-10, -10, 40], "hi": [10, 10, 60]}
        })");
    }
}

// ================================================================================================
// Binary and CSV round trips
// ================================================================================================

TEST_CASE("IO - observation dump round trip is exact")
{
    gen::TempDir dir("obs");
    gen::Gen g(701);
    std::vector<Observation> obs;
    for (int i = 0; i < 7; ++i)
        obs.push_back(random_observation(g, 3, 5));
    write_observations(dir.path() / "o.bin", obs, 3, 5, 99);
    const auto d = read_observations(dir.path() / "o.bin");
    CHECK(d.L == 3);
    CHECK(d.N == 5);
    CHECK(d.seed == 99);
    REQUIRE(d.observations.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i)
    {
        CHECK(d.observations[i].x == obs[i].x);
        CHECK(d.observations[i].sigma_v2 == obs[i].sigma_v2);
        CHECK(d.observations[i].snr == obs[i].snr);
    }
    CHECK_THROWS(write_observations(dir.path() / "bad.bin", obs, 2, 5, 0));
}

TEST_CASE("IO - truncated, foreign and missing files are IO errors")
{
    gen::TempDir dir("obs-bad");
    gen::Gen g(702);
    std::vector<Observation> obs{random_observation(g, 2, 2)};
    write_observations(dir.path() / "o.bin", obs, 2, 2, 1);
    const auto size = std::filesystem::file_size(dir.path() / "o.bin");
    std::filesystem::resize_file(dir.path() / "o.bin", size - 3);
    CHECK_THROWS_AS(read_observations(dir.path() / "o.bin"), IoError);
    write_text(dir.path() / "text.bin", "definitely not a dump");
    CHECK_THROWS_AS(read_observations(dir.path() / "text.bin"), IoError);
    CHECK_THROWS_AS(read_observations(dir.path() / "absent.bin"), IoError);
    CHECK_THROWS_AS(load_model(dir.path() / "o.bin"), IoError);
}

TEST_CASE("IO - positions CSV round trip is exact")
{
    gen::TempDir dir("pos");
    gen::Gen g(703);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i)
        pts.emplace_back(g.normal() * 1e3, g.normal() * 1e-7, g.normal());
    write_positions_csv(dir.path() / "p.csv", pts);
    CHECK(read_positions_csv(dir.path() / "p.csv") == pts);
    const auto samples = read_samples_csv(dir.path() / "p.csv");
    CHECK(samples.size() == 50);
    CHECK(samples.dim() == 3);
}

TEST_CASE("IO - malformed CSV is rejected")
{
    gen::TempDir dir("csv");
    write_text(dir.path() / "ragged.csv", "x,y,z\n1,2,3\n4,5\n");
    CHECK_THROWS_AS(read_numeric_csv(dir.path() / "ragged.csv"), IoError);
    write_text(dir.path() / "word.csv", "x,y,z\n1,two,3\n");
    CHECK_THROWS_AS(read_numeric_csv(dir.path() / "word.csv"), IoError);
    write_text(dir.path() / "two.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(read_positions_csv(dir.path() / "two.csv"), IoError);
    write_text(dir.path() / "empty.csv", "x,y,z\n");
    CHECK_THROWS_AS(read_samples_csv(dir.path() / "empty.csv"), IoError);
}

TEST_CASE("IO - number formatting keeps infinities and full precision")
{
    CHECK(detail::format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(detail::parse_double("inf") == std::numeric_limits<double>::infinity());
    CHECK(detail::parse_double("-inf") == -std::numeric_limits<double>::infinity());
    const double v = 0.1 + 0.2;
    CHECK(detail::parse_double(detail::format_double(v)) == v);
    CHECK_THROWS_AS(detail::parse_double("1.5x"), IoError);
    CHECK(detail::split_csv_line(" a, b ,c\r") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("IO - training set round trip")
{
    gen::TempDir dir("train");
    gen::Gen g(704);
    TrainingSet set;
    set.seed = 1234;
    for (int i = 0; i < 9; ++i)
    {
        set.observations.push_back(random_observation(g, 4, 3));
        set.labels.emplace_back(g.normal(), g.normal(), g.normal());
    }
    write_training_set(dir.path() / "ts", set);
    const auto back = read_training_set(dir.path() / "ts");
    CHECK(back.seed == 1234);
    CHECK(back.labels == set.labels);
    REQUIRE(back.observations.size() == 9);
    CHECK(back.observations[8].x == set.observations[8].x);

    write_text(dir.path() / "ts" / "labels.csv", "x,y,z\n1,2,3\n");
    CHECK_THROWS_AS(read_training_set(dir.path() / "ts"), IoError);
}

TEST_CASE("IO - model round trip predicts identically")
{
    gen::TempDir dir("model");
    gen::Gen g(705);
    Box vol;
    vol.lo = Vec3(-1, -2, -3);
    vol.hi = Vec3(4, 5, 6);
    NetHyperparameters hp;
    hp.hidden = {7, 5};
    hp.learning_rate = 0.0123;
    hp.epochs = 4;
    hp.batch_size = 9;
    FeatureOptions fo;
    fo.attenuation = 0.37;
    auto m = make_net(feature_length(2, 3), vol, hp, 3, fo);
    m.feature_mean.setRandom();
    m.feature_scale = Eigen::VectorXd::Constant(m.feature_mean.size(), 2.5);
    save_model(dir.path() / "m.bin", m);
    const auto back = load_model(dir.path() / "m.bin");
    CHECK(back.layer_sizes == m.layer_sizes);
    for (std::size_t i = 0; i < m.weights.size(); ++i)
    {
        CHECK(back.weights[i] == m.weights[i]);
        CHECK(back.biases[i] == m.biases[i]);
    }
    CHECK(back.feature_mean == m.feature_mean);
    CHECK(back.volume.lo == vol.lo);
    CHECK(back.features.attenuation == 0.37);
    CHECK(back.hyper.learning_rate == 0.0123);
    CHECK(back.hyper.batch_size == 9);
    for (int i = 0; i < 10; ++i)
    {
        const auto obs = random_observation(g, 2, 3);
        CHECK(predict(back, obs) == predict(m, obs));
    }
}

// ================================================================================================
// Configuration
// ================================================================================================

TEST_CASE("Config - minimal file fills in the defaults")
{
    const auto c = experiment_from_json(minimal_config());
    REQUIRE_NOTHROW(validate_config(c));
    CHECK(c.environment_Q.ssp.size() == 2);
    CHECK(c.environment_P.ssp == c.environment_Q.ssp);
    CHECK(c.snr_db == default_snr_grid());
    CHECK(c.snr_db.size() == 21);
    CHECK(c.snr_db.front() == -10.0);
    CHECK(c.snr_db.back() == 30.0);
    CHECK(c.N == 64);
    CHECK(c.k_nn == 5);
    CHECK(c.environment_Q.ray_budget == 3);
    CHECK(c.environment_Q.surface_reflection == cd(-1.0, 0.0));
    CHECK_FALSE(c.source.has_value());
}

TEST_CASE("Config - JSON round trip is lossless")
{
    auto c = gen::small_config();
    c.environment_P.surface_reflection = cd(-0.9, 0.1);
    c.grid_step = Vec3(1.5, 2.0, 2.5);
    const auto back = experiment_from_json(experiment_to_json(c));
    CHECK(experiment_to_json(back) == experiment_to_json(c));
    CHECK(back.environment_P.surface_reflection == cd(-0.9, 0.1));
    CHECK(back.grid_step == c.grid_step);
    CHECK(back.source == c.source);
}

TEST_CASE("Config - shipped configuration files load")
{
    for (const auto &entry : std::filesystem::directory_iterator(UWLOC_SOURCE_DIR "/configs"))
    {
        if (entry.path().extension() != ".json")
            continue;
        INFO(entry.path());
        CHECK_NOTHROW(load_experiment_config(entry.path()));
    }
}

TEST_CASE("Config - invalid content is a config error")
{
    auto bad = [](const std::function<void(json &)> &edit) {
        json j = minimal_config();
        edit(j);
        return [j] {
            auto c = experiment_from_json(j);
            validate_config(c);
        };
    };
    CHECK_THROWS_AS(bad([](json &j) { j["frobnicate"] = 1; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["environment"]["ssp"] = json::array({{0, 1500}, {0, 1500}, {100, 1500}}); })(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["environment"]["ssp"] = json::array({{0, 1500}, {90, 1500}}); })(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["environment"]["ray_budget"] = 0; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["environment"]["surface_reflection"] = 1.5; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["environment_Q"] = j["environment"]; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j.erase("receivers"); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["receivers"][0] = json::array({1, 2}); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["receivers"][0] = json::array({0, 0, 150}); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["snr_db"] = json::array(); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["trials"] = 0; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["estimator"] = "psychic"; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["k_nn"] = 1; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["N"] = "sixty-four"; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["grid_step"] = 0.0; })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["source"] = json::array({0, 0, 0}); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["train_snr_db"] = json::array({1}); })(), ConfigError);
    CHECK_THROWS_AS(bad([](json &j) { j["net"] = {{"layers", 3}}; })(), ConfigError);
    CHECK_NOTHROW(bad([](json &j) { j["estimator"] = "both"; })());
}

TEST_CASE("Config - file level errors")
{
    gen::TempDir dir("cfg");
    CHECK_THROWS_AS(load_experiment_config(dir.path() / "absent.json"), IoError);
    write_text(dir.path() / "broken.json", "{ \"N\": ");
    CHECK_THROWS_AS(load_experiment_config(dir.path() / "broken.json"), ConfigError);
    write_text(dir.path() / "comment.json", "// note\n" + minimal_config().dump());
    CHECK_NOTHROW(load_experiment_config(dir.path() / "comment.json"));
}
