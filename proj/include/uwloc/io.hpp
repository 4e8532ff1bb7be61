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

#ifndef UWLOC_IO_HPP
#define UWLOC_IO_HPP

#include "csd_estimator.hpp"
#include "net.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace uwloc
{
    // Binary files are little-endian regardless of the host.
    namespace detail
    {
        template <typename T>
        T to_little(T v)
        {
            static_assert(std::is_trivially_copyable_v<T>);
            if constexpr (std::endian::native == std::endian::big)
            {
                std::array<unsigned char, sizeof(T)> b;
                std::memcpy(b.data(), &v, sizeof(T));
                std::reverse(b.begin(), b.end());
                std::memcpy(&v, b.data(), sizeof(T));
            }
            return v;
        }

        class BinaryWriter
        {
        public:
            explicit BinaryWriter(const std::filesystem::path &path) : path_(path), out_(path, std::ios::binary)
            {
                if (!out_)
                    throw IoError("cannot open '" + path.string() + "' for writing");
            }
            void raw(const void *data, std::size_t n)
            {
                out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
                if (!out_)
                    throw IoError("write failed on '" + path_.string() + "'");
            }
            template <typename T>
            void put(T v)
            {
                v = to_little(v);
                raw(&v, sizeof(T));
            }
            void finish()
            {
                out_.flush();
                if (!out_)
                    throw IoError("write failed on '" + path_.string() + "'");
            }

        private:
            std::filesystem::path path_;
            std::ofstream out_;
        };

        class BinaryReader
        {
        public:
            explicit BinaryReader(const std::filesystem::path &path) : path_(path), in_(path, std::ios::binary)
            {
                if (!in_)
                    throw IoError("cannot open '" + path.string() + "' for reading");
            }
            void raw(void *data, std::size_t n)
            {
                in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
                if (static_cast<std::size_t>(in_.gcount()) != n)
                    throw IoError("unexpected end of file in '" + path_.string() + "'");
            }
            template <typename T>
            T get()
            {
                T v;
                raw(&v, sizeof(T));
                return to_little(v);
            }
            const std::filesystem::path &path() const { return path_; }

        private:
            std::filesystem::path path_;
            std::ifstream in_;
        };

        inline void expect_magic(BinaryReader &r, const char (&magic)[9])
        {
            char got[8];
            r.raw(got, 8);
            if (std::memcmp(got, magic, 8) != 0)
                throw IoError("'" + r.path().string() + "' is not a " + std::string(magic, 8) + " file");
        }

        inline std::string format_double(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        inline double parse_double(const std::string &s)
        {
            if (s == "inf" || s == "+inf")
                return std::numeric_limits<double>::infinity();
            if (s == "-inf")
                return -std::numeric_limits<double>::infinity();
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(s, &used);
            }
            catch (const std::exception &)
            {
                throw IoError("not a number: '" + s + "'");
            }
            if (used != s.size())
                throw IoError("not a number: '" + s + "'");
            return v;
        }

        inline std::vector<std::string> split_csv_line(const std::string &line)
        {
            std::vector<std::string> cells;
            std::string cell;
            std::istringstream ss(line);
            while (std::getline(ss, cell, ','))
            {
                while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
                    cell.pop_back();
                while (!cell.empty() && cell.front() == ' ')
                    cell.erase(cell.begin());
                cells.push_back(cell);
            }
            return cells;
        }
    } // namespace detail

    // ============================================================================================
    // Observation dump
    // ============================================================================================
    //
    //   char[8]  "UWLOBS01"
    //   u32      L
    //   u32      N
    //   u64      seed
    //   u64      count
    //   count records of: f64 sigma_v2, f64 snr, then L*N complex values as (re, im) f64 pairs,
    //                     receiver-major [l][k]

    struct ObservationDump
    {
        int L = 0;
        int N = 0;
        std::uint64_t seed = 0;
        std::vector<Observation> observations;
    };

    inline void write_observations(const std::filesystem::path &path, std::span<const Observation> obs, int L, int N,
                                   std::uint64_t seed)
    {
        detail::BinaryWriter w(path);
        w.raw("UWLOBS01", 8);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(L));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(N));
        w.put<std::uint64_t>(seed);
        w.put<std::uint64_t>(obs.size());
        for (const auto &o : obs)
        {
            if (o.L != L || o.N != N)
                throw std::invalid_argument("write_observations: observation shape differs from the header");
            w.put<double>(o.sigma_v2);
            w.put<double>(o.snr);
            for (Eigen::Index i = 0; i < o.x.size(); ++i)
            {
                w.put<double>(o.x[i].real());
                w.put<double>(o.x[i].imag());
            }
        }
        w.finish();
    }

    inline ObservationDump read_observations(const std::filesystem::path &path)
    {
        detail::BinaryReader r(path);
        detail::expect_magic(r, "UWLOBS01");
        ObservationDump d;
        d.L = static_cast<int>(r.get<std::uint32_t>());
        d.N = static_cast<int>(r.get<std::uint32_t>());
        d.seed = r.get<std::uint64_t>();
        const auto count = r.get<std::uint64_t>();
        if (d.L < 1 || d.N < 1)
            throw IoError("observation dump has an empty shape");
        d.observations.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
        for (std::uint64_t i = 0; i < count; ++i)
        {
            Observation o;
            o.L = d.L;
            o.N = d.N;
            o.sigma_v2 = r.get<double>();
            o.snr = r.get<double>();
            o.x.resize(static_cast<Eigen::Index>(d.L) * d.N);
            for (Eigen::Index j = 0; j < o.x.size(); ++j)
            {
                const double re = r.get<double>();
                const double im = r.get<double>();
                o.x[j] = {re, im};
            }
            d.observations.push_back(std::move(o));
        }
        return d;
    }

    // ============================================================================================
    // Labels and positions (CSV with header x,y,z)
    // ============================================================================================

    inline void write_positions_csv(const std::filesystem::path &path, std::span<const Vec3> positions)
    {
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot open '" + path.string() + "' for writing");
        out << "x,y,z\n";
        for (const auto &p : positions)
            out << detail::format_double(p[0]) << ',' << detail::format_double(p[1]) << ','
                << detail::format_double(p[2]) << '\n';
        if (!out)
            throw IoError("write failed on '" + path.string() + "'");
    }

    // Numeric CSV rows; a first line that does not parse as numbers is treated as a header.
    inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open '" + path.string() + "' for reading");
        std::vector<std::vector<double>> rows;
        std::string line;
        bool first = true;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty() || line == "\r" || line.front() == '#')
                continue;
            const auto cells = detail::split_csv_line(line);
            std::vector<double> row;
            try
            {
                for (const auto &c : cells)
                    row.push_back(detail::parse_double(c));
            }
            catch (const IoError &)
            {
                if (first)
                {
                    first = false;
                    continue;
                }
                throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": non-numeric cell");
            }
            first = false;
            if (!rows.empty() && row.size() != rows.front().size())
                throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": ragged row");
            rows.push_back(std::move(row));
        }
        return rows;
    }

    inline std::vector<Vec3> read_positions_csv(const std::filesystem::path &path)
    {
        std::vector<Vec3> out;
        for (const auto &row : read_numeric_csv(path))
        {
            if (row.size() != 3)
                throw IoError("'" + path.string() + "': positions need exactly 3 columns");
            out.emplace_back(row[0], row[1], row[2]);
        }
        return out;
    }

    inline SampleSet read_samples_csv(const std::filesystem::path &path, std::string label = {})
    {
        const auto rows = read_numeric_csv(path);
        if (rows.empty())
            throw IoError("'" + path.string() + "' holds no samples");
        SampleSet s(rows.front().size(), std::move(label));
        for (const auto &r : rows)
            s.push_back(std::span<const double>(r));
        return s;
    }

    // ============================================================================================
    // Training set: observations.bin + labels.csv in one directory
    // ============================================================================================

    inline void write_training_set(const std::filesystem::path &dir, const TrainingSet &set)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create '" + dir.string() + "': " + ec.message());
        const int L = set.observations.empty() ? 0 : set.observations.front().L;
        const int N = set.observations.empty() ? 0 : set.observations.front().N;
        write_observations(dir / "observations.bin", set.observations, L, N, set.seed);
        write_positions_csv(dir / "labels.csv", set.labels);
    }

    inline TrainingSet read_training_set(const std::filesystem::path &dir)
    {
        auto dump = read_observations(dir / "observations.bin");
        TrainingSet set;
        set.seed = dump.seed;
        set.observations = std::move(dump.observations);
        set.labels = read_positions_csv(dir / "labels.csv");
        if (set.labels.size() != set.observations.size())
            throw IoError("'" + dir.string() + "': label and observation counts differ");
        return set;
    }

    // ============================================================================================
    // Network model file
    // ============================================================================================
    //
    //   char[8]  "UWLNET01"
    //   u32      number of layer sizes S, then S x u32 sizes (input, hidden..., 3)
    //   per layer: weights (out x in) row-major f64, then biases (out) f64
    //   f64      feature_mean[in], feature_scale[in]
    //   f64      target_center[3], target_scale[3], volume.lo[3], volume.hi[3]
    //   u32      normalize flag, f64 attenuation
    //   f64      learning_rate, beta1, beta2, epsilon; u32 epochs, batch_size

    inline void save_model(const std::filesystem::path &path, const NetModel &m)
    {
        detail::BinaryWriter w(path);
        w.raw("UWLNET01", 8);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layer_sizes.size()));
        for (int s : m.layer_sizes)
            w.put<std::uint32_t>(static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < m.weights.size(); ++i)
        {
            for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r)
                for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c)
                    w.put<double>(m.weights[i](r, c));
            for (Eigen::Index r = 0; r < m.biases[i].size(); ++r)
                w.put<double>(m.biases[i][r]);
        }
        for (Eigen::Index i = 0; i < m.feature_mean.size(); ++i)
            w.put<double>(m.feature_mean[i]);
        for (Eigen::Index i = 0; i < m.feature_scale.size(); ++i)
            w.put<double>(m.feature_scale[i]);
        for (const Vec3 *v : {&m.target_center, &m.target_scale, &m.volume.lo, &m.volume.hi})
            for (int a = 0; a < 3; ++a)
                w.put<double>((*v)[a]);
        w.put<std::uint32_t>(m.features.normalize ? 1u : 0u);
        w.put<double>(m.features.attenuation);
        w.put<double>(m.hyper.learning_rate);
        w.put<double>(m.hyper.beta1);
        w.put<double>(m.hyper.beta2);
        w.put<double>(m.hyper.epsilon);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.hyper.epochs));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.hyper.batch_size));
        w.finish();
    }

    inline NetModel load_model(const std::filesystem::path &path)
    {
        detail::BinaryReader r(path);
        detail::expect_magic(r, "UWLNET01");
        NetModel m;
        const auto S = r.get<std::uint32_t>();
        if (S < 2 || S > 64)
            throw IoError("'" + path.string() + "': implausible layer count");
        for (std::uint32_t i = 0; i < S; ++i)
            m.layer_sizes.push_back(static_cast<int>(r.get<std::uint32_t>()));
        if (m.layer_sizes.back() != 3)
            throw IoError("'" + path.string() + "': output dimension is not 3");
        for (std::size_t i = 0; i + 1 < m.layer_sizes.size(); ++i)
        {
            Eigen::MatrixXd W(m.layer_sizes[i + 1], m.layer_sizes[i]);
            for (Eigen::Index a = 0; a < W.rows(); ++a)
                for (Eigen::Index c = 0; c < W.cols(); ++c)
                    W(a, c) = r.get<double>();
            Eigen::VectorXd b(m.layer_sizes[i + 1]);
            for (Eigen::Index a = 0; a < b.size(); ++a)
                b[a] = r.get<double>();
            m.weights.push_back(std::move(W));
            m.biases.push_back(std::move(b));
        }
        const auto in = static_cast<Eigen::Index>(m.layer_sizes.front());
        m.feature_mean.resize(in);
        m.feature_scale.resize(in);
        for (Eigen::Index i = 0; i < in; ++i)
            m.feature_mean[i] = r.get<double>();
        for (Eigen::Index i = 0; i < in; ++i)
            m.feature_scale[i] = r.get<double>();
        for (Vec3 *v : {&m.target_center, &m.target_scale, &m.volume.lo, &m.volume.hi})
            for (int a = 0; a < 3; ++a)
                (*v)[a] = r.get<double>();
        m.features.normalize = r.get<std::uint32_t>() != 0;
        m.features.attenuation = r.get<double>();
        m.hyper.learning_rate = r.get<double>();
        m.hyper.beta1 = r.get<double>();
        m.hyper.beta2 = r.get<double>();
        m.hyper.epsilon = r.get<double>();
        m.hyper.epochs = static_cast<int>(r.get<std::uint32_t>());
        m.hyper.batch_size = static_cast<int>(r.get<std::uint32_t>());
        m.hyper.hidden.assign(m.layer_sizes.begin() + 1, m.layer_sizes.end() - 1);
        return m;
    }
} // namespace uwloc

#endif
