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

#ifndef UWLOC_CLI_COMMANDS_HPP
#define UWLOC_CLI_COMMANDS_HPP

#include <exception>
#include <ostream>

namespace uwloc::cli
{
    enum ExitCode : int
    {
        exit_ok = 0,
        exit_config = 2,
        exit_numerical = 3,
        exit_io = 4,
    };

    // Exit code for an exception escaping a command.
    int exit_code_for(const std::exception &e);

    // Parses argv, runs one subcommand and returns its exit code. Nothing is thrown.
    int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
} // namespace uwloc::cli

#endif
