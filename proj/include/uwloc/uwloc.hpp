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

#ifndef UWLOC_UWLOC_HPP
#define UWLOC_UWLOC_HPP

#include "common.hpp"
#include "env_channel.hpp"
#include "signal_model.hpp"
#include "covariance_bound.hpp"
#include "kd_tree.hpp"
#include "csd_estimator.hpp"
#include "localizers.hpp"
#include "net.hpp"
#include "io.hpp"
#include "config.hpp"
#include "harness.hpp"

#endif
