// SPDX-License-Identifier: Apache-2.0
//
// cranec: delay-QoS-aware power allocation for multi-point downlinks
// Copyright (C) 2026 The cranec authors
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

#pragma once

// Umbrella header. The config and experiment layers pull in nlohmann/json;
// include the individual headers to avoid that dependency.

#include <cranec/allocator.hpp>
#include <cranec/analytics.hpp>
#include <cranec/channel.hpp>
#include <cranec/dual_solver.hpp>
#include <cranec/error.hpp>
#include <cranec/metrics.hpp>
#include <cranec/scenario.hpp>
#include <cranec/specfun.hpp>
