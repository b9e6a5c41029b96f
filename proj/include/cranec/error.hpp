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

#include <stdexcept>
#include <string>

namespace cranec
{

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
public:
    explicit DomainError(const std::string &what) : std::domain_error(what) {}
};

/// A numerical routine (series, continued fraction, quadrature, root search) failed to converge.
class NumericError : public std::runtime_error
{
public:
    explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

/// Invalid scenario or experiment configuration.
class ConfigError : public std::invalid_argument
{
public:
    explicit ConfigError(const std::string &what) : std::invalid_argument(what) {}
};

} // namespace cranec
