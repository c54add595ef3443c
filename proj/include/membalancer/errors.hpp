// Copyright 2026 The membalancer-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace membalancer {

/// Argument outside the domain of a model formula (e.g. limit <= live).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Memory budget cannot hold the live memory of every heap.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Controller fed a measurement that cannot have come from a real event.
class MeasurementError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Limit requested before the estimators have seen a GC and a heartbeat.
class NotWarmError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace membalancer
