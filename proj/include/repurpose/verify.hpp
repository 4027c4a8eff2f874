/*
 * Copyright 2026 The repurpose Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "repurpose/assignment.hpp"

namespace repurpose::verify {

// Oracle suites behind `repurpose verify`. Each draws `trials` seeded random
// instances and compares the implementation with an independent route.
struct Outcome {
  bool ok = true;
  std::size_t trials = 0;
  std::size_t checks = 0;
  std::string failure;  // description of the first failing instance
};

using ColumnCostFn = std::function<ColumnCost(std::span<const double>, const WorkerCounts&,
                                              std::size_t, const RepurposeConfig&)>;

// Exhaustive 2^n support enumeration of the per-column objective.
double brute_force_column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                               std::size_t worker, const RepurposeConfig& cfg);

Outcome thresholding(std::size_t trials, std::uint64_t seed, const ColumnCostFn& impl = column_cost);
Outcome assignment(std::size_t trials, std::uint64_t seed);
Outcome bound(std::size_t trials, std::uint64_t seed);
Outcome exec(std::size_t trials, std::uint64_t seed);

// Test fixture: inverts the pruning comparison. Used as a mutation canary.
ColumnCost faulty_column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                              std::size_t worker, const RepurposeConfig& cfg);

}  // namespace repurpose::verify
