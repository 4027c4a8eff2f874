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

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "repurpose/model.hpp"
#include "repurpose/partition.hpp"

namespace repurpose {

using Rng = std::mt19937_64;

// Entries drawn N(0, scale^2).
Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0);

// Dense stack over the given boundary widths, weights N(0, 1/in).
SequentialModel random_dense_model(std::span<const std::size_t> widths, Rng& rng,
                                   ActivationKind hidden = ActivationKind::kRelu,
                                   ActivationKind output = ActivationKind::kIdentity);

Permutation random_permutation(std::size_t n, Rng& rng);

// A dense stack whose layers are block-diagonal under `spec`, then scrambled
// by random permutations of every non-input boundary. In-block weights have
// magnitude in [min_magnitude, 1].
struct PlantedModel {
  SequentialModel block_diagonal;
  SequentialModel scrambled;
  std::vector<Permutation> scramble;  // per boundary; scramble[0] is identity
};

PlantedModel planted_model(const PartitionSpec& spec, Rng& rng, double min_magnitude = 0.25,
                           ActivationKind hidden = ActivationKind::kRelu);

}  // namespace repurpose
