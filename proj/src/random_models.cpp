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

#include "repurpose/random_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace repurpose {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

SequentialModel random_dense_model(std::span<const std::size_t> widths, Rng& rng, ActivationKind hidden,
                                   ActivationKind output) {
  SequentialModel model;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    DenseLayer layer{random_tensor({widths[l], widths[l + 1]}, rng, scale),
                     random_tensor({widths[l + 1]}, rng, 0.1),
                     Activation{l + 2 == widths.size() ? output : hidden}};
    model.layers.emplace_back(std::move(layer));
  }
  return model;
}

Permutation random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  std::shuffle(map.begin(), map.end(), rng);
  return Permutation(std::move(map));
}

PlantedModel planted_model(const PartitionSpec& spec, Rng& rng, double min_magnitude, ActivationKind hidden) {
  validate(spec);
  std::vector<std::size_t> widths;
  for (const auto& c : spec.counts) widths.push_back(std::accumulate(c.begin(), c.end(), std::size_t{0}));

  std::uniform_real_distribution<double> magnitude(min_magnitude, 1.0);
  std::bernoulli_distribution negative(0.5);
  PlantedModel planted;
  planted.scramble.push_back(Permutation::identity(widths[0]));
  for (std::size_t b = 1; b < widths.size(); ++b) planted.scramble.push_back(random_permutation(widths[b], rng));

  const std::size_t depth = widths.size() - 1;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto in_owner = block_owner(spec.counts[l]);
    const auto out_owner = block_owner(spec.counts[l + 1]);
    DenseLayer layer{Tensor::matrix(widths[l], widths[l + 1]), random_tensor({widths[l + 1]}, rng, 0.1),
                     Activation{l + 1 == depth ? ActivationKind::kIdentity : hidden}};
    for (std::size_t r = 0; r < widths[l]; ++r) {
      for (std::size_t c = 0; c < widths[l + 1]; ++c) {
        if (in_owner[r] != out_owner[c]) continue;
        const double m = magnitude(rng);
        layer.weight.at(r, c) = negative(rng) ? -m : m;
      }
    }
    planted.scrambled.layers.emplace_back(apply_permutation(layer, planted.scramble[l], planted.scramble[l + 1]));
    planted.block_diagonal.layers.emplace_back(std::move(layer));
  }
  return planted;
}

}  // namespace repurpose
