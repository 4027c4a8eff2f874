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
#include <filesystem>
#include <span>
#include <vector>

#include "repurpose/model.hpp"
#include "repurpose/tensor.hpp"

namespace repurpose {

using WorkerCounts = std::vector<std::size_t>;

// Neurons per worker at every layer boundary. counts[0] is the fixed input
// assignment; counts[l] is the output side of layer l.
struct PartitionSpec {
  std::size_t workers = 1;
  std::vector<WorkerCounts> counts;

  const WorkerCounts& boundary(std::size_t l) const { return counts.at(l); }
  bool operator==(const PartitionSpec&) const = default;
};

void validate(const PartitionSpec& spec);
// Checks spec against the model's boundary widths.
void validate(const PartitionSpec& spec, const SequentialModel& model);

// Balanced split of each boundary width over `workers` (earlier workers get
// the remainder).
PartitionSpec balanced_partition(std::span<const std::size_t> widths, std::size_t workers);
WorkerCounts balanced_counts(std::size_t width, std::size_t workers);

PartitionSpec load_partition(const std::filesystem::path& file);
void save_partition(const PartitionSpec& spec, const std::filesystem::path& file);

// Worker owning each index when `counts` blocks are laid out contiguously.
std::vector<std::size_t> block_owner(std::span<const std::size_t> counts);
std::vector<std::size_t> block_offsets(std::span<const std::size_t> counts);

// map[i] is the new position of element i (Pi[map[i], i] = 1).
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> map);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return map_.size(); }
  std::size_t operator[](std::size_t i) const { return map_[i]; }
  const std::vector<std::size_t>& map() const { return map_; }

  Permutation inverse() const;
  bool is_identity() const;

  // (Pi v)[map[i]] = v[i].
  template <typename T>
  std::vector<T> apply(std::span<const T> v) const {
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[map_[i]] = v[i];
    return out;
  }
  // Permutes the rows of a (rows, cols) tensor: out = Pi * T.
  Tensor apply_rows(const Tensor& t) const;

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<std::size_t> map_;
};

// Binary (in, out) matrix, 0 inside worker-diagonal blocks and 1 elsewhere.
class MaskMatrix {
 public:
  MaskMatrix(WorkerCounts in_counts, WorkerCounts out_counts);

  std::size_t rows() const { return in_owner_.size(); }
  std::size_t cols() const { return out_owner_.size(); }
  bool cross(std::size_t r, std::size_t c) const { return in_owner_[r] != out_owner_[c]; }
  int operator()(std::size_t r, std::size_t c) const { return cross(r, c) ? 1 : 0; }

  const WorkerCounts& in_counts() const { return in_counts_; }
  const WorkerCounts& out_counts() const { return out_counts_; }
  std::size_t in_owner(std::size_t r) const { return in_owner_[r]; }
  std::size_t out_owner(std::size_t c) const { return out_owner_[c]; }

  Tensor dense() const;

 private:
  WorkerCounts in_counts_;
  WorkerCounts out_counts_;
  std::vector<std::size_t> in_owner_;
  std::vector<std::size_t> out_owner_;
};

MaskMatrix build_mask(const WorkerCounts& in_counts, const WorkerCounts& out_counts);

// ||M (.) W||_0 with "nonzero" meaning exactly != 0.0.
std::size_t cross_edge_count(const Tensor& weight, const MaskMatrix& mask);

// Returns weights Pi_prev * W * Pi^T and bias Pi * b. Pure index shuffles.
DenseLayer apply_permutation(const DenseLayer& layer, const Permutation& input_perm,
                             const Permutation& output_perm);

}  // namespace repurpose
