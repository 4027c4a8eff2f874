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

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "repurpose/partition.hpp"
#include "repurpose/tensor.hpp"

namespace repurpose {

struct RepurposeConfig {
  double eta1 = 0.0;  // total-sparsity penalty
  double eta2 = 0.0;  // cross-worker edge penalty

  void validate() const;
  bool operator==(const RepurposeConfig&) const = default;
};

// Hard-threshold rule shared by every pruning path: zero when w^2 <= eta.
inline bool is_pruned(double value, double threshold) { return value * value <= threshold; }

struct ColumnCost {
  std::vector<double> pruned;  // optimal w-hat
  double cost = 0.0;
};

// Optimal pruning of one fan-in column when its neuron sits on `worker`.
// Entries whose input neuron is on another worker pay eta1 + eta2 to survive.
ColumnCost column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                       std::size_t worker, const RepurposeConfig& cfg);

// Value of ||w - x||^2 + eta1 ||x||_0 + eta2 ||x_cross||_0 for a given x.
double column_objective(std::span<const double> column, std::span<const double> candidate,
                        const WorkerCounts& in_counts, std::size_t worker,
                        const RepurposeConfig& cfg);

// P x N costs; values[j * N + i] is the cost of neuron i on worker j.
struct CostMatrix {
  std::size_t workers = 0;
  std::size_t neurons = 0;
  std::vector<double> values;
  WorkerCounts expansion_counts;

  double at(std::size_t worker, std::size_t neuron) const { return values[worker * neurons + neuron]; }
};

CostMatrix build_cost_matrix(const Tensor& weight, const WorkerCounts& in_counts,
                             const WorkerCounts& out_counts, const RepurposeConfig& cfg);

struct Matching {
  std::vector<std::size_t> row_to_col;
  double total = 0.0;

  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

// Minimum-cost perfect matching on a square matrix, O(n^3). Ties resolve to
// the lowest row, then lowest column index.
Matching munkres(std::span<const double> cost, std::size_t n);
Matching munkres(const Tensor& cost);

struct AssignmentResult {
  Permutation permutation;
  std::vector<std::size_t> worker_of;  // worker per original neuron
  double total_cost = 0.0;
  std::vector<double> per_neuron_cost;
};

// Solves the neuron-to-worker assignment on a P x N cost matrix with row k
// (virtually) repeated expansion_counts[k] times.
AssignmentResult assign_from_costs(const CostMatrix& costs);

AssignmentResult assign_neurons(const Tensor& weight, const WorkerCounts& in_counts,
                                const WorkerCounts& out_counts, const RepurposeConfig& cfg);

inline constexpr std::size_t kDefaultBruteForceCap = 1'000'000;

// Exhaustive search over every assignment honouring out_counts.
AssignmentResult brute_force_assign(const Tensor& weight, const WorkerCounts& in_counts,
                                    const WorkerCounts& out_counts, const RepurposeConfig& cfg,
                                    std::size_t cap = kDefaultBruteForceCap);

// Canonical permutation: worker k's neurons occupy block k in ascending
// original-index order.
Permutation permutation_from_workers(std::span<const std::size_t> worker_of,
                                     const WorkerCounts& out_counts);

// Full layer objective ||H_E(W Pi^T) - W Pi^T||_F^2 + eta1 ||.||_0 + eta2 ||M (.) .||_0.
double layer_objective(const Tensor& weight, const WorkerCounts& in_counts,
                       const WorkerCounts& out_counts, const Permutation& perm,
                       const RepurposeConfig& cfg);

using BigInt = boost::multiprecision::cpp_int;

// Multinomial N! / (n_1! ... n_P!).
BigInt count_assignments(std::size_t n, const WorkerCounts& counts);
// log(P^(N + 0.5) * N^(1 - P/2)), the balanced-split growth rate.
double asymptotic_log_estimate(std::size_t n, std::size_t workers);

}  // namespace repurpose
