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

#include "repurpose/assignment.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "repurpose/error.hpp"

namespace repurpose {

void RepurposeConfig::validate() const {
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0) || !std::isfinite(eta1) || !std::isfinite(eta2)) {
    throw DimensionError("repurpose config: eta1 and eta2 must be finite and >= 0");
  }
}

namespace {

std::size_t total(const WorkerCounts& counts) {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

void check_column(std::size_t length, const WorkerCounts& in_counts, std::size_t worker) {
  if (worker >= in_counts.size()) {
    std::ostringstream msg;
    msg << "worker index " << worker << " out of range for " << in_counts.size() << " workers";
    throw DimensionError(msg.str());
  }
  if (total(in_counts) != length) {
    std::ostringstream msg;
    msg << "column length " << length << " != sum of input counts " << total(in_counts);
    throw DimensionError(msg.str());
  }
}

// Shortest-augmenting-path Hungarian method with row/column potentials.
// cost(r, c) is queried lazily so callers can expand rows virtually.
template <typename CostFn>
Matching solve_assignment(std::size_t n, CostFn cost) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<std::size_t> col_match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    col_match[0] = row;
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = col_match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_match[j0] = col_match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Matching m;
  m.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) m.row_to_col[col_match[j] - 1] = j - 1;
  for (std::size_t r = 0; r < n; ++r) m.total += cost(r, m.row_to_col[r]);
  return m;
}

}  // namespace

ColumnCost column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                       std::size_t worker, const RepurposeConfig& cfg) {
  check_column(column.size(), in_counts, worker);
  cfg.validate();
  const auto owner = block_owner(in_counts);
  const double cross_eta = cfg.eta1 + cfg.eta2;
  ColumnCost result{std::vector<double>(column.begin(), column.end()), 0.0};
  for (std::size_t n = 0; n < column.size(); ++n) {
    const double eta = owner[n] == worker ? cfg.eta1 : cross_eta;
    const double w = column[n];
    if (is_pruned(w, eta)) {
      result.pruned[n] = 0.0;
      result.cost += w * w;
    } else {
      result.cost += eta;
    }
  }
  return result;
}

double column_objective(std::span<const double> column, std::span<const double> candidate,
                        const WorkerCounts& in_counts, std::size_t worker,
                        const RepurposeConfig& cfg) {
  check_column(column.size(), in_counts, worker);
  if (candidate.size() != column.size()) throw DimensionError("candidate length mismatch");
  const auto owner = block_owner(in_counts);
  double residual = 0.0;
  std::size_t nonzero = 0, cross_nonzero = 0;
  for (std::size_t n = 0; n < column.size(); ++n) {
    const double d = column[n] - candidate[n];
    residual += d * d;
    if (candidate[n] != 0.0) {
      ++nonzero;
      cross_nonzero += (owner[n] != worker);
    }
  }
  return residual + cfg.eta1 * static_cast<double>(nonzero) +
         cfg.eta2 * static_cast<double>(cross_nonzero);
}

CostMatrix build_cost_matrix(const Tensor& weight, const WorkerCounts& in_counts,
                             const WorkerCounts& out_counts, const RepurposeConfig& cfg) {
  cfg.validate();
  if (weight.rank() != 2) throw DimensionError("cost matrix: weight must be rank 2");
  if (in_counts.size() != out_counts.size()) {
    throw DimensionError("cost matrix: input and output count vectors differ in length");
  }
  if (total(in_counts) != weight.rows()) {
    throw DimensionError("cost matrix: input counts do not sum to weight rows");
  }
  if (total(out_counts) != weight.cols()) {
    throw DimensionError("cost matrix: output counts do not sum to weight columns");
  }
  const std::size_t workers = in_counts.size();
  const std::size_t n = weight.cols();
  const auto owner = block_owner(in_counts);
  const double cross_eta = cfg.eta1 + cfg.eta2;

  CostMatrix costs{workers, n, std::vector<double>(workers * n, 0.0), out_counts};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < workers; ++j) {
      double c = 0.0;
      for (std::size_t r = 0; r < weight.rows(); ++r) {
        const double w = weight.at(r, i);
        const double eta = owner[r] == j ? cfg.eta1 : cross_eta;
        c += is_pruned(w, eta) ? w * w : eta;
      }
      costs.values[j * n + i] = c;
    }
  }
  return costs;
}

std::vector<std::pair<std::size_t, std::size_t>> Matching::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(row_to_col.size());
  for (std::size_t r = 0; r < row_to_col.size(); ++r) out.emplace_back(r, row_to_col[r]);
  return out;
}

Matching munkres(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw DimensionError("munkres: cost matrix must be square");
  for (double c : cost) {
    if (!std::isfinite(c)) throw DimensionError("munkres: non-finite cost entry");
  }
  return solve_assignment(n, [&](std::size_t r, std::size_t c) { return cost[r * n + c]; });
}

Matching munkres(const Tensor& cost) {
  if (cost.rank() != 2 || cost.rows() != cost.cols()) {
    throw DimensionError("munkres: cost matrix must be square");
  }
  return munkres(cost.data(), cost.rows());
}

Permutation permutation_from_workers(std::span<const std::size_t> worker_of,
                                     const WorkerCounts& out_counts) {
  auto next = block_offsets(out_counts);
  const auto end = next;
  std::vector<std::size_t> map(worker_of.size());
  for (std::size_t i = 0; i < worker_of.size(); ++i) {
    const std::size_t k = worker_of[i];
    if (k >= out_counts.size() || next[k] >= end[k + 1]) {
      throw DimensionError("assignment does not respect the per-worker counts");
    }
    map[i] = next[k]++;
  }
  return Permutation(std::move(map));
}

AssignmentResult assign_from_costs(const CostMatrix& costs) {
  const std::size_t n = costs.neurons;
  if (costs.expansion_counts.size() != costs.workers || total(costs.expansion_counts) != n) {
    throw DimensionError("assignment: output counts must sum to the neuron count");
  }
  for (double c : costs.values) {
    if (!std::isfinite(c)) throw DimensionError("assignment: non-finite cost entry");
  }
  const auto row_worker = block_owner(costs.expansion_counts);
  const Matching m = solve_assignment(
      n, [&](std::size_t r, std::size_t c) { return costs.values[row_worker[r] * n + c]; });

  AssignmentResult result;
  result.worker_of.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) result.worker_of[m.row_to_col[r]] = row_worker[r];
  result.per_neuron_cost.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.per_neuron_cost[i] = costs.at(result.worker_of[i], i);
    result.total_cost += result.per_neuron_cost[i];
  }
  result.permutation = permutation_from_workers(result.worker_of, costs.expansion_counts);
  return result;
}

AssignmentResult assign_neurons(const Tensor& weight, const WorkerCounts& in_counts,
                                const WorkerCounts& out_counts, const RepurposeConfig& cfg) {
  return assign_from_costs(build_cost_matrix(weight, in_counts, out_counts, cfg));
}

double layer_objective(const Tensor& weight, const WorkerCounts& in_counts,
                       const WorkerCounts& out_counts, const Permutation& perm,
                       const RepurposeConfig& cfg) {
  if (perm.size() != weight.cols()) throw DimensionError("layer_objective: permutation size");
  const MaskMatrix mask(in_counts, out_counts);
  if (mask.rows() != weight.rows() || mask.cols() != weight.cols()) {
    throw DimensionError("layer_objective: counts do not match weight shape");
  }
  double residual = 0.0;
  std::size_t nonzero = 0, cross_nonzero = 0;
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    for (std::size_t c = 0; c < weight.cols(); ++c) {
      // Column c of W lands at column perm[c] of W Pi^T.
      const double w = weight.at(r, c);
      const bool cross = mask.cross(r, perm[c]);
      const double eta = cfg.eta1 + (cross ? cfg.eta2 : 0.0);
      if (is_pruned(w, eta)) {
        residual += w * w;
      } else if (w != 0.0) {
        ++nonzero;
        cross_nonzero += cross;
      }
    }
  }
  return residual + cfg.eta1 * static_cast<double>(nonzero) +
         cfg.eta2 * static_cast<double>(cross_nonzero);
}

BigInt count_assignments(std::size_t n, const WorkerCounts& counts) {
  if (total(counts) != n) throw DimensionError("count_assignments: counts must sum to N");
  // Product of binomials C(remaining, n_k), each built exactly.
  BigInt result = 1;
  std::size_t remaining = n;
  for (std::size_t k : counts) {
    BigInt binom = 1;
    for (std::size_t t = 1; t <= k; ++t) {
      binom *= remaining - k + t;
      binom /= t;
    }
    result *= binom;
    remaining -= k;
  }
  return result;
}

double asymptotic_log_estimate(std::size_t n, std::size_t workers) {
  const double big_n = static_cast<double>(n);
  const double p = static_cast<double>(workers);
  return (big_n + 0.5) * std::log(p) + (1.0 - p / 2.0) * std::log(big_n);
}

AssignmentResult brute_force_assign(const Tensor& weight, const WorkerCounts& in_counts,
                                    const WorkerCounts& out_counts, const RepurposeConfig& cfg,
                                    std::size_t cap) {
  cfg.validate();
  const std::size_t n = weight.cols();
  if (count_assignments(n, out_counts) > cap) {
    throw InfeasibleError("brute_force_assign: assignment count exceeds cap of " +
                          std::to_string(cap));
  }
  std::vector<std::size_t> worker_of(n, 0), best;
  WorkerCounts remaining = out_counts;
  double best_value = std::numeric_limits<double>::infinity();

  // Depth-first enumeration of multiset assignments.
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      const Permutation perm = permutation_from_workers(worker_of, out_counts);
      const double value = layer_objective(weight, in_counts, out_counts, perm, cfg);
      if (value < best_value) {
        best_value = value;
        best = worker_of;
      }
      return;
    }
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (remaining[k] == 0) continue;
      --remaining[k];
      worker_of[i] = k;
      self(self, i + 1);
      ++remaining[k];
    }
  };
  recurse(recurse, 0);

  AssignmentResult result;
  result.worker_of = best;
  result.permutation = permutation_from_workers(best, out_counts);
  result.total_cost = best_value;
  const auto costs = build_cost_matrix(weight, in_counts, out_counts, cfg);
  result.per_neuron_cost.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.per_neuron_cost[i] = costs.at(best[i], i);
  return result;
}

}  // namespace repurpose
