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

#include <filesystem>
#include <optional>
#include <vector>

#include "repurpose/assignment.hpp"
#include "repurpose/model.hpp"
#include "repurpose/partition.hpp"

namespace repurpose {

// Output-deviation certificate for a restructured model, conditional on the
// probe batch used to estimate the signal bound.
struct ErrorCertificate {
  double tau = 0.0;           // max_l ||W_l||_F of the original model
  double signal_bound = 0.0;  // max observed ||x_l||_2 over probe and layers
  double epsilon = 0.0;       // max_l ||W-hat_l - Pi W_l Pi^T||_F
  double bound = 0.0;
  bool assumptions_ok = false;

  // Measured per probe sample: final ||y-hat - Pi y||_2 and the same quantity
  // after every layer.
  std::vector<double> measured;
  std::vector<std::vector<double>> layer_errors;
  bool holds = false;            // every measured <= bound
  bool recursion_holds = false;  // e_l <= (tau + eps) e_{l-1} + eps B at every layer
};

struct RepurposedModel {
  SequentialModel model;
  std::vector<Permutation> permutations;  // Pi_0 (identity) ... Pi_L
  std::vector<double> per_layer_deviation;
  std::vector<std::size_t> cross_edges_before;
  std::vector<std::size_t> cross_edges_after;
  RepurposeConfig config;
  std::optional<ErrorCertificate> certificate;

  const Permutation& output_permutation() const { return permutations.back(); }
  double max_deviation() const;
};

struct RepurposeOptions {
  // Keep the final layer's neurons in their original order.
  bool pin_output_order = false;
};

// E = eta1 + eta2 * M.
Tensor threshold_matrix(const MaskMatrix& mask, const RepurposeConfig& cfg);
// Zero every entry with value^2 <= threshold; survivors are copied untouched.
Tensor hard_threshold_matrix(const Tensor& values, const Tensor& thresholds);

RepurposedModel repurpose_model(const SequentialModel& model, const PartitionSpec& spec,
                                const RepurposeConfig& cfg, RepurposeOptions options = {});

// Baseline: hard-threshold cross weights in place, no neuron rearrangement.
RepurposedModel direct_sparsify(const SequentialModel& model, const PartitionSpec& spec,
                                const RepurposeConfig& cfg);

struct CalibrationOptions {
  double relative_tolerance = 1e-3;
  int max_iterations = 200;
  RepurposeOptions repurpose;
  bool baseline = false;  // calibrate direct_sparsify instead
};

// Largest eta2 in [0, max |W|^2] keeping every layer's squared deviation
// ||W-hat - Pi W Pi^T||_F^2 <= epsilon. Throws InfeasibleError when eta2 = 0
// already violates the budget.
RepurposeConfig calibrate_eta2(const SequentialModel& model, const PartitionSpec& spec, double eta1,
                               double epsilon, CalibrationOptions options = {});

struct ConvRepurposeResult {
  Permutation permutation;  // over output channels
  ConvLayer layer;
  std::vector<double> per_channel_cost;  // indexed by original output channel
  double total_cost = 0.0;
};

// Per-filter cost matrix for output channels; filters are kept or dropped whole.
CostMatrix conv_cost_matrix(const ConvLayer& layer, const WorkerCounts& in_channel_counts,
                            const WorkerCounts& out_channel_counts, const RepurposeConfig& cfg);

// Squared Frobenius norm of the filter linking input channel `in` to output channel `out`.
double filter_energy(const ConvLayer& layer, std::size_t in, std::size_t out);

ConvRepurposeResult repurpose_conv(const ConvLayer& layer, const WorkerCounts& in_channel_counts,
                                   const WorkerCounts& out_channel_counts, const RepurposeConfig& cfg);

// Reorders conv channels (spatial axes untouched). Used to chain conv layers.
ConvLayer permute_conv_channels(const ConvLayer& layer, const Permutation& in_perm,
                                const Permutation& out_perm);

// eps * sum_{k<L} (tau + eps)^k * B, equal to eps ((tau+eps)^L - 1)/(tau+eps-1) B
// and to eps L B at tau + eps = 1.
double deviation_bound(double epsilon, double tau, std::size_t depth, double signal_bound);

// probe is (in, K). Throws UnsupportedError if an activation is not 1-Lipschitz.
ErrorCertificate error_certificate(const SequentialModel& original, const RepurposedModel& repurposed,
                                   const Tensor& probe);

// RPM v1 model plus repurpose.json in the same directory.
void save_repurposed(const RepurposedModel& rep, const std::filesystem::path& dir);
RepurposedModel load_repurposed(const std::filesystem::path& dir);

}  // namespace repurpose
