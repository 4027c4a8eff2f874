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
#include <iosfwd>
#include <vector>

#include "repurpose/model.hpp"
#include "repurpose/partition.hpp"
#include "repurpose/repurpose.hpp"

namespace repurpose {

// Cross-worker slice restricted to the source rows that carry a nonzero.
struct CrossBlock {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::vector<std::size_t> rows;  // indices local to the source worker's block
  Tensor weight;                  // (rows.size(), o_dst)
};

struct WorkerShard {
  Tensor diag;  // (iota_k, o_k)
  Tensor bias;  // (o_k)
  std::vector<CrossBlock> incoming;  // ordered by source worker
};

struct ShardedLayer {
  WorkerCounts in_counts;
  WorkerCounts out_counts;
  Activation activation;
  std::vector<WorkerShard> workers;

  Tensor reassemble() const;
};

struct ShardedModel {
  std::size_t workers = 1;
  std::vector<ShardedLayer> layers;
};

ShardedModel shard_model(const SequentialModel& model, const PartitionSpec& spec);
ShardedModel shard_model(const RepurposedModel& rep, const PartitionSpec& spec);

// Values are per sample; a batch of K samples moves K times as many.
struct CommRecord {
  std::size_t layer = 0;
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t values = 0;
  std::size_t bytes = 0;
};

struct CommLog {
  std::vector<CommRecord> records;

  std::size_t total_values() const;
  std::size_t values_at_layer(std::size_t layer) const;
  void write_csv(std::ostream& os) const;
};

enum class ExecMode { kSequential, kThreaded };

struct DistributedResult {
  std::vector<Tensor> worker_outputs;      // (o_k, K) per worker, final layer
  CommLog comm;
  std::vector<std::size_t> multiply_count;  // per worker, per sample, summed over layers

  Tensor concatenated() const;
};

// inputs is (in, K) ordered by the spec's input blocks.
DistributedResult distributed_forward(const ShardedModel& sharded, const Tensor& inputs,
                                      ExecMode mode = ExecMode::kSequential,
                                      std::size_t element_bytes = 4);

// Same count done edge by edge over the sharded weights, for cross-checking.
std::vector<std::size_t> naive_multiply_count(const ShardedModel& sharded);

}  // namespace repurpose
