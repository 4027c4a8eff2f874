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

#include "repurpose/dist_exec.hpp"

#include <ostream>
#include <thread>

#include "repurpose/error.hpp"

namespace repurpose {

namespace {

ShardedLayer shard_layer(const DenseLayer& layer, const WorkerCounts& in_counts,
                         const WorkerCounts& out_counts) {
  const auto in_off = block_offsets(in_counts);
  const auto out_off = block_offsets(out_counts);
  const std::size_t workers = in_counts.size();
  ShardedLayer sharded{in_counts, out_counts, layer.activation, {}};
  sharded.workers.resize(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    WorkerShard& shard = sharded.workers[k];
    const std::size_t c0 = out_off[k];
    const std::size_t width = out_counts[k];
    shard.diag = Tensor::matrix(in_counts[k], width);
    for (std::size_t r = 0; r < in_counts[k]; ++r) {
      for (std::size_t c = 0; c < width; ++c) shard.diag.at(r, c) = layer.weight.at(in_off[k] + r, c0 + c);
    }
    shard.bias = Tensor::vector(width);
    for (std::size_t c = 0; c < width; ++c) shard.bias[c] = layer.bias[c0 + c];

    for (std::size_t src = 0; src < workers; ++src) {
      if (src == k) continue;
      CrossBlock block{src, k, {}, {}};
      for (std::size_t r = 0; r < in_counts[src]; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          if (layer.weight.at(in_off[src] + r, c0 + c) != 0.0) {
            block.rows.push_back(r);
            break;
          }
        }
      }
      if (block.rows.empty()) continue;
      block.weight = Tensor::matrix(block.rows.size(), width);
      for (std::size_t i = 0; i < block.rows.size(); ++i) {
        for (std::size_t c = 0; c < width; ++c) {
          block.weight.at(i, c) = layer.weight.at(in_off[src] + block.rows[i], c0 + c);
        }
      }
      shard.incoming.push_back(std::move(block));
    }
  }
  return sharded;
}

// One worker's share of a layer: activation(W_kk^T x_k + b_k + sum W~^T x~).
Tensor worker_step(const ShardedLayer& layer, std::size_t k, const std::vector<Tensor>& inputs) {
  const WorkerShard& shard = layer.workers[k];
  const std::size_t width = shard.bias.size();
  const std::size_t batch = inputs[k].cols();
  Tensor y = Tensor::matrix(width, batch);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t b = 0; b < batch; ++b) y.at(c, b) = shard.bias[c];
  }
  auto accumulate = [&](const Tensor& w, const Tensor& x, const std::vector<std::size_t>* rows) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const std::size_t src_row = rows == nullptr ? r : (*rows)[r];
      for (std::size_t c = 0; c < width; ++c) {
        const double weight = w.at(r, c);
        if (weight == 0.0) continue;
        for (std::size_t b = 0; b < batch; ++b) y.at(c, b) += weight * x.at(src_row, b);
      }
    }
  };
  accumulate(shard.diag, inputs[k], nullptr);
  for (const CrossBlock& block : shard.incoming) accumulate(block.weight, inputs[block.src], &block.rows);
  for (auto& v : y.data()) v = layer.activation.apply(v);
  return y;
}

}  // namespace

Tensor ShardedLayer::reassemble() const {
  const auto in_off = block_offsets(in_counts);
  const auto out_off = block_offsets(out_counts);
  Tensor w = Tensor::matrix(in_off.back(), out_off.back());
  for (std::size_t k = 0; k < workers.size(); ++k) {
    const WorkerShard& shard = workers[k];
    for (std::size_t r = 0; r < shard.diag.rows(); ++r) {
      for (std::size_t c = 0; c < shard.diag.cols(); ++c) w.at(in_off[k] + r, out_off[k] + c) = shard.diag.at(r, c);
    }
    for (const CrossBlock& block : shard.incoming) {
      for (std::size_t i = 0; i < block.rows.size(); ++i) {
        for (std::size_t c = 0; c < block.weight.cols(); ++c) {
          w.at(in_off[block.src] + block.rows[i], out_off[k] + c) = block.weight.at(i, c);
        }
      }
    }
  }
  return w;
}

ShardedModel shard_model(const SequentialModel& model, const PartitionSpec& spec) {
  validate(spec, model);
  ShardedModel sharded{spec.workers, {}};
  for (std::size_t l = 0; l < model.depth(); ++l) {
    sharded.layers.push_back(shard_layer(model.dense(l), spec.counts[l], spec.counts[l + 1]));
  }
  return sharded;
}

ShardedModel shard_model(const RepurposedModel& rep, const PartitionSpec& spec) {
  return shard_model(rep.model, spec);
}

std::size_t CommLog::total_values() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.values;
  return n;
}

std::size_t CommLog::values_at_layer(std::size_t layer) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.layer == layer ? r.values : 0;
  return n;
}

void CommLog::write_csv(std::ostream& os) const {
  os << "layer,src,dst,values,bytes\n";
  for (const auto& r : records) {
    os << r.layer << ',' << r.src << ',' << r.dst << ',' << r.values << ',' << r.bytes << '\n';
  }
}

Tensor DistributedResult::concatenated() const {
  std::size_t rows = 0;
  for (const auto& t : worker_outputs) rows += t.rows();
  const std::size_t batch = worker_outputs.empty() ? 0 : worker_outputs.front().cols();
  Tensor out = Tensor::matrix(rows, batch);
  std::size_t offset = 0;
  for (const auto& t : worker_outputs) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t b = 0; b < batch; ++b) out.at(offset + r, b) = t.at(r, b);
    }
    offset += t.rows();
  }
  return out;
}

DistributedResult distributed_forward(const ShardedModel& sharded, const Tensor& inputs, ExecMode mode,
                                      std::size_t element_bytes) {
  if (sharded.layers.empty()) throw DimensionError("distributed_forward: empty model");
  const ShardedLayer& first = sharded.layers.front();
  const auto in_off = block_offsets(first.in_counts);
  if (inputs.rank() != 2 || inputs.rows() != in_off.back()) {
    throw DimensionError("distributed_forward: input rows do not match the partition's input counts");
  }
  const std::size_t workers = sharded.workers;
  const std::size_t batch = inputs.cols();

  std::vector<Tensor> current(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    current[k] = Tensor::matrix(first.in_counts[k], batch);
    for (std::size_t r = 0; r < first.in_counts[k]; ++r) {
      for (std::size_t b = 0; b < batch; ++b) current[k].at(r, b) = inputs.at(in_off[k] + r, b);
    }
  }

  DistributedResult result;
  result.multiply_count.assign(workers, 0);
  for (std::size_t l = 0; l < sharded.layers.size(); ++l) {
    const ShardedLayer& layer = sharded.layers[l];
    if (layer.workers.size() != workers) throw DimensionError("distributed_forward: worker count mismatch");
    std::vector<Tensor> next(workers);
    if (mode == ExecMode::kThreaded && workers > 1) {
      // Barrier between layers: all threads join before the next layer starts.
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t k = 0; k < workers; ++k) {
        pool.emplace_back([&, k] { next[k] = worker_step(layer, k, current); });
      }
    } else {
      for (std::size_t k = 0; k < workers; ++k) next[k] = worker_step(layer, k, current);
    }
    for (std::size_t k = 0; k < workers; ++k) {
      const WorkerShard& shard = layer.workers[k];
      const std::size_t width = shard.bias.size();
      result.multiply_count[k] += shard.diag.rows() * width;
      for (const CrossBlock& block : shard.incoming) {
        result.multiply_count[k] += block.rows.size() * width;
        if (block.rows.empty()) continue;
        result.comm.records.push_back(
            {l, block.src, block.dst, block.rows.size(), block.rows.size() * element_bytes});
      }
    }
    current = std::move(next);
  }
  result.worker_outputs = std::move(current);
  return result;
}

std::vector<std::size_t> naive_multiply_count(const ShardedModel& sharded) {
  std::vector<std::size_t> counts(sharded.workers, 0);
  for (const auto& layer : sharded.layers) {
    for (std::size_t k = 0; k < layer.workers.size(); ++k) {
      // One multiply per stored weight entry, zeros included.
      counts[k] += layer.workers[k].diag.size();
      for (const auto& block : layer.workers[k].incoming) counts[k] += block.weight.size();
    }
  }
  return counts;
}

}  // namespace repurpose
