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

#include <numeric>
#include <sstream>

#include "repurpose/dist_exec.hpp"
#include "repurpose/error.hpp"
#include "repurpose/random_models.hpp"
#include "repurpose/verify.hpp"
#include "test_support.hpp"

using namespace repurpose;
using repurpose::testing::dense;
using repurpose::testing::mat;
using repurpose::testing::vec;

TEST_CASE("single worker reduces to the plain forward pass") {
  Rng rng(2);
  const std::vector<std::size_t> widths{5, 7, 3};
  const SequentialModel m = random_dense_model(widths, rng);
  const ShardedModel sharded = shard_model(m, balanced_partition(widths, 1));
  const Tensor x = random_tensor({5, 4}, rng);
  const DistributedResult r = distributed_forward(sharded, x);
  CHECK(r.comm.records.empty());
  CHECK(max_relative_error(r.concatenated(), forward_output(m, x)) <= 1e-12);
  CHECK(r.multiply_count == std::vector<std::size_t>{5 * 7 + 7 * 3});
}

TEST_CASE("planted block-diagonal model needs no communication") {
  Rng rng(3);
  const PartitionSpec spec = balanced_partition(std::vector<std::size_t>{6, 9, 6}, 3);
  const PlantedModel planted = planted_model(spec, rng);
  const ShardedModel sharded = shard_model(planted.block_diagonal, spec);
  for (const auto& layer : sharded.layers) {
    for (const auto& w : layer.workers) CHECK(w.incoming.empty());
  }
  const Tensor x = random_tensor({6, 3}, rng);
  for (ExecMode mode : {ExecMode::kSequential, ExecMode::kThreaded}) {
    const DistributedResult r = distributed_forward(sharded, x, mode);
    CHECK(r.comm.total_values() == 0);
    CHECK(max_relative_error(r.concatenated(), forward_output(planted.block_diagonal, x)) <= 1e-12);
  }
}

TEST_CASE("a single cross nonzero opens exactly one channel") {
  Tensor w = mat(4, 4, {1, 2, 0, 0,
                        3, 4, 0, 0,
                        0, 0, 5, 6,
                        0, 0, 7, 8});
  w.at(3, 0) = 0.5;  // worker 1 input feeds worker 0 output
  SequentialModel m{{dense(w, vec({0, 0, 0, 0}))}};
  const PartitionSpec spec = balanced_partition(std::vector<std::size_t>{4, 4}, 2);
  const ShardedModel sharded = shard_model(m, spec);
  const auto& incoming = sharded.layers[0].workers[0].incoming;
  REQUIRE(incoming.size() == 1);
  CHECK(incoming[0].src == 1);
  CHECK(incoming[0].rows == std::vector<std::size_t>{1});
  CHECK(incoming[0].weight == mat(1, 2, {0.5, 0}));
  CHECK(sharded.layers[0].workers[1].incoming.empty());
  CHECK(sharded.layers[0].reassemble() == w);

  const DistributedResult r = distributed_forward(sharded, mat(4, 2, {1, 2, 3, 4, 5, 6, 7, 8}), ExecMode::kSequential, 8);
  REQUIRE(r.comm.records.size() == 1);
  const CommRecord& rec = r.comm.records[0];
  CHECK(rec.layer == 0);
  CHECK(rec.src == 1);
  CHECK(rec.dst == 0);
  CHECK(rec.values == 1);
  CHECK(rec.bytes == 8);
  CHECK(r.multiply_count == std::vector<std::size_t>{4 + 2, 4});

  std::ostringstream csv;
  r.comm.write_csv(csv);
  CHECK(csv.str() == "layer,src,dst,values,bytes\n0,1,0,1,8\n");
}

TEST_CASE("sharding is lossless and omega is minimal") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<std::size_t> widths{9, 12, 7};
    const PartitionSpec spec = balanced_partition(widths, 3);
    const RepurposedModel rep =
        repurpose_model(random_dense_model(widths, rng), spec, RepurposeConfig{0.01, 0.15});
    const ShardedModel sharded = shard_model(rep, spec);
    for (std::size_t l = 0; l < 2; ++l) {
      const ShardedLayer& layer = sharded.layers[l];
      CHECK(layer.reassemble() == rep.model.dense(l).weight);
      for (const auto& w : layer.workers) {
        for (const auto& block : w.incoming) {
          CHECK_FALSE(block.rows.empty());
          for (std::size_t r = 0; r < block.rows.size(); ++r) {
            double row_abs = 0.0;
            for (std::size_t c = 0; c < block.weight.cols(); ++c) row_abs += std::abs(block.weight.at(r, c));
            CHECK(row_abs > 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("distributed execution oracle") {
  const verify::Outcome outcome = verify::exec(15, 9);
  INFO(outcome.failure);
  CHECK(outcome.ok);
}

TEST_CASE("multiply counts against a per-edge count") {
  Rng rng(7);
  const std::vector<std::size_t> widths{8, 10, 6};
  const PartitionSpec spec = balanced_partition(widths, 2);
  const RepurposedModel rep = repurpose_model(random_dense_model(widths, rng), spec, RepurposeConfig{0, 0.2});
  const ShardedModel sharded = shard_model(rep, spec);
  const DistributedResult r = distributed_forward(sharded, random_tensor({8, 1}, rng));
  CHECK(r.multiply_count == naive_multiply_count(sharded));
  std::size_t from_log = 0;
  for (std::size_t l = 0; l < 2; ++l) {
    std::size_t omega = 0;
    for (const auto& w : sharded.layers[l].workers) {
      for (const auto& b : w.incoming) omega += b.rows.size();
    }
    CHECK(r.comm.values_at_layer(l) == omega);
    from_log += omega;
  }
  CHECK(r.comm.total_values() == from_log);
}

TEST_CASE("mismatched partition or input is rejected") {
  Rng rng(1);
  const std::vector<std::size_t> widths{4, 4};
  const SequentialModel m = random_dense_model(widths, rng);
  CHECK_THROWS_AS(shard_model(m, balanced_partition(std::vector<std::size_t>{4, 5}, 2)), DimensionError);
  const ShardedModel sharded = shard_model(m, balanced_partition(widths, 2));
  CHECK_THROWS_AS(distributed_forward(sharded, Tensor::matrix(3, 1)), DimensionError);
}
