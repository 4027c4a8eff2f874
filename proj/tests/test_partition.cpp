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

#include <algorithm>

#include "repurpose/error.hpp"
#include "repurpose/partition.hpp"
#include "repurpose/random_models.hpp"
#include "test_support.hpp"

using namespace repurpose;
using repurpose::testing::dense;
using repurpose::testing::mat;
using repurpose::testing::TempDir;
using repurpose::testing::vec;

TEST_CASE("build_mask") {
  SUBCASE("uneven split") {
    CHECK(build_mask({2, 1}, {1, 2}).dense() == mat(3, 3, {0, 1, 1, 0, 1, 1, 1, 0, 0}));
  }
  SUBCASE("single worker has no cross entries") {
    CHECK(build_mask({3}, {3}).dense() == Tensor::matrix(3, 3));
  }
  SUBCASE("symmetric split") {
    const Tensor m = build_mask({2, 2}, {2, 2}).dense();
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) CHECK(m.at(r, c) == ((r < 2) == (c < 2) ? 0.0 : 1.0));
    }
  }
  SUBCASE("zero count equals the sum of block areas") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const WorkerCounts in{rng() % 4, rng() % 4, rng() % 4};
      const WorkerCounts out{rng() % 4, rng() % 4, rng() % 4};
      const Tensor m = build_mask(in, out).dense();
      std::size_t area = 0;
      for (std::size_t k = 0; k < 3; ++k) area += in[k] * out[k];
      CHECK(m.size() - m.count_nonzero() == area);
    }
  }
  CHECK_THROWS_AS(build_mask({1, 1}, {2}), DimensionError);
}

TEST_CASE("cross_edge_count") {
  const MaskMatrix mask = build_mask({2, 1}, {1, 2});
  CHECK(cross_edge_count(mat(3, 3, std::vector<double>(9, 1.0)), mask) == 5);
  CHECK(cross_edge_count(mat(3, 3, {1, 0, 0, 2, 0, 0, 0, 3, 4}), mask) == 0);
  CHECK_THROWS_AS(cross_edge_count(Tensor::matrix(2, 3), mask), DimensionError);

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor w = random_tensor({7, 5}, rng);
    for (double& v : w.data()) {
      if (rng() % 3 == 0) v = 0.0;
    }
    const MaskMatrix m = build_mask({3, 4}, {2, 3});
    std::size_t naive = 0;
    for (std::size_t r = 0; r < 7; ++r) {
      for (std::size_t c = 0; c < 5; ++c) naive += ((r < 3) != (c < 2)) && w.at(r, c) != 0.0;
    }
    CHECK(cross_edge_count(w, m) == naive);
    CHECK(cross_edge_count(w, m) <= w.count_nonzero());
  }
}

TEST_CASE("permutations") {
  CHECK_THROWS_AS(Permutation({0, 0, 1}), DimensionError);
  CHECK_THROWS_AS(Permutation({0, 3}), DimensionError);
  const Permutation p({2, 0, 1});
  CHECK(p.inverse() == Permutation({1, 2, 0}));
  CHECK_FALSE(p.is_identity());
  CHECK(Permutation::identity(4).is_identity());
  const std::vector<int> v{10, 20, 30};
  CHECK(p.apply<int>(v) == std::vector<int>{20, 30, 10});
}

TEST_CASE("apply_permutation") {
  const DenseLayer layer = dense(mat(2, 2, {1, 2, 3, 4}), vec({5, 6}));
  SUBCASE("identity leaves the layer unchanged") {
    CHECK(apply_permutation(layer, Permutation::identity(2), Permutation::identity(2)) == layer);
  }
  SUBCASE("swapping outputs swaps columns and bias") {
    const DenseLayer out = apply_permutation(layer, Permutation::identity(2), Permutation({1, 0}));
    CHECK(out.weight == mat(2, 2, {2, 1, 4, 3}));
    CHECK(out.bias == vec({6, 5}));
  }
  SUBCASE("inverse round trip and value multiset") {
    Rng rng(2);
    const std::vector<std::size_t> widths{6, 5};
    const DenseLayer big = random_dense_model(widths, rng).dense(0);
    const Permutation pin = random_permutation(6, rng);
    const Permutation pout = random_permutation(5, rng);
    const DenseLayer moved = apply_permutation(big, pin, pout);
    CHECK(apply_permutation(moved, pin.inverse(), pout.inverse()) == big);
    auto a = std::vector<double>(big.weight.data().begin(), big.weight.data().end());
    auto b = std::vector<double>(moved.weight.data().begin(), moved.weight.data().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  CHECK_THROWS_AS(apply_permutation(layer, Permutation::identity(3), Permutation::identity(2)),
                  DimensionError);
}

TEST_CASE("partition specs") {
  CHECK(balanced_counts(10, 3) == WorkerCounts{4, 3, 3});
  const std::vector<std::size_t> widths{4, 6, 2};
  const PartitionSpec spec = balanced_partition(widths, 2);
  CHECK(spec.counts == std::vector<WorkerCounts>{{2, 2}, {3, 3}, {1, 1}});

  TempDir dir("partition");
  save_partition(spec, dir.path() / "p.json");
  CHECK(load_partition(dir.path() / "p.json") == spec);

  PartitionSpec bad = spec;
  bad.counts[1] = {3, 2};
  Rng rng(1);
  const SequentialModel m = random_dense_model(widths, rng);
  CHECK_NOTHROW(validate(spec, m));
  CHECK_THROWS_AS(validate(bad, m), DimensionError);
  bad = spec;
  bad.counts.pop_back();
  CHECK_THROWS_AS(validate(bad, m), DimensionError);
  CHECK_THROWS_AS(load_partition(dir.path() / "missing.json"), FormatError);
}
