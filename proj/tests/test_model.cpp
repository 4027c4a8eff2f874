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

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "repurpose/error.hpp"
#include "repurpose/model_io.hpp"
#include "repurpose/partition.hpp"
#include "repurpose/random_models.hpp"
#include "test_support.hpp"

using namespace repurpose;
using repurpose::testing::dense;
using repurpose::testing::mat;
using repurpose::testing::TempDir;
using repurpose::testing::vec;

TEST_CASE("tensor rejects data that does not match its shape") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor t = mat(2, 2, {1, 0, -2, 0});
  CHECK(t.count_nonzero() == 2);
  CHECK(t.frobenius_norm_squared() == doctest::Approx(5.0));
  CHECK(t.at(1, 0) == -2.0);
}

TEST_CASE("activations") {
  CHECK(Activation{ActivationKind::kRelu}.apply(-2.0) == 0.0);
  CHECK(Activation{ActivationKind::kRelu}.apply(1.5) == 1.5);
  CHECK(Activation{ActivationKind::kSigmoid}.apply(0.0) == doctest::Approx(0.5));
  CHECK(Activation{ActivationKind::kTanh}.apply(0.3) == doctest::Approx(std::tanh(0.3)));
  for (auto kind : {ActivationKind::kIdentity, ActivationKind::kRelu, ActivationKind::kTanh,
                    ActivationKind::kSigmoid}) {
    CHECK(parse_activation(to_string(kind)) == kind);
    CHECK(Activation{kind}.lipschitz_one);
  }
  CHECK_THROWS_AS(parse_activation("gelu"), FormatError);
}

TEST_CASE("forward on hand-sized models") {
  SUBCASE("identity layer passes the input through") {
    SequentialModel m{{dense(mat(2, 2, {1, 0, 0, 1}), vec({0, 0}))}};
    const Tensor y = forward_output(m, mat(2, 1, {1, 2}));
    CHECK(y == mat(2, 1, {1, 2}));
  }
  SUBCASE("relu clamps the negative pre-activation") {
    SequentialModel m{{dense(mat(2, 2, {1, 0, 0, 1}), vec({1, 1}), ActivationKind::kRelu)}};
    const ForwardTrace trace = forward(m, mat(2, 1, {-3, 2}));
    CHECK(trace.pre_activations[0] == mat(2, 1, {-2, 3}));
    CHECK(trace.output() == mat(2, 1, {0, 3}));
  }
}

TEST_CASE("forward matches an independent triple loop") {
  Rng rng(11);
  const std::vector<std::size_t> widths{6, 9, 7, 4};
  for (int trial = 0; trial < 10; ++trial) {
    const SequentialModel m = random_dense_model(widths, rng, ActivationKind::kTanh);
    const Tensor x = random_tensor({6, 5}, rng);
    CHECK(max_relative_error(forward_output(m, x), testing::reference_forward(m, x)) <= 1e-12);
  }
}

TEST_CASE("forward over a batch equals per-sample forwards") {
  Rng rng(5);
  const std::vector<std::size_t> widths{4, 5, 3};
  const SequentialModel m = random_dense_model(widths, rng);
  const Tensor x = random_tensor({4, 3}, rng);
  const Tensor batch = forward_output(m, x);
  for (std::size_t k = 0; k < 3; ++k) {
    Tensor col = Tensor::matrix(4, 1);
    for (std::size_t r = 0; r < 4; ++r) col.at(r, 0) = x.at(r, k);
    const Tensor y = forward_output(m, col);
    for (std::size_t r = 0; r < 3; ++r) CHECK(y.at(r, 0) == batch.at(r, k));
  }
}

TEST_CASE("forward is equivariant under hidden-neuron permutations") {
  Rng rng(8);
  const std::vector<std::size_t> widths{5, 6, 4};
  const SequentialModel m = random_dense_model(widths, rng, ActivationKind::kSigmoid);
  const Permutation pi = random_permutation(6, rng);
  SequentialModel permuted = m;
  permuted.dense(0) = apply_permutation(m.dense(0), Permutation::identity(5), pi);
  permuted.dense(1) = apply_permutation(m.dense(1), pi, Permutation::identity(4));
  const Tensor x = random_tensor({5, 3}, rng);
  CHECK(max_relative_error(forward_output(permuted, x), forward_output(m, x)) <= 1e-12);
}

TEST_CASE("dimension errors name the offending layer") {
  SequentialModel m{{dense(mat(2, 3, std::vector<double>(6, 1.0)), vec({0, 0, 0})),
                     dense(mat(2, 2, std::vector<double>(4, 1.0)), vec({0, 0}))}};
  try {
    validate(m);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
  SequentialModel ok{{dense(mat(2, 2, {1, 0, 0, 1}), vec({0, 0}))}};
  CHECK_THROWS_AS(forward(ok, mat(3, 1, {1, 2, 3})), DimensionError);
}

TEST_CASE("RPM v1 round trip") {
  TempDir dir("rpm");
  Rng rng(3);
  const std::vector<std::size_t> widths{3, 4, 2};
  SequentialModel m = random_dense_model(widths, rng, ActivationKind::kRelu, ActivationKind::kSigmoid);
  // Values representable in f32 survive the round trip bit-exactly.
  for (std::size_t l = 0; l < m.depth(); ++l) {
    for (double& v : m.dense(l).weight.data()) v = static_cast<float>(v);
    for (double& v : m.dense(l).bias.data()) v = static_cast<float>(v);
  }
  save_model(m, dir.path());
  CHECK(std::filesystem::exists(dir.path() / "manifest.json"));
  CHECK(std::filesystem::file_size(dir.path() / "layer0.weight.bin") == 3 * 4 * 4);
  const SequentialModel loaded = load_model(dir.path());
  CHECK(loaded == m);
}

TEST_CASE("RPM v1 rejects malformed directories") {
  TempDir dir("rpm_bad");
  const std::vector<std::size_t> widths{3, 4};
  Rng rng(1);
  save_model(random_dense_model(widths, rng), dir.path());
  const auto manifest_path = dir.path() / "manifest.json";
  nlohmann::json manifest;
  std::ifstream(manifest_path) >> manifest;
  auto rewrite = [&](const nlohmann::json& j) { std::ofstream(manifest_path) << j.dump(); };

  SUBCASE("weight file with 40 bytes for a (3,4) shape") {
    std::filesystem::resize_file(dir.path() / "layer0.weight.bin", 40);
    try {
      load_model(dir.path());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("layer0.weight.bin") != std::string::npos);
      CHECK(msg.find("48") != std::string::npos);
      CHECK(msg.find("40") != std::string::npos);
    }
  }
  SUBCASE("missing bias file") {
    std::filesystem::remove(dir.path() / "layer0.bias.bin");
    try {
      load_model(dir.path());
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("layer0.bias.bin") != std::string::npos);
    }
  }
  SUBCASE("format_version 2") {
    manifest["format_version"] = 2;
    rewrite(manifest);
    CHECK_THROWS_AS(load_model(dir.path()), FormatError);
  }
  SUBCASE("unknown activation") {
    manifest["layers"][0]["activation"] = "swish";
    rewrite(manifest);
    CHECK_THROWS_AS(load_model(dir.path()), FormatError);
  }
  SUBCASE("missing manifest") {
    std::filesystem::remove(manifest_path);
    CHECK_THROWS_AS(load_model(dir.path()), FormatError);
  }
}

TEST_CASE("f32 files are little-endian") {
  TempDir dir("f32");
  const std::vector<double> values{1.0};
  write_f32_file(dir.path() / "one.bin", values);
  std::ifstream in(dir.path() / "one.bin", std::ios::binary);
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[1] == 0x00);
  CHECK(bytes[2] == 0x80);
  CHECK(bytes[3] == 0x3f);
}
