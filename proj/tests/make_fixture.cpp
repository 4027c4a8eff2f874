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

// Test helper: writes CLI fixtures, and checks a repurpose.json against a budget.
//   make_fixture write <dir>
//   make_fixture check <repurposed-dir> <epsilon>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "repurpose/model_io.hpp"
#include "repurpose/random_models.hpp"
#include "repurpose/repurpose.hpp"

namespace fs = std::filesystem;
using namespace repurpose;

namespace {

int write(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng(2026);
  const std::vector<std::size_t> widths{8, 12, 10, 6};
  const PartitionSpec spec = balanced_partition(widths, 2);
  save_model(random_dense_model(widths, rng), dir / "model");
  save_partition(spec, dir / "partition.json");

  const PlantedModel planted = planted_model(spec, rng);
  save_model(planted.block_diagonal, dir / "planted");

  save_model(random_dense_model(widths, rng), dir / "broken");
  fs::remove(dir / "broken" / "layer0.bias.bin");
  return 0;
}

int check(const fs::path& dir, double epsilon) {
  const RepurposedModel rep = load_repurposed(dir);
  int bad = 0;
  for (std::size_t l = 0; l < rep.per_layer_deviation.size(); ++l) {
    const double d = rep.per_layer_deviation[l];
    if (d * d > epsilon) {
      std::cerr << "layer " << l << ": squared deviation " << d * d << " exceeds " << epsilon << '\n';
      ++bad;
    }
    if (rep.cross_edges_after[l] > rep.cross_edges_before[l]) {
      std::cerr << "layer " << l << ": cross edges grew\n";
      ++bad;
    }
  }
  if (bad == 0) std::cout << "deviations within budget\n";
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "write" && argc == 3) return write(argv[2]);
  if (mode == "check" && argc == 4) return check(argv[2], std::strtod(argv[3], nullptr));
  std::cerr << "usage: make_fixture write <dir> | check <dir> <epsilon>\n";
  return 2;
}
