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

#include "repurpose/partition.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "repurpose/error.hpp"

namespace repurpose {

using nlohmann::json;

void validate(const PartitionSpec& spec) {
  if (spec.workers < 1) throw DimensionError("partition: worker count must be >= 1");
  if (spec.counts.empty()) throw DimensionError("partition: no boundaries");
  for (std::size_t l = 0; l < spec.counts.size(); ++l) {
    if (spec.counts[l].size() != spec.workers) {
      std::ostringstream msg;
      msg << "partition: boundary " << l << " lists " << spec.counts[l].size()
          << " counts for " << spec.workers << " workers";
      throw DimensionError(msg.str());
    }
  }
}

void validate(const PartitionSpec& spec, const SequentialModel& model) {
  validate(spec);
  const auto widths = model.boundary_widths();
  if (spec.counts.size() != widths.size()) {
    std::ostringstream msg;
    msg << "partition: " << spec.counts.size() << " boundaries for a model with "
        << model.depth() << " layers (need " << widths.size() << ")";
    throw DimensionError(msg.str());
  }
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const auto sum = std::accumulate(spec.counts[l].begin(), spec.counts[l].end(), std::size_t{0});
    if (sum != widths[l]) {
      std::ostringstream msg;
      msg << "partition: boundary " << l << " counts sum to " << sum << ", width is " << widths[l];
      throw DimensionError(msg.str());
    }
  }
}

WorkerCounts balanced_counts(std::size_t width, std::size_t workers) {
  WorkerCounts counts(workers, width / workers);
  for (std::size_t k = 0; k < width % workers; ++k) ++counts[k];
  return counts;
}

PartitionSpec balanced_partition(std::span<const std::size_t> widths, std::size_t workers) {
  if (workers < 1) throw DimensionError("partition: worker count must be >= 1");
  PartitionSpec spec{workers, {}};
  for (std::size_t w : widths) spec.counts.push_back(balanced_counts(w, workers));
  return spec;
}

PartitionSpec load_partition(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("missing partition file " + file.string());
  PartitionSpec spec;
  try {
    json j;
    in >> j;
    spec.workers = j.at("workers").get<std::size_t>();
    spec.counts = j.at("counts").get<std::vector<WorkerCounts>>();
  } catch (const json::exception& e) {
    throw FormatError("malformed partition file " + file.string() + ": " + e.what());
  }
  validate(spec);
  return spec;
}

void save_partition(const PartitionSpec& spec, const std::filesystem::path& file) {
  validate(spec);
  json j = {{"workers", spec.workers}, {"counts", spec.counts}};
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw FormatError("cannot write partition file " + file.string());
  out << j.dump(2) << '\n';
}

std::vector<std::size_t> block_owner(std::span<const std::size_t> counts) {
  std::vector<std::size_t> owner;
  for (std::size_t k = 0; k < counts.size(); ++k) owner.insert(owner.end(), counts[k], k);
  return owner;
}

std::vector<std::size_t> block_offsets(std::span<const std::size_t> counts) {
  std::vector<std::size_t> offsets(counts.size() + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), offsets.begin() + 1);
  return offsets;
}

Permutation::Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (std::size_t target : map_) {
    if (target >= map_.size() || seen[target]) {
      throw DimensionError("permutation map is not a bijection");
    }
    seen[target] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = i;
  return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < map_.size(); ++i) {
    if (map_[i] != i) return false;
  }
  return true;
}

Tensor Permutation::apply_rows(const Tensor& t) const {
  if (t.rows() != map_.size()) throw DimensionError("permutation size does not match tensor rows");
  Tensor out(t.shape());
  const std::size_t cols = t.size() / std::max<std::size_t>(t.rows(), 1);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(map_[r] * cols));
  }
  return out;
}

MaskMatrix::MaskMatrix(WorkerCounts in_counts, WorkerCounts out_counts)
    : in_counts_(std::move(in_counts)), out_counts_(std::move(out_counts)) {
  if (in_counts_.size() != out_counts_.size()) {
    throw DimensionError("mask: input and output count vectors differ in length");
  }
  in_owner_ = block_owner(in_counts_);
  out_owner_ = block_owner(out_counts_);
}

Tensor MaskMatrix::dense() const {
  Tensor m = Tensor::matrix(rows(), cols());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) m.at(r, c) = (*this)(r, c);
  }
  return m;
}

MaskMatrix build_mask(const WorkerCounts& in_counts, const WorkerCounts& out_counts) {
  return MaskMatrix(in_counts, out_counts);
}

std::size_t cross_edge_count(const Tensor& weight, const MaskMatrix& mask) {
  if (weight.rank() != 2 || weight.rows() != mask.rows() || weight.cols() != mask.cols()) {
    throw DimensionError("cross_edge_count: weight shape does not match mask");
  }
  std::size_t count = 0;
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    for (std::size_t c = 0; c < weight.cols(); ++c) {
      count += (mask.cross(r, c) && weight.at(r, c) != 0.0);
    }
  }
  return count;
}

DenseLayer apply_permutation(const DenseLayer& layer, const Permutation& input_perm,
                             const Permutation& output_perm) {
  if (input_perm.size() != layer.in() || output_perm.size() != layer.out()) {
    throw DimensionError("apply_permutation: permutation sizes do not match layer");
  }
  DenseLayer out{Tensor::matrix(layer.in(), layer.out()), Tensor::vector(layer.out()),
                 layer.activation};
  for (std::size_t r = 0; r < layer.in(); ++r) {
    for (std::size_t c = 0; c < layer.out(); ++c) {
      out.weight.at(input_perm[r], output_perm[c]) = layer.weight.at(r, c);
    }
  }
  for (std::size_t c = 0; c < layer.out(); ++c) out.bias[output_perm[c]] = layer.bias[c];
  return out;
}

}  // namespace repurpose
