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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace repurpose::sim {

enum class Topology { kFullBisection, kSharedMedium };

struct PlatformConfig {
  std::string name;
  double peak_ops = 0.0;           // operations / second
  double efficiency = 0.3;         // fraction of peak reached on matvec
  double memory_bytes = 0.0;
  double link_bandwidth = 0.0;     // bytes / second
  double link_latency = 0.0;       // seconds
  Topology topology = Topology::kFullBisection;

  void validate() const;
  double effective_ops() const { return peak_ops * efficiency; }
};

PlatformConfig datacenter();
PlatformConfig edge();
// "datacenter", "edge", or a path to a JSON platform file.
PlatformConfig platform_by_name(const std::string& name_or_path);
PlatformConfig load_platform(const std::filesystem::path& file);
void save_platform(const PlatformConfig& platform, const std::filesystem::path& file);

inline constexpr double kSparsityFlavors[] = {0.5, 0.75, 0.9, 0.99};

struct Workload {
  std::size_t layers = 5;
  std::size_t neurons = 8192;
  std::size_t element_bytes = 4;
  double sparsity = 0.0;  // fraction of cross-block weights removed
  std::size_t nodes = 1;

  void validate() const;
};

struct LayerTiming {
  double compute = 0.0;
  double comm = 0.0;
};

struct SimReport {
  std::vector<LayerTiming> layers;
  double compute_total = 0.0;
  double comm_total = 0.0;
  double total = 0.0;
  double ops_per_node = 0.0;       // per layer
  double bytes_per_node = 0.0;     // per layer, sent
  // Speedups against the dense (s = 0) run of the same platform and sizes.
  double compute_speedup = 1.0;
  double comm_speedup = 1.0;
  double total_speedup = 1.0;

  double comm_share() const { return total > 0.0 ? comm_total / total : 0.0; }
};

// Bytes each node sends per sample per layer: (N/P)(P-1)(1-s) * element_bytes.
double theoretical_comm_per_node(std::size_t neurons, std::size_t nodes, double sparsity,
                                 std::size_t element_bytes);

// Per-node multiplies per layer with dense diagonal blocks and a (1-s)
// fraction of cross-block weights, times 2 for multiply-add.
double ops_per_node(std::size_t neurons, std::size_t nodes, double sparsity);

// Dense per-node weight footprint over all layers.
double dense_weight_bytes_per_node(const Workload& workload);

// Throws InfeasibleError when the dense model does not fit in node memory.
SimReport simulate(const PlatformConfig& platform, const Workload& workload);

struct SpeedupRow {
  double sparsity = 0.0;
  double compute_speedup = 1.0;
  double comm_speedup = 1.0;
  double total_speedup = 1.0;
  double comm_share = 0.0;
  std::size_t points = 0;           // node counts that fit in memory
  std::vector<std::size_t> skipped;  // node counts that did not
};

// Speedups averaged over node counts; node counts whose dense model exceeds
// node memory are skipped and listed.
std::vector<SpeedupRow> speedup_report(const PlatformConfig& platform, std::size_t neurons,
                                       const std::vector<double>& flavors,
                                       const std::vector<std::size_t>& node_counts,
                                       std::size_t layers = 5, std::size_t element_bytes = 4);

void write_speedup_csv(std::ostream& os, std::size_t neurons, const std::vector<SpeedupRow>& rows);
// Columns: N,P,flavor,layer,compute_s,comm_s,total_s.
void write_report_csv(std::ostream& os, const Workload& workload, const SimReport& report);
std::string report_json(const PlatformConfig& platform, const Workload& workload,
                        const SimReport& report);

// Accuracy of averaging P independently classified digits: (1 + 8 rho^P) / 9.
double naive_average_accuracy(double rho, std::size_t nodes);

}  // namespace repurpose::sim
