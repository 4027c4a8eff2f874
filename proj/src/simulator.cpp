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

#include "repurpose/simulator.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "repurpose/error.hpp"

namespace repurpose::sim {

using nlohmann::json;

namespace {

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

std::string topology_name(Topology t) {
  return t == Topology::kFullBisection ? "full-bisection" : "shared-medium";
}

Topology parse_topology(const std::string& s) {
  if (s == "full-bisection") return Topology::kFullBisection;
  if (s == "shared-medium") return Topology::kSharedMedium;
  throw FormatError("unknown topology '" + s + "'");
}

}  // namespace

void PlatformConfig::validate() const {
  if (!(peak_ops > 0.0) || !(memory_bytes > 0.0) || !(link_bandwidth > 0.0)) {
    throw DimensionError("platform '" + name + "': compute, memory and bandwidth must be > 0");
  }
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw DimensionError("platform '" + name + "': efficiency must be in (0, 1]");
  }
  if (!(link_latency >= 0.0)) throw DimensionError("platform '" + name + "': latency must be >= 0");
}

// NVLink-class GPU nodes.
PlatformConfig datacenter() {
  return {"datacenter", 125e12, 0.3, 4.0 * kGiB, 150e9, 1e-6, Topology::kFullBisection};
}

// Ethernet-connected accelerators behind a switch.
PlatformConfig edge() {
  return {"edge", 0.5e12, 0.3, 1.0 * kGiB, 100e6, 500e-6, Topology::kSharedMedium};
}

PlatformConfig load_platform(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("missing platform file " + file.string());
  PlatformConfig p;
  try {
    json j;
    in >> j;
    p.name = j.at("name").get<std::string>();
    p.peak_ops = j.at("peak_tops").get<double>() * 1e12;
    p.efficiency = j.value("efficiency", 0.3);
    p.memory_bytes = j.at("memory_bytes").get<double>();
    p.link_bandwidth = j.at("link_bandwidth_bytes_per_s").get<double>();
    p.link_latency = j.at("link_latency_s").get<double>();
    p.topology = parse_topology(j.at("topology").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError("malformed platform file " + file.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

void save_platform(const PlatformConfig& p, const std::filesystem::path& file) {
  json j = {{"name", p.name},
            {"peak_tops", p.peak_ops / 1e12},
            {"efficiency", p.efficiency},
            {"memory_bytes", p.memory_bytes},
            {"link_bandwidth_bytes_per_s", p.link_bandwidth},
            {"link_latency_s", p.link_latency},
            {"topology", topology_name(p.topology)}};
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw FormatError("cannot write platform file " + file.string());
  out << j.dump(2) << '\n';
}

PlatformConfig platform_by_name(const std::string& name_or_path) {
  if (name_or_path == "datacenter") return datacenter();
  if (name_or_path == "edge") return edge();
  return load_platform(name_or_path);
}

void Workload::validate() const {
  if (layers < 1 || neurons < 1 || element_bytes < 1) {
    throw DimensionError("workload: layers, neurons and element size must be >= 1");
  }
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw DimensionError("workload: sparsity must be in [0, 1)");
  if (nodes < 1) throw DimensionError("workload: node count must be >= 1");
}

double theoretical_comm_per_node(std::size_t neurons, std::size_t nodes, double sparsity,
                                 std::size_t element_bytes) {
  if (nodes <= 1) return 0.0;
  const double owned = static_cast<double>(neurons) / static_cast<double>(nodes);
  return owned * static_cast<double>(nodes - 1) * (1.0 - sparsity) * static_cast<double>(element_bytes);
}

double ops_per_node(std::size_t neurons, std::size_t nodes, double sparsity) {
  const double n = static_cast<double>(neurons);
  const double owned = n / static_cast<double>(nodes);
  return owned * (owned + (1.0 - sparsity) * (n - owned)) * 2.0;
}

double dense_weight_bytes_per_node(const Workload& w) {
  const double n = static_cast<double>(w.neurons);
  return static_cast<double>(w.layers) * n * (n / static_cast<double>(w.nodes)) *
         static_cast<double>(w.element_bytes);
}

namespace {

SimReport run(const PlatformConfig& platform, const Workload& workload) {
  platform.validate();
  workload.validate();
  const double footprint = dense_weight_bytes_per_node(workload);
  if (footprint > platform.memory_bytes) {
    throw InfeasibleError("simulate: " + std::to_string(footprint) + " weight bytes per node exceed " +
                          platform.name + " node memory");
  }
  SimReport report;
  report.ops_per_node = ops_per_node(workload.neurons, workload.nodes, workload.sparsity);
  report.bytes_per_node = theoretical_comm_per_node(workload.neurons, workload.nodes, workload.sparsity,
                                                    workload.element_bytes);
  LayerTiming timing;
  timing.compute = report.ops_per_node / platform.effective_ops();
  if (workload.nodes > 1) {
    const double bandwidth = platform.topology == Topology::kFullBisection
                                 ? platform.link_bandwidth
                                 : platform.link_bandwidth / static_cast<double>(workload.nodes - 1);
    timing.comm = platform.link_latency + report.bytes_per_node / bandwidth;
  }
  // Strict ordering: a layer's compute waits for all of its inputs.
  for (std::size_t l = 0; l < workload.layers; ++l) {
    report.layers.push_back(timing);
    report.compute_total += timing.compute;
    report.comm_total += timing.comm;
  }
  report.total = report.compute_total + report.comm_total;
  return report;
}

double ratio(double baseline, double value) { return value > 0.0 ? baseline / value : 1.0; }

}  // namespace

SimReport simulate(const PlatformConfig& platform, const Workload& workload) {
  SimReport report = run(platform, workload);
  Workload dense = workload;
  dense.sparsity = 0.0;
  const SimReport base = workload.sparsity == 0.0 ? report : run(platform, dense);
  report.compute_speedup = ratio(base.compute_total, report.compute_total);
  report.comm_speedup = ratio(base.comm_total, report.comm_total);
  report.total_speedup = ratio(base.total, report.total);
  return report;
}

std::vector<SpeedupRow> speedup_report(const PlatformConfig& platform, std::size_t neurons,
                                       const std::vector<double>& flavors,
                                       const std::vector<std::size_t>& node_counts, std::size_t layers,
                                       std::size_t element_bytes) {
  std::vector<SpeedupRow> rows;
  for (double s : flavors) {
    SpeedupRow row;
    row.sparsity = s;
    double compute = 0.0, comm = 0.0, total = 0.0, share = 0.0;
    for (std::size_t p : node_counts) {
      const Workload w{layers, neurons, element_bytes, s, p};
      if (dense_weight_bytes_per_node(w) > platform.memory_bytes) {
        row.skipped.push_back(p);
        continue;
      }
      const SimReport r = simulate(platform, w);
      compute += r.compute_speedup;
      comm += r.comm_speedup;
      total += r.total_speedup;
      share += r.comm_share();
      ++row.points;
    }
    if (row.points > 0) {
      const double n = static_cast<double>(row.points);
      row.compute_speedup = compute / n;
      row.comm_speedup = comm / n;
      row.total_speedup = total / n;
      row.comm_share = share / n;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_speedup_csv(std::ostream& os, std::size_t neurons, const std::vector<SpeedupRow>& rows) {
  os << "N,flavor,compute_speedup,comm_speedup,total_speedup,comm_share,points\n";
  for (const auto& r : rows) {
    os << neurons << ',' << r.sparsity << ',' << r.compute_speedup << ',' << r.comm_speedup << ','
       << r.total_speedup << ',' << r.comm_share << ',' << r.points << '\n';
  }
}

void write_report_csv(std::ostream& os, const Workload& w, const SimReport& report) {
  os << "N,P,flavor,layer,compute_s,comm_s,total_s\n";
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& t = report.layers[l];
    os << w.neurons << ',' << w.nodes << ',' << w.sparsity << ',' << l << ',' << t.compute << ','
       << t.comm << ',' << t.compute + t.comm << '\n';
  }
}

std::string report_json(const PlatformConfig& platform, const Workload& w, const SimReport& report) {
  json layers = json::array();
  for (const auto& t : report.layers) layers.push_back({{"compute_s", t.compute}, {"comm_s", t.comm}});
  json j = {{"platform", platform.name},
            {"workload",
             {{"layers", w.layers},
              {"neurons", w.neurons},
              {"nodes", w.nodes},
              {"sparsity", w.sparsity},
              {"element_bytes", w.element_bytes}}},
            {"per_layer", layers},
            {"compute_s", report.compute_total},
            {"comm_s", report.comm_total},
            {"total_s", report.total},
            {"ops_per_node", report.ops_per_node},
            {"bytes_per_node", report.bytes_per_node},
            {"speedup",
             {{"compute", report.compute_speedup},
              {"comm", report.comm_speedup},
              {"total", report.total_speedup}}}};
  return j.dump(2);
}

double naive_average_accuracy(double rho, std::size_t nodes) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DimensionError("naive_average_accuracy: rho must be in [0, 1]");
  return (1.0 + 8.0 * std::pow(rho, static_cast<double>(nodes))) / 9.0;
}

}  // namespace repurpose::sim
