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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "repurpose/assignment.hpp"
#include "repurpose/dist_exec.hpp"
#include "repurpose/error.hpp"
#include "repurpose/model_io.hpp"
#include "repurpose/partition.hpp"
#include "repurpose/random_models.hpp"
#include "repurpose/repurpose.hpp"
#include "repurpose/simulator.hpp"
#include "repurpose/verify.hpp"

namespace py = pybind11;
using namespace repurpose;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Array batch_from(const Array& a) {
  // Accept a single sample as a 1-D vector.
  if (a.ndim() != 1) return a;
  Array copy = a;
  return copy.reshape({a.shape(0), py::ssize_t{1}});
}

ActivationKind activation_kind(const std::string& name) { return parse_activation(name); }

SequentialModel model_from_layers(const py::list& layers) {
  SequentialModel m;
  for (const auto& item : layers) {
    const auto tup = item.cast<py::tuple>();
    if (tup.size() != 3) throw DimensionError("each layer must be (weight, bias, activation)");
    m.layers.emplace_back(DenseLayer{to_tensor(tup[0].cast<Array>()), to_tensor(tup[1].cast<Array>()),
                                     Activation{activation_kind(tup[2].cast<std::string>())}});
  }
  validate(m);
  return m;
}

py::dict cert_dict(const ErrorCertificate& c) {
  py::dict d;
  d["tau"] = c.tau;
  d["B"] = c.signal_bound;
  d["epsilon"] = c.epsilon;
  d["bound"] = c.bound;
  d["assumptions_ok"] = c.assumptions_ok;
  d["measured"] = c.measured;
  d["holds"] = c.holds;
  d["recursion_holds"] = c.recursion_holds;
  return d;
}

py::dict outcome_dict(const verify::Outcome& o) {
  py::dict d;
  d["ok"] = o.ok;
  d["trials"] = o.trials;
  d["checks"] = o.checks;
  d["failure"] = o.failure;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neuron reassignment and cross-worker pruning for partitioned inference";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());

  py::class_<SequentialModel>(m, "Model")
      .def(py::init(&model_from_layers), py::arg("layers"),
           "Build a dense model from (weight[in, out], bias[out], activation) tuples.")
      .def_property_readonly("depth", &SequentialModel::depth)
      .def_property_readonly("widths", &SequentialModel::boundary_widths)
      .def("weight", [](const SequentialModel& s, std::size_t l) { return to_array(s.dense(l).weight); })
      .def("bias", [](const SequentialModel& s, std::size_t l) { return to_array(s.dense(l).bias); })
      .def("activation",
           [](const SequentialModel& s, std::size_t l) { return std::string(to_string(s.dense(l).activation.kind)); })
      .def("forward", [](const SequentialModel& s, const Array& x) {
        return to_array(forward_output(s, to_tensor(batch_from(x))));
      }, py::arg("x"), "Forward pass on a batch of shape (in, K).")
      .def("save", [](const SequentialModel& s, const std::filesystem::path& dir) { save_model(s, dir); })
      .def("__eq__", [](const SequentialModel& a, const SequentialModel& b) { return a == b; });

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "random_model",
      [](const std::vector<std::size_t>& widths, std::uint64_t seed, const std::string& hidden,
         const std::string& output) {
        Rng rng(seed);
        return random_dense_model(widths, rng, activation_kind(hidden), activation_kind(output));
      },
      py::arg("widths"), py::arg("seed") = 0, py::arg("hidden") = "relu", py::arg("output") = "identity");
  m.def(
      "planted_model",
      [](const PartitionSpec& spec, std::uint64_t seed) {
        Rng rng(seed);
        PlantedModel p = planted_model(spec, rng);
        return py::make_tuple(p.block_diagonal, p.scrambled);
      },
      py::arg("spec"), py::arg("seed") = 0, "Returns (block_diagonal, scrambled) models.");

  py::class_<PartitionSpec>(m, "PartitionSpec")
      .def(py::init([](std::vector<WorkerCounts> counts) {
             PartitionSpec s{counts.empty() ? 1 : counts.front().size(), std::move(counts)};
             validate(s);
             return s;
           }),
           py::arg("counts"))
      .def_readonly("workers", &PartitionSpec::workers)
      .def_readonly("counts", &PartitionSpec::counts)
      .def("save", [](const PartitionSpec& s, const std::filesystem::path& f) { save_partition(s, f); })
      .def("__eq__", [](const PartitionSpec& a, const PartitionSpec& b) { return a == b; });
  m.def("balanced_partition", [](const std::vector<std::size_t>& widths, std::size_t workers) {
    return balanced_partition(widths, workers);
  }, py::arg("widths"), py::arg("workers"));
  m.def("load_partition", &load_partition, py::arg("path"));
  m.def("build_mask", [](const WorkerCounts& in, const WorkerCounts& out) {
    return to_array(build_mask(in, out).dense());
  }, py::arg("in_counts"), py::arg("out_counts"));
  m.def("cross_edge_count", [](const Array& w, const WorkerCounts& in, const WorkerCounts& out) {
    return cross_edge_count(to_tensor(w), build_mask(in, out));
  }, py::arg("weight"), py::arg("in_counts"), py::arg("out_counts"));

  py::class_<RepurposeConfig>(m, "RepurposeConfig")
      .def(py::init([](double eta1, double eta2) {
             RepurposeConfig c{eta1, eta2};
             c.validate();
             return c;
           }),
           py::arg("eta1") = 0.0, py::arg("eta2") = 0.0)
      .def_readonly("eta1", &RepurposeConfig::eta1)
      .def_readonly("eta2", &RepurposeConfig::eta2)
      .def("__repr__", [](const RepurposeConfig& c) {
        std::ostringstream os;
        os << "RepurposeConfig(eta1=" << c.eta1 << ", eta2=" << c.eta2 << ")";
        return os.str();
      });

  m.def(
      "column_cost",
      [](const std::vector<double>& w, const WorkerCounts& in, std::size_t worker, const RepurposeConfig& cfg) {
        ColumnCost c = column_cost(w, in, worker, cfg);
        return py::make_tuple(c.pruned, c.cost);
      },
      py::arg("column"), py::arg("in_counts"), py::arg("worker"), py::arg("config"),
      "Returns (pruned column, cost); workers are 0-based.");
  m.def(
      "cost_matrix",
      [](const Array& w, const WorkerCounts& in, const WorkerCounts& out, const RepurposeConfig& cfg) {
        const CostMatrix c = build_cost_matrix(to_tensor(w), in, out, cfg);
        return to_array(Tensor({c.workers, c.neurons}, c.values));
      },
      py::arg("weight"), py::arg("in_counts"), py::arg("out_counts"), py::arg("config"));
  m.def(
      "munkres",
      [](const Array& cost) {
        const Matching r = munkres(to_tensor(cost));
        return py::make_tuple(r.row_to_col, r.total);
      },
      py::arg("cost"), "Returns (column per row, total cost).");

  py::class_<AssignmentResult>(m, "AssignmentResult")
      .def_property_readonly("permutation", [](const AssignmentResult& r) { return r.permutation.map(); })
      .def_readonly("worker_of", &AssignmentResult::worker_of)
      .def_readonly("total_cost", &AssignmentResult::total_cost)
      .def_readonly("per_neuron_cost", &AssignmentResult::per_neuron_cost);
  m.def("assign_neurons", [](const Array& w, const WorkerCounts& in, const WorkerCounts& out, const RepurposeConfig& cfg) {
    return assign_neurons(to_tensor(w), in, out, cfg);
  }, py::arg("weight"), py::arg("in_counts"), py::arg("out_counts"), py::arg("config"));
  m.def(
      "brute_force_assign",
      [](const Array& w, const WorkerCounts& in, const WorkerCounts& out, const RepurposeConfig& cfg, std::size_t cap) {
        return brute_force_assign(to_tensor(w), in, out, cfg, cap);
      },
      py::arg("weight"), py::arg("in_counts"), py::arg("out_counts"), py::arg("config"),
      py::arg("cap") = kDefaultBruteForceCap);
  m.def(
      "count_assignments",
      [](std::size_t n, const WorkerCounts& counts) {
        return py::int_(py::str(count_assignments(n, counts).str()));
      },
      py::arg("n"), py::arg("counts"));
  m.def("asymptotic_log_estimate", &asymptotic_log_estimate, py::arg("n"), py::arg("workers"));

  py::class_<RepurposedModel>(m, "RepurposedModel")
      .def_readonly("model", &RepurposedModel::model)
      .def_property_readonly("permutations",
                             [](const RepurposedModel& r) {
                               std::vector<std::vector<std::size_t>> out;
                               for (const auto& p : r.permutations) out.push_back(p.map());
                               return out;
                             })
      .def_readonly("per_layer_deviation", &RepurposedModel::per_layer_deviation)
      .def_readonly("cross_edges_before", &RepurposedModel::cross_edges_before)
      .def_readonly("cross_edges_after", &RepurposedModel::cross_edges_after)
      .def_readonly("config", &RepurposedModel::config)
      .def_property_readonly("certificate",
                             [](const RepurposedModel& r) -> py::object {
                               if (!r.certificate) return py::none();
                               return cert_dict(*r.certificate);
                             })
      .def("output_permutation", [](const RepurposedModel& r) { return r.output_permutation().map(); })
      .def("unpermute_output",
           [](const RepurposedModel& r, const Array& y) {
             return to_array(r.output_permutation().inverse().apply_rows(to_tensor(batch_from(y))));
           },
           py::arg("y"), "Map repurposed outputs back to the original neuron order.")
      .def("certify",
           [](RepurposedModel& r, const SequentialModel& original, const Array& probe) {
             r.certificate = error_certificate(original, r, to_tensor(batch_from(probe)));
             return cert_dict(*r.certificate);
           },
           py::arg("original"), py::arg("probe"))
      .def("save", [](const RepurposedModel& r, const std::filesystem::path& dir) { save_repurposed(r, dir); });

  m.def("repurpose", [](const SequentialModel& model, const PartitionSpec& spec, const RepurposeConfig& cfg,
                        bool pin_output) { return repurpose_model(model, spec, cfg, RepurposeOptions{pin_output}); },
        py::arg("model"), py::arg("spec"), py::arg("config"), py::arg("pin_output") = false);
  m.def("direct_sparsify", &direct_sparsify, py::arg("model"), py::arg("spec"), py::arg("config"));
  m.def(
      "calibrate_eta2",
      [](const SequentialModel& model, const PartitionSpec& spec, double eta1, double epsilon, bool baseline) {
        CalibrationOptions opts;
        opts.baseline = baseline;
        return calibrate_eta2(model, spec, eta1, epsilon, opts);
      },
      py::arg("model"), py::arg("spec"), py::arg("eta1"), py::arg("epsilon"), py::arg("baseline") = false);
  m.def("load_repurposed", &load_repurposed, py::arg("path"));
  m.def("deviation_bound", &deviation_bound, py::arg("epsilon"), py::arg("tau"), py::arg("depth"),
        py::arg("signal_bound"));

  py::class_<CommRecord>(m, "CommRecord")
      .def_readonly("layer", &CommRecord::layer)
      .def_readonly("src", &CommRecord::src)
      .def_readonly("dst", &CommRecord::dst)
      .def_readonly("values", &CommRecord::values)
      .def_readonly("bytes", &CommRecord::bytes);
  py::class_<ShardedModel>(m, "ShardedModel").def_readonly("workers", &ShardedModel::workers);
  m.def("shard", py::overload_cast<const SequentialModel&, const PartitionSpec&>(&shard_model), py::arg("model"),
        py::arg("spec"));
  m.def(
      "distributed_forward",
      [](const ShardedModel& sharded, const Array& x, bool threaded, std::size_t element_bytes) {
        const DistributedResult r = distributed_forward(
            sharded, to_tensor(batch_from(x)), threaded ? ExecMode::kThreaded : ExecMode::kSequential, element_bytes);
        py::dict d;
        d["output"] = to_array(r.concatenated());
        d["comm"] = r.comm.records;
        d["multiply_count"] = r.multiply_count;
        std::ostringstream csv;
        r.comm.write_csv(csv);
        d["comm_csv"] = csv.str();
        return d;
      },
      py::arg("sharded"), py::arg("x"), py::arg("threaded") = false, py::arg("element_bytes") = 4);

  auto sim = m.def_submodule("sim", "Analytic timing model");
  py::enum_<sim::Topology>(sim, "Topology")
      .value("FULL_BISECTION", sim::Topology::kFullBisection)
      .value("SHARED_MEDIUM", sim::Topology::kSharedMedium);
  py::class_<sim::PlatformConfig>(sim, "Platform")
      .def_readwrite("name", &sim::PlatformConfig::name)
      .def_readwrite("peak_ops", &sim::PlatformConfig::peak_ops)
      .def_readwrite("efficiency", &sim::PlatformConfig::efficiency)
      .def_readwrite("memory_bytes", &sim::PlatformConfig::memory_bytes)
      .def_readwrite("link_bandwidth", &sim::PlatformConfig::link_bandwidth)
      .def_readwrite("link_latency", &sim::PlatformConfig::link_latency)
      .def_readwrite("topology", &sim::PlatformConfig::topology);
  sim.def("datacenter", &sim::datacenter);
  sim.def("edge", &sim::edge);
  sim.def("platform", &sim::platform_by_name, py::arg("name_or_path"));
  sim.def("comm_per_node", &sim::theoretical_comm_per_node, py::arg("neurons"), py::arg("nodes"),
          py::arg("sparsity"), py::arg("element_bytes") = 4);
  sim.def("ops_per_node", &sim::ops_per_node, py::arg("neurons"), py::arg("nodes"), py::arg("sparsity"));
  sim.def(
      "simulate",
      [](const sim::PlatformConfig& platform, std::size_t neurons, std::size_t nodes, double sparsity,
         std::size_t layers, std::size_t element_bytes) {
        const sim::Workload w{layers, neurons, element_bytes, sparsity, nodes};
        const sim::SimReport r = sim::simulate(platform, w);
        py::dict d;
        d["compute_s"] = r.compute_total;
        d["comm_s"] = r.comm_total;
        d["total_s"] = r.total;
        d["comm_share"] = r.comm_share();
        d["compute_speedup"] = r.compute_speedup;
        d["comm_speedup"] = r.comm_speedup;
        d["total_speedup"] = r.total_speedup;
        return d;
      },
      py::arg("platform"), py::arg("neurons"), py::arg("nodes"), py::arg("sparsity") = 0.0, py::arg("layers") = 5,
      py::arg("element_bytes") = 4);
  sim.def("naive_average_accuracy", &sim::naive_average_accuracy, py::arg("rho"), py::arg("nodes"));

  auto ver = m.def_submodule("verify", "Seeded oracle suites");
  ver.def("thresholding", [](std::size_t t, std::uint64_t s) { return outcome_dict(verify::thresholding(t, s)); },
          py::arg("trials"), py::arg("seed") = 0);
  ver.def("assignment", [](std::size_t t, std::uint64_t s) { return outcome_dict(verify::assignment(t, s)); },
          py::arg("trials"), py::arg("seed") = 0);
  ver.def("bound", [](std::size_t t, std::uint64_t s) { return outcome_dict(verify::bound(t, s)); },
          py::arg("trials"), py::arg("seed") = 0);
  ver.def("exec", [](std::size_t t, std::uint64_t s) { return outcome_dict(verify::exec(t, s)); },
          py::arg("trials"), py::arg("seed") = 0);
}
