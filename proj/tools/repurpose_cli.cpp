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

// Command-line front end: repurpose, sparsify, verify, simulate, stats, forward.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "repurpose/dist_exec.hpp"
#include "repurpose/error.hpp"
#include "repurpose/model_io.hpp"
#include "repurpose/random_models.hpp"
#include "repurpose/repurpose.hpp"
#include "repurpose/simulator.hpp"
#include "repurpose/verify.hpp"

namespace fs = std::filesystem;
using namespace repurpose;

namespace {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kInputError = 2, kInfeasible = 3 };

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

struct ModelArgs {
  std::string model;
  std::string partition;
  std::size_t workers = 0;
};

void add_model_args(CLI::App* cmd, ModelArgs& args) {
  cmd->add_option("--model", args.model, "RPM v1 model directory")->required();
  auto* part = cmd->add_option("--partition", args.partition, "partition spec JSON");
  auto* workers = cmd->add_option("--workers", args.workers, "balanced split over this many workers");
  part->excludes(workers);
}

PartitionSpec resolve_partition(const ModelArgs& args, const SequentialModel& model) {
  PartitionSpec spec;
  if (!args.partition.empty()) {
    spec = load_partition(args.partition);
  } else if (args.workers > 0) {
    spec = balanced_partition(model.boundary_widths(), args.workers);
  } else {
    throw FormatError("one of --partition or --workers is required");
  }
  validate(spec, model);
  return spec;
}

std::ostream& info(const GlobalOptions& g) {
  static std::ostringstream sink;
  sink.str("");
  return g.quiet ? sink : std::cout;
}

void print_layers(const GlobalOptions& g, const RepurposedModel& rep) {
  for (std::size_t l = 0; l < rep.per_layer_deviation.size(); ++l) {
    info(g) << "layer " << l << ": cross-edges " << rep.cross_edges_before[l] << " -> "
            << rep.cross_edges_after[l] << ", deviation " << std::setprecision(6)
            << rep.per_layer_deviation[l] << '\n';
  }
}

struct RestructureArgs {
  ModelArgs model;
  double eta1 = 0.0;
  std::optional<double> eta2;
  std::optional<double> epsilon;
  bool pin_output = false;
  std::size_t probe = 64;
};

int run_restructure(const GlobalOptions& g, const RestructureArgs& a, bool baseline) {
  if (g.out.empty()) throw FormatError("--out is required");
  const SequentialModel model = load_model(a.model.model);
  const PartitionSpec spec = resolve_partition(a.model, model);
  const RepurposeOptions options{a.pin_output};

  RepurposeConfig cfg{a.eta1, a.eta2.value_or(0.0)};
  if (a.epsilon) {
    CalibrationOptions calib;
    calib.repurpose = options;
    calib.baseline = baseline;
    cfg = calibrate_eta2(model, spec, a.eta1, *a.epsilon, calib);
    info(g) << "calibrated eta2 = " << std::setprecision(10) << cfg.eta2 << " for epsilon "
            << *a.epsilon << '\n';
  }
  RepurposedModel rep = baseline ? direct_sparsify(model, spec, cfg) : repurpose_model(model, spec, cfg, options);

  Rng rng(g.seed);
  const Tensor probe = random_tensor({model.boundary_widths().front(), std::max<std::size_t>(a.probe, 1)}, rng);
  try {
    rep.certificate = error_certificate(model, rep, probe);
  } catch (const UnsupportedError& e) {
    info(g) << "certificate skipped: " << e.what() << '\n';
  }
  save_repurposed(rep, g.out);
  print_layers(g, rep);
  if (rep.certificate) {
    info(g) << "certificate: tau " << rep.certificate->tau << ", B " << rep.certificate->signal_bound
            << ", epsilon " << rep.certificate->epsilon << ", bound " << rep.certificate->bound
            << (rep.certificate->holds ? " (holds on probe)" : " (VIOLATED on probe)") << '\n';
  }
  info(g) << "wrote " << g.out << '\n';
  return kOk;
}

struct VerifyArgs {
  std::string mode;
  std::size_t trials = 100;
  std::string inject_fault;
};

int run_verify(const GlobalOptions& g, const VerifyArgs& a) {
  verify::Outcome outcome;
  if (a.mode == "lemma1") {
    outcome = a.inject_fault == "threshold" ? verify::thresholding(a.trials, g.seed, verify::faulty_column_cost)
                                            : verify::thresholding(a.trials, g.seed);
  } else if (a.mode == "assignment") {
    outcome = verify::assignment(a.trials, g.seed);
  } else if (a.mode == "bound") {
    outcome = verify::bound(a.trials, g.seed);
  } else {
    outcome = verify::exec(a.trials, g.seed);
  }
  if (!outcome.ok) {
    std::cerr << "verify " << a.mode << ": FAILED\n" << outcome.failure << '\n';
    return kVerifyFailed;
  }
  info(g) << "verify " << a.mode << ": ok (" << outcome.trials << " trials, " << outcome.checks
          << " checks, seed " << g.seed << ")\n";
  return kOk;
}

struct SimulateArgs {
  std::string platform = "datacenter";
  std::size_t neurons = 8192;
  std::size_t nodes = 2;
  double sparsity = 0.0;
  std::size_t layers = 5;
  bool sweep = false;
};

int run_simulate(const GlobalOptions& g, const SimulateArgs& a) {
  const sim::PlatformConfig platform = sim::platform_by_name(a.platform);
  if (a.sweep) {
    std::vector<double> flavors{0.0};
    flavors.insert(flavors.end(), std::begin(sim::kSparsityFlavors), std::end(sim::kSparsityFlavors));
    std::vector<std::size_t> nodes;
    for (std::size_t p = 2; p <= 32; ++p) nodes.push_back(p);
    const auto rows = sim::speedup_report(platform, a.neurons, flavors, nodes, a.layers);
    std::ostringstream csv;
    sim::write_speedup_csv(csv, a.neurons, rows);
    if (!g.out.empty()) {
      fs::create_directories(g.out);
      std::ofstream(fs::path(g.out) / "speedups.csv") << csv.str();
    }
    info(g) << csv.str();
    return kOk;
  }
  const sim::Workload workload{a.layers, a.neurons, 4, a.sparsity, a.nodes};
  const sim::SimReport report = sim::simulate(platform, workload);
  const std::string json = sim::report_json(platform, workload, report);
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    std::ofstream(fs::path(g.out) / "report.json") << json << '\n';
    std::ofstream csv(fs::path(g.out) / "report.csv");
    sim::write_report_csv(csv, workload, report);
  }
  info(g) << json << '\n';
  return kOk;
}

int run_stats(const GlobalOptions& g, const ModelArgs& a) {
  const SequentialModel model = load_model(a.model);
  const PartitionSpec spec = resolve_partition(a, model);
  nlohmann::json layers = nlohmann::json::array();
  std::size_t total_cross = 0;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    const Tensor& w = model.dense(l).weight;
    const MaskMatrix mask = build_mask(spec.counts[l], spec.counts[l + 1]);
    const std::size_t cross = cross_edge_count(w, mask);
    const std::size_t nnz = w.count_nonzero();
    total_cross += cross;
    layers.push_back({{"layer", l},
                      {"nonzeros", nnz},
                      {"cross_edges", cross},
                      {"cross_fraction", w.size() ? static_cast<double>(cross) / static_cast<double>(w.size()) : 0.0}});
    info(g) << "layer " << l << ": " << nnz << " nonzeros, " << cross << " cross-edges\n";
  }
  info(g) << "total cross-edges: " << total_cross << '\n';
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    std::ofstream(fs::path(g.out) / "stats.json")
        << nlohmann::json{{"layers", layers}, {"total_cross_edges", total_cross}}.dump(2) << '\n';
  }
  return kOk;
}

struct ForwardArgs {
  ModelArgs model;
  std::size_t batch = 8;
  bool threaded = false;
};

int run_forward(const GlobalOptions& g, const ForwardArgs& a) {
  const SequentialModel model = load_model(a.model.model);
  const PartitionSpec spec = resolve_partition(a.model, model);
  Rng rng(g.seed);
  const Tensor inputs = random_tensor({model.boundary_widths().front(), std::max<std::size_t>(a.batch, 1)}, rng);
  const ShardedModel sharded = shard_model(model, spec);
  const DistributedResult dist =
      distributed_forward(sharded, inputs, a.threaded ? ExecMode::kThreaded : ExecMode::kSequential);
  const double err = max_relative_error(dist.concatenated(), forward_output(model, inputs));
  info(g) << "max relative error: " << std::scientific << std::setprecision(3) << err << '\n';
  info(g) << std::defaultfloat << "values communicated per sample: " << dist.comm.total_values() << '\n';
  for (std::size_t k = 0; k < dist.multiply_count.size(); ++k) {
    info(g) << "worker " << k << ": " << dist.multiply_count[k] << " multiplies per sample\n";
  }
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    std::ofstream csv(fs::path(g.out) / "comm_log.csv");
    dist.comm.write_csv(csv);
  }
  return err <= 1e-9 ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restructure layered networks for partitioned inference"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--seed", global.seed, "random seed")->default_val(0);
  app.add_option("--out", global.out, "output directory");
  app.add_flag("--quiet", global.quiet, "suppress progress output");

  RestructureArgs rp;
  auto* cmd_rp = app.add_subcommand("repurpose", "permute neurons and prune cross-worker weights");
  add_model_args(cmd_rp, rp.model);
  cmd_rp->add_option("--eta1", rp.eta1, "total-sparsity penalty")->default_val(0.0);
  auto* eta2 = cmd_rp->add_option("--eta2", rp.eta2, "cross-edge penalty");
  auto* eps = cmd_rp->add_option("--epsilon", rp.epsilon, "per-layer squared deviation budget");
  eta2->excludes(eps);
  cmd_rp->add_flag("--pin-output", rp.pin_output, "keep final-layer neuron order");
  cmd_rp->add_option("--probe", rp.probe, "probe samples for the certificate")->default_val(64);

  RestructureArgs sp;
  auto* cmd_sp = app.add_subcommand("sparsify", "baseline: prune cross-worker weights without permuting");
  add_model_args(cmd_sp, sp.model);
  cmd_sp->add_option("--eta1", sp.eta1)->default_val(0.0);
  auto* sp_eta2 = cmd_sp->add_option("--eta2", sp.eta2);
  sp_eta2->excludes(cmd_sp->add_option("--epsilon", sp.epsilon));
  cmd_sp->add_option("--probe", sp.probe)->default_val(64);

  VerifyArgs va;
  auto* cmd_verify = app.add_subcommand("verify", "run an oracle suite on seeded random instances");
  cmd_verify->add_option("--mode", va.mode)->required()->check(CLI::IsMember({"lemma1", "assignment", "bound", "exec"}));
  cmd_verify->add_option("--trials", va.trials)->default_val(100);
  cmd_verify->add_option("--inject-fault", va.inject_fault)->group("")->check(CLI::IsMember({"threshold"}));

  SimulateArgs sa;
  auto* cmd_sim = app.add_subcommand("simulate", "analytic compute/communication timing");
  cmd_sim->add_option("--platform", sa.platform, "datacenter, edge, or a platform JSON file")->default_val("datacenter");
  cmd_sim->add_option("--neurons", sa.neurons)->default_val(8192);
  cmd_sim->add_option("--nodes", sa.nodes)->default_val(2);
  cmd_sim->add_option("--sparsity", sa.sparsity)->default_val(0.0);
  cmd_sim->add_option("--layers", sa.layers)->default_val(5);
  cmd_sim->add_flag("--sweep", sa.sweep, "speedups for RP-50/75/90/99 averaged over 2..32 nodes");

  ModelArgs st;
  auto* cmd_stats = app.add_subcommand("stats", "per-layer nonzero and cross-edge counts");
  add_model_args(cmd_stats, st);

  ForwardArgs fa;
  auto* cmd_fwd = app.add_subcommand("forward", "compare distributed and monolithic forward passes");
  add_model_args(cmd_fwd, fa.model);
  cmd_fwd->add_option("--batch", fa.batch)->default_val(8);
  cmd_fwd->add_flag("--threaded", fa.threaded, "run workers on separate threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*cmd_rp) return run_restructure(global, rp, false);
    if (*cmd_sp) return run_restructure(global, sp, true);
    if (*cmd_verify) return run_verify(global, va);
    if (*cmd_sim) return run_simulate(global, sa);
    if (*cmd_stats) return run_stats(global, st);
    if (*cmd_fwd) return run_forward(global, fa);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
