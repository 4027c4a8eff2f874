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

#include "repurpose/repurpose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "repurpose/error.hpp"
#include "repurpose/model_io.hpp"

namespace repurpose {

using nlohmann::json;

double RepurposedModel::max_deviation() const {
  double m = 0.0;
  for (double d : per_layer_deviation) m = std::max(m, d);
  return m;
}

Tensor threshold_matrix(const MaskMatrix& mask, const RepurposeConfig& cfg) {
  cfg.validate();
  Tensor e = Tensor::matrix(mask.rows(), mask.cols());
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      e.at(r, c) = cfg.eta1 + cfg.eta2 * mask(r, c);
    }
  }
  return e;
}

Tensor hard_threshold_matrix(const Tensor& values, const Tensor& thresholds) {
  if (values.shape() != thresholds.shape()) {
    throw DimensionError("hard_threshold_matrix: value and threshold shapes differ");
  }
  Tensor out = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (thresholds[i] < 0.0) throw DimensionError("hard_threshold_matrix: negative threshold");
    if (is_pruned(values[i], thresholds[i])) out[i] = 0.0;
  }
  return out;
}

namespace {

using PermutationChooser = std::function<Permutation(std::size_t layer, const Tensor& rows_permuted,
                                                     const WorkerCounts& in, const WorkerCounts& out)>;

void check_dense_pipeline(const SequentialModel& model, const PartitionSpec& spec) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!std::holds_alternative<DenseLayer>(model.layers[l])) {
      throw UnsupportedError("layer " + std::to_string(l) +
                             " is convolutional; restructure it with repurpose_conv");
    }
  }
  validate(model);
  validate(spec, model);
}

RepurposedModel restructure(const SequentialModel& model, const PartitionSpec& spec,
                            const RepurposeConfig& cfg, const PermutationChooser& choose) {
  check_dense_pipeline(model, spec);
  cfg.validate();
  RepurposedModel rep;
  rep.config = cfg;
  rep.permutations.push_back(Permutation::identity(model.boundary_widths().empty() ? 0 : model.boundary_widths()[0]));
  for (std::size_t l = 0; l < model.depth(); ++l) {
    const DenseLayer& layer = model.dense(l);
    const WorkerCounts& in_counts = spec.counts[l];
    const WorkerCounts& out_counts = spec.counts[l + 1];
    const Permutation& input_perm = rep.permutations.back();

    const Tensor rows_permuted = input_perm.apply_rows(layer.weight);
    Permutation output_perm = choose(l, rows_permuted, in_counts, out_counts);
    DenseLayer permuted = apply_permutation(layer, input_perm, output_perm);

    const MaskMatrix mask(in_counts, out_counts);
    Tensor pruned = hard_threshold_matrix(permuted.weight, threshold_matrix(mask, cfg));
    double deviation_sq = 0.0;
    for (std::size_t i = 0; i < pruned.size(); ++i) {
      const double d = permuted.weight[i] - pruned[i];
      deviation_sq += d * d;
    }
    rep.per_layer_deviation.push_back(std::sqrt(deviation_sq));
    rep.cross_edges_before.push_back(cross_edge_count(layer.weight, mask));
    rep.cross_edges_after.push_back(cross_edge_count(pruned, mask));

    rep.model.layers.emplace_back(DenseLayer{std::move(pruned), std::move(permuted.bias), layer.activation});
    rep.permutations.push_back(std::move(output_perm));
  }
  return rep;
}

}  // namespace

RepurposedModel repurpose_model(const SequentialModel& model, const PartitionSpec& spec,
                                const RepurposeConfig& cfg, RepurposeOptions options) {
  const std::size_t last = model.depth() == 0 ? 0 : model.depth() - 1;
  return restructure(model, spec, cfg,
                     [&](std::size_t l, const Tensor& t, const WorkerCounts& in, const WorkerCounts& out) {
                       if (options.pin_output_order && l == last) return Permutation::identity(t.cols());
                       return assign_neurons(t, in, out, cfg).permutation;
                     });
}

RepurposedModel direct_sparsify(const SequentialModel& model, const PartitionSpec& spec,
                                const RepurposeConfig& cfg) {
  return restructure(model, spec, cfg,
                     [](std::size_t, const Tensor& t, const WorkerCounts&, const WorkerCounts&) {
                       return Permutation::identity(t.cols());
                     });
}

RepurposeConfig calibrate_eta2(const SequentialModel& model, const PartitionSpec& spec, double eta1,
                               double epsilon, CalibrationOptions options) {
  if (!(epsilon > 0.0)) throw DimensionError("calibrate_eta2: epsilon must be > 0");
  check_dense_pipeline(model, spec);
  // Budget applies to the squared Frobenius deviation of every layer.
  const double budget = std::sqrt(epsilon);
  auto feasible = [&](double eta2) {
    const RepurposeConfig cfg{eta1, eta2};
    const auto rep = options.baseline ? direct_sparsify(model, spec, cfg)
                                      : repurpose_model(model, spec, cfg, options.repurpose);
    return rep.max_deviation() <= budget;
  };

  double upper = 0.0;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    for (double w : model.dense(l).weight.data()) upper = std::max(upper, w * w);
  }
  if (!feasible(0.0)) {
    throw InfeasibleError("calibrate_eta2: eta2 = 0 already exceeds epsilon; lower eta1");
  }
  if (feasible(upper)) return RepurposeConfig{eta1, upper};

  double lo = 0.0;
  double hi = upper;
  for (int it = 0; it < options.max_iterations && hi - lo > options.relative_tolerance * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return RepurposeConfig{eta1, lo};
}

double filter_energy(const ConvLayer& layer, std::size_t in, std::size_t out) {
  const std::size_t cin = layer.in_channels();
  const std::size_t cout = layer.out_channels();
  double e = 0.0;
  for (std::size_t s = 0; s < layer.spatial_size(); ++s) {
    const double v = layer.kernel[(s * cin + in) * cout + out];
    e += v * v;
  }
  return e;
}

namespace {

void check_conv_counts(const ConvLayer& layer, const WorkerCounts& in_counts, const WorkerCounts& out_counts) {
  validate(layer, 0);
  if (in_counts.size() != out_counts.size()) {
    throw DimensionError("repurpose_conv: input and output count vectors differ in length");
  }
  auto sum = [](const WorkerCounts& c) { return std::accumulate(c.begin(), c.end(), std::size_t{0}); };
  if (sum(in_counts) != layer.in_channels() || sum(out_counts) != layer.out_channels()) {
    throw DimensionError("repurpose_conv: channel counts do not sum to c_in / c_out");
  }
}

}  // namespace

CostMatrix conv_cost_matrix(const ConvLayer& layer, const WorkerCounts& in_channel_counts,
                            const WorkerCounts& out_channel_counts, const RepurposeConfig& cfg) {
  check_conv_counts(layer, in_channel_counts, out_channel_counts);
  cfg.validate();
  const std::size_t workers = in_channel_counts.size();
  const std::size_t cin = layer.in_channels();
  const std::size_t cout = layer.out_channels();
  const auto owner = block_owner(in_channel_counts);
  CostMatrix costs{workers, cout, std::vector<double>(workers * cout, 0.0), out_channel_counts};
  for (std::size_t i = 0; i < cout; ++i) {
    for (std::size_t j = 0; j < workers; ++j) {
      double c = 0.0;
      for (std::size_t l = 0; l < cin; ++l) {
        const double energy = filter_energy(layer, l, i);
        const double eta = cfg.eta1 + (owner[l] == j ? 0.0 : cfg.eta2);
        c += energy <= eta ? energy : eta;
      }
      costs.values[j * cout + i] = c;
    }
  }
  return costs;
}

ConvLayer permute_conv_channels(const ConvLayer& layer, const Permutation& in_perm,
                                const Permutation& out_perm) {
  const std::size_t cin = layer.in_channels();
  const std::size_t cout = layer.out_channels();
  if (in_perm.size() != cin || out_perm.size() != cout) {
    throw DimensionError("permute_conv_channels: permutation sizes do not match channels");
  }
  ConvLayer out{Tensor(layer.kernel.shape()), Tensor::vector(cout), layer.activation};
  for (std::size_t s = 0; s < layer.spatial_size(); ++s) {
    for (std::size_t l = 0; l < cin; ++l) {
      for (std::size_t k = 0; k < cout; ++k) {
        out.kernel[(s * cin + in_perm[l]) * cout + out_perm[k]] = layer.kernel[(s * cin + l) * cout + k];
      }
    }
  }
  for (std::size_t k = 0; k < cout; ++k) out.bias[out_perm[k]] = layer.bias[k];
  return out;
}

ConvRepurposeResult repurpose_conv(const ConvLayer& layer, const WorkerCounts& in_channel_counts,
                                   const WorkerCounts& out_channel_counts, const RepurposeConfig& cfg) {
  const CostMatrix costs = conv_cost_matrix(layer, in_channel_counts, out_channel_counts, cfg);
  AssignmentResult assignment = assign_from_costs(costs);

  const std::size_t cin = layer.in_channels();
  const std::size_t cout = layer.out_channels();
  const auto in_owner = block_owner(in_channel_counts);
  ConvRepurposeResult result;
  result.layer = permute_conv_channels(layer, Permutation::identity(cin), assignment.permutation);
  for (std::size_t i = 0; i < cout; ++i) {
    const std::size_t worker = assignment.worker_of[i];
    const std::size_t k = assignment.permutation[i];
    for (std::size_t l = 0; l < cin; ++l) {
      const double eta = cfg.eta1 + (in_owner[l] == worker ? 0.0 : cfg.eta2);
      if (filter_energy(layer, l, i) > eta) continue;
      for (std::size_t s = 0; s < layer.spatial_size(); ++s) {
        result.layer.kernel[(s * cin + l) * cout + k] = 0.0;
      }
    }
  }
  result.permutation = std::move(assignment.permutation);
  result.per_channel_cost = std::move(assignment.per_neuron_cost);
  result.total_cost = assignment.total_cost;
  return result;
}

double deviation_bound(double epsilon, double tau, std::size_t depth, double signal_bound) {
  const double ratio = tau + epsilon;
  double geometric = 0.0;
  double term = 1.0;
  for (std::size_t k = 0; k < depth; ++k) {
    geometric += term;
    term *= ratio;
  }
  return epsilon * geometric * signal_bound;
}

namespace {

double column_norm(const Tensor& t, std::size_t col) {
  double s = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) s += t.at(r, col) * t.at(r, col);
  return std::sqrt(s);
}

// ||Pi a[:, col] - b[:, col]||_2
double permuted_distance(const Permutation& perm, const Tensor& a, const Tensor& b, std::size_t col) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double d = a.at(r, col) - b.at(perm[r], col);
    s += d * d;
  }
  return std::sqrt(s);
}

void require_lipschitz(const SequentialModel& model, const char* which) {
  for (std::size_t l = 0; l < model.depth(); ++l) {
    if (!model.dense(l).activation.lipschitz_one) {
      throw UnsupportedError(std::string("certificate refused: ") + which + " layer " +
                             std::to_string(l) + " activation is not 1-Lipschitz");
    }
  }
}

}  // namespace

ErrorCertificate error_certificate(const SequentialModel& original, const RepurposedModel& repurposed,
                                   const Tensor& probe) {
  if (probe.rank() != 2 || probe.cols() == 0) throw DimensionError("certificate: empty probe batch");
  if (original.depth() != repurposed.model.depth() ||
      repurposed.permutations.size() != original.depth() + 1) {
    throw DimensionError("certificate: repurposed model does not match original depth");
  }
  require_lipschitz(original, "original");
  require_lipschitz(repurposed.model, "repurposed");

  const std::size_t depth = original.depth();
  ErrorCertificate cert;
  for (std::size_t l = 0; l < depth; ++l) {
    cert.tau = std::max(cert.tau, std::sqrt(original.dense(l).weight.frobenius_norm_squared()));
  }
  cert.epsilon = repurposed.max_deviation();

  const ForwardTrace ref = forward(original, probe);
  const ForwardTrace got = forward(repurposed.model, probe);
  const std::size_t samples = probe.cols();
  double output_scale = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    for (std::size_t l = 0; l < depth; ++l) {
      cert.signal_bound = std::max(cert.signal_bound, column_norm(ref.activations[l], k));
    }
    output_scale = std::max(output_scale, column_norm(ref.output(), k));
  }
  cert.bound = deviation_bound(cert.epsilon, cert.tau, depth, cert.signal_bound);
  cert.assumptions_ok = std::isfinite(cert.tau) && std::isfinite(cert.signal_bound) &&
                        std::isfinite(cert.bound);

  // Allowance for rounding in the two forward passes.
  const double slack = 1e-12 * (1.0 + output_scale + cert.bound);
  const double growth = cert.tau + cert.epsilon;
  cert.holds = true;
  cert.recursion_holds = true;
  cert.layer_errors.assign(samples, std::vector<double>(depth, 0.0));
  for (std::size_t k = 0; k < samples; ++k) {
    double previous = 0.0;
    for (std::size_t l = 0; l < depth; ++l) {
      const double e = permuted_distance(repurposed.permutations[l + 1], ref.activations[l + 1],
                                         got.activations[l + 1], k);
      cert.layer_errors[k][l] = e;
      if (e > growth * previous + cert.epsilon * cert.signal_bound + slack) cert.recursion_holds = false;
      previous = e;
    }
    cert.measured.push_back(previous);
    if (previous > cert.bound + slack) cert.holds = false;
  }
  return cert;
}

void save_repurposed(const RepurposedModel& rep, const std::filesystem::path& dir) {
  save_model(rep.model, dir);
  json perms = json::array();
  for (const auto& p : rep.permutations) perms.push_back(p.map());
  json report = {{"permutations", perms},
                 {"per_layer_deviation", rep.per_layer_deviation},
                 {"cross_edges_before", rep.cross_edges_before},
                 {"cross_edges_after", rep.cross_edges_after},
                 {"eta1", rep.config.eta1},
                 {"eta2", rep.config.eta2}};
  if (rep.certificate) {
    report["certificate"] = {{"tau", rep.certificate->tau},
                             {"B", rep.certificate->signal_bound},
                             {"epsilon", rep.certificate->epsilon},
                             {"bound", rep.certificate->bound}};
  } else {
    report["certificate"] = nullptr;
  }
  std::ofstream out(dir / "repurpose.json", std::ios::trunc);
  if (!out) throw FormatError("cannot write repurpose.json in " + dir.string());
  out << report.dump(2) << '\n';
}

RepurposedModel load_repurposed(const std::filesystem::path& dir) {
  RepurposedModel rep;
  rep.model = load_model(dir);
  std::ifstream in(dir / "repurpose.json");
  if (!in) throw FormatError("missing repurpose.json in " + dir.string());
  try {
    json j;
    in >> j;
    for (const auto& p : j.at("permutations")) rep.permutations.emplace_back(p.get<std::vector<std::size_t>>());
    rep.per_layer_deviation = j.at("per_layer_deviation").get<std::vector<double>>();
    rep.cross_edges_before = j.at("cross_edges_before").get<std::vector<std::size_t>>();
    rep.cross_edges_after = j.at("cross_edges_after").get<std::vector<std::size_t>>();
    rep.config = RepurposeConfig{j.at("eta1").get<double>(), j.at("eta2").get<double>()};
    if (j.contains("certificate") && !j["certificate"].is_null()) {
      const auto& c = j["certificate"];
      ErrorCertificate cert;
      cert.tau = c.at("tau").get<double>();
      cert.signal_bound = c.at("B").get<double>();
      cert.epsilon = c.at("epsilon").get<double>();
      cert.bound = c.at("bound").get<double>();
      cert.assumptions_ok = true;
      rep.certificate = cert;
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed repurpose.json: " + std::string(e.what()));
  } catch (const DimensionError& e) {
    throw FormatError("malformed repurpose.json: " + std::string(e.what()));
  }
  if (rep.permutations.size() != rep.model.depth() + 1) {
    throw FormatError("repurpose.json: permutation count does not match model depth");
  }
  return rep;
}

}  // namespace repurpose
