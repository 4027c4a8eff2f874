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

#include "repurpose/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "repurpose/dist_exec.hpp"
#include "repurpose/random_models.hpp"
#include "repurpose/repurpose.hpp"

namespace repurpose::verify {

namespace {

constexpr double kEtaGrid[] = {0.0, 0.01, 0.1, 1.0};

std::string describe(std::span<const double> v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

std::string describe_counts(const WorkerCounts& c) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << ')';
  return os.str();
}

// Random split of n into p nonnegative parts.
WorkerCounts random_counts(std::size_t n, std::size_t p, Rng& rng) {
  WorkerCounts counts(p, 0);
  std::uniform_int_distribution<std::size_t> pick(0, p - 1);
  for (std::size_t i = 0; i < n; ++i) ++counts[pick(rng)];
  return counts;
}

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

double brute_force_column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                               std::size_t worker, const RepurposeConfig& cfg) {
  const std::size_t n = column.size();
  std::vector<std::size_t> owner;
  for (std::size_t k = 0; k < in_counts.size(); ++k) owner.insert(owner.end(), in_counts[k], k);
  double best = std::numeric_limits<double>::infinity();
  // Each bit of `support` keeps one entry; a kept entry is optimally left unchanged.
  for (std::size_t support = 0; support < (std::size_t{1} << n); ++support) {
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (support & (std::size_t{1} << i)) {
        value += cfg.eta1 + (owner[i] != worker ? cfg.eta2 : 0.0);
      } else {
        value += column[i] * column[i];
      }
    }
    best = std::min(best, value);
  }
  return best;
}

ColumnCost faulty_column_cost(std::span<const double> column, const WorkerCounts& in_counts,
                              std::size_t worker, const RepurposeConfig& cfg) {
  std::vector<std::size_t> owner;
  for (std::size_t k = 0; k < in_counts.size(); ++k) owner.insert(owner.end(), in_counts[k], k);
  ColumnCost result{std::vector<double>(column.begin(), column.end()), 0.0};
  for (std::size_t n = 0; n < column.size(); ++n) {
    const double eta = cfg.eta1 + (owner[n] != worker ? cfg.eta2 : 0.0);
    const double w = column[n];
    if (w * w >= eta) {  // inverted on purpose
      result.pruned[n] = 0.0;
      result.cost += w * w;
    } else {
      result.cost += eta;
    }
  }
  return result;
}

Outcome thresholding(std::size_t trials, std::uint64_t seed, const ColumnCostFn& impl) {
  Rng rng(seed);
  Outcome out;
  std::normal_distribution<double> value(0.0, 0.6);
  for (std::size_t t = 0; t < trials && out.ok; ++t) {
    ++out.trials;
    const std::size_t length = uniform(rng, 1, 6);
    const std::size_t workers = uniform(rng, 1, 3);
    const WorkerCounts in_counts = random_counts(length, workers, rng);
    const std::size_t worker = uniform(rng, 0, workers - 1);
    std::vector<double> column(length);
    for (auto& v : column) v = value(rng);
    for (double eta1 : kEtaGrid) {
      for (double eta2 : kEtaGrid) {
        const RepurposeConfig cfg{eta1, eta2};
        const ColumnCost got = impl(column, in_counts, worker, cfg);
        const double want = brute_force_column_cost(column, in_counts, worker, cfg);
        const double achieved = column_objective(column, got.pruned, in_counts, worker, cfg);
        ++out.checks;
        if (std::abs(got.cost - want) > 1e-12 || std::abs(achieved - want) > 1e-12) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "trial " << t << ": column " << describe(column) << " in_counts "
              << describe_counts(in_counts) << " worker " << worker << " eta=(" << eta1 << ", "
              << eta2 << "): cost " << got.cost << ", w-hat achieves " << achieved
              << ", brute force " << want;
          out.ok = false;
          out.failure = msg.str();
          break;
        }
      }
      if (!out.ok) break;
    }
  }
  return out;
}

Outcome assignment(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Outcome out;
  std::uniform_int_distribution<int> eta_pick(0, 3);
  std::bernoulli_distribution zero(0.15);
  for (std::size_t t = 0; t < trials && out.ok; ++t) {
    ++out.trials;
    const std::size_t workers = uniform(rng, 1, 3);
    const std::size_t n = uniform(rng, std::max<std::size_t>(2, workers), 8);
    const std::size_t in = uniform(rng, workers, 6);
    const WorkerCounts in_counts = balanced_counts(in, workers);
    const WorkerCounts out_counts = balanced_counts(n, workers);
    Tensor w = random_tensor({in, n}, rng, 0.5);
    for (auto& v : w.data()) v = zero(rng) ? 0.0 : v;
    const RepurposeConfig cfg{kEtaGrid[eta_pick(rng)], kEtaGrid[eta_pick(rng)]};

    const AssignmentResult fast = assign_neurons(w, in_counts, out_counts, cfg);
    const AssignmentResult slow = brute_force_assign(w, in_counts, out_counts, cfg);
    const double achieved = layer_objective(w, in_counts, out_counts, fast.permutation, cfg);
    ++out.checks;
    if (std::abs(fast.total_cost - slow.total_cost) > 1e-9 || std::abs(achieved - fast.total_cost) > 1e-9) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "trial " << t << ": N=" << n << " P=" << workers << " eta=(" << cfg.eta1 << ", "
          << cfg.eta2 << ") W=" << describe(w.data()) << ": munkres " << fast.total_cost
          << " (permutation achieves " << achieved << "), brute force " << slow.total_cost;
      out.ok = false;
      out.failure = msg.str();
    }
  }
  return out;
}

Outcome bound(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Outcome out;
  constexpr ActivationKind kKinds[] = {ActivationKind::kRelu, ActivationKind::kTanh,
                                       ActivationKind::kSigmoid, ActivationKind::kIdentity};
  for (std::size_t t = 0; t < trials && out.ok; ++t) {
    ++out.trials;
    const std::size_t workers = uniform(rng, 2, 3);
    std::vector<std::size_t> widths(5);
    for (auto& w : widths) w = uniform(rng, workers, 10);
    const ActivationKind hidden = kKinds[uniform(rng, 0, 3)];
    const SequentialModel model = random_dense_model(widths, rng, hidden);
    const PartitionSpec spec = balanced_partition(widths, workers);
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < model.depth(); ++l) {
      smallest = std::min(smallest, model.dense(l).weight.frobenius_norm_squared());
    }
    const double epsilon = std::uniform_real_distribution<double>(0.01, 0.3)(rng) * smallest;
    const RepurposeConfig cfg = calibrate_eta2(model, spec, 0.0, epsilon);
    const RepurposedModel rep = repurpose_model(model, spec, cfg);
    const Tensor probe = random_tensor({widths[0], 16}, rng, 1.0);
    const ErrorCertificate cert = error_certificate(model, rep, probe);
    ++out.checks;
    if (!cert.holds || !cert.recursion_holds) {
      std::ostringstream msg;
      msg << "trial " << t << ": bound " << cert.bound << " tau " << cert.tau << " eps "
          << cert.epsilon << " B " << cert.signal_bound << " max measured "
          << *std::max_element(cert.measured.begin(), cert.measured.end())
          << (cert.recursion_holds ? "" : " (recursion violated)");
      out.ok = false;
      out.failure = msg.str();
    }
  }
  return out;
}

Outcome exec(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Outcome out;
  for (std::size_t t = 0; t < trials && out.ok; ++t) {
    ++out.trials;
    const std::size_t workers = uniform(rng, 1, 4);
    std::vector<std::size_t> widths(uniform(rng, 2, 4));
    for (auto& w : widths) w = uniform(rng, workers, 24);
    const SequentialModel model = random_dense_model(widths, rng);
    PartitionSpec spec{workers, {}};
    for (auto w : widths) spec.counts.push_back(random_counts(w, workers, rng));
    const double eta2 = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
    const RepurposedModel rep = repurpose_model(model, spec, RepurposeConfig{0.0, eta2});
    const ShardedModel sharded = shard_model(rep, spec);
    const Tensor inputs = random_tensor({widths[0], 5}, rng, 1.0);
    const Tensor want = forward_output(rep.model, inputs);

    std::string problem;
    for (std::size_t l = 0; l < rep.model.depth() && problem.empty(); ++l) {
      if (!(sharded.layers[l].reassemble() == rep.model.dense(l).weight)) {
        problem = "reassembly differs at layer " + std::to_string(l);
      }
    }
    for (ExecMode mode : {ExecMode::kSequential, ExecMode::kThreaded}) {
      const DistributedResult got = distributed_forward(sharded, inputs, mode);
      const double err = max_relative_error(got.concatenated(), want);
      if (problem.empty() && err > 1e-9) problem = "relative error " + std::to_string(err);
      if (problem.empty() && got.multiply_count != naive_multiply_count(sharded)) {
        problem = "multiply count disagrees with per-edge count";
      }
      for (std::size_t l = 0; l < sharded.layers.size() && problem.empty(); ++l) {
        std::size_t omega = 0;
        for (const auto& w : sharded.layers[l].workers) {
          for (const auto& b : w.incoming) omega += b.rows.size();
        }
        if (omega != got.comm.values_at_layer(l)) problem = "comm volume != sum |Omega|";
      }
    }
    ++out.checks;
    if (!problem.empty()) {
      out.ok = false;
      out.failure = "trial " + std::to_string(t) + ": P=" + std::to_string(workers) + " eta2=" +
                    std::to_string(eta2) + ": " + problem;
    }
  }
  return out;
}

}  // namespace repurpose::verify
