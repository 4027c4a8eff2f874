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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "repurpose/tensor.hpp"

namespace repurpose {

enum class ActivationKind { kIdentity, kRelu, kTanh, kSigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::kIdentity;
  // All built-in kinds are 1-Lipschitz. The flag is carried separately so a
  // caller can mark a layer as not satisfying the certificate's assumption.
  bool lipschitz_one = true;

  double apply(double v) const;
  bool operator==(const Activation&) const = default;
};

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

// Weight is (in, out); column i holds the fan-in of output neuron i.
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  Activation activation;

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
  bool operator==(const DenseLayer&) const = default;
};

// Kernel is (z_0, ..., z_{d-1}, c_in, c_out). Only used for channel
// restructuring; there is no conv forward pass.
struct ConvLayer {
  Tensor kernel;
  Tensor bias;
  Activation activation;

  std::size_t in_channels() const { return kernel.shape()[kernel.rank() - 2]; }
  std::size_t out_channels() const { return kernel.shape()[kernel.rank() - 1]; }
  std::size_t spatial_size() const;
  bool operator==(const ConvLayer&) const = default;
};

using Layer = std::variant<DenseLayer, ConvLayer>;

struct SequentialModel {
  std::vector<Layer> layers;

  std::size_t depth() const { return layers.size(); }
  // Widths at each layer boundary: input width, then each layer's output width.
  std::vector<std::size_t> boundary_widths() const;
  const DenseLayer& dense(std::size_t l) const;
  DenseLayer& dense(std::size_t l);
  bool all_dense() const;
  bool operator==(const SequentialModel&) const = default;
};

// Throws DimensionError naming the offending layer.
void validate(const DenseLayer& layer, std::size_t index);
void validate(const ConvLayer& layer, std::size_t index);
void validate(const SequentialModel& model);

struct ForwardTrace {
  // pre_activations[l] = W^T x_l + b, activations[l] = x_l; activations[0] is
  // the input and activations.back() the network output.
  std::vector<Tensor> pre_activations;
  std::vector<Tensor> activations;

  const Tensor& output() const { return activations.back(); }
};

// X is (in, K): one sample per column.
ForwardTrace forward(const SequentialModel& model, const Tensor& inputs);
Tensor forward_output(const SequentialModel& model, const Tensor& inputs);

// Single dense layer: activation(W^T x + b), batched.
Tensor dense_forward(const DenseLayer& layer, const Tensor& inputs, Tensor* pre_activation = nullptr);

}  // namespace repurpose
