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

#include "repurpose/model.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

#include "repurpose/error.hpp"

namespace repurpose {

double Activation::apply(double v) const {
  switch (kind) {
    case ActivationKind::kIdentity:
      return v;
    case ActivationKind::kRelu:
      return v > 0.0 ? v : 0.0;
    case ActivationKind::kTanh:
      return std::tanh(v);
    case ActivationKind::kSigmoid:
      return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kIdentity:
      return "identity";
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "identity") return ActivationKind::kIdentity;
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  throw FormatError("unknown activation kind '" + std::string(name) + "'");
}

std::size_t ConvLayer::spatial_size() const {
  std::size_t s = 1;
  for (std::size_t d = 0; d + 2 < kernel.rank(); ++d) s *= kernel.shape()[d];
  return s;
}

namespace {

std::string layer_tag(std::size_t index) { return "layer " + std::to_string(index); }

}  // namespace

void validate(const DenseLayer& layer, std::size_t index) {
  if (layer.weight.rank() != 2) {
    throw DimensionError(layer_tag(index) + ": dense weight must be rank 2");
  }
  if (layer.bias.rank() != 1 || layer.bias.size() != layer.out()) {
    std::ostringstream msg;
    msg << layer_tag(index) << ": bias length " << layer.bias.size() << " != output width "
        << layer.out();
    throw DimensionError(msg.str());
  }
  if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
    throw DimensionError(layer_tag(index) + ": non-finite parameter");
  }
}

void validate(const ConvLayer& layer, std::size_t index) {
  const auto& shape = layer.kernel.shape();
  if (shape.size() < 3) {
    throw DimensionError(layer_tag(index) + ": conv kernel needs spatial, c_in and c_out axes");
  }
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError(layer_tag(index) + ": conv kernel has a zero dimension");
  }
  if (layer.bias.size() != layer.out_channels()) {
    throw DimensionError(layer_tag(index) + ": bias length != c_out");
  }
  if (!layer.kernel.all_finite() || !layer.bias.all_finite()) {
    throw DimensionError(layer_tag(index) + ": non-finite parameter");
  }
}

namespace {

std::size_t layer_in(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, DenseLayer>) {
          return l.in();
        } else {
          return l.in_channels();
        }
      },
      layer);
}

std::size_t layer_out(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, DenseLayer>) {
          return l.out();
        } else {
          return l.out_channels();
        }
      },
      layer);
}

}  // namespace

void validate(const SequentialModel& model) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    std::visit([l](const auto& layer) { validate(layer, l); }, model.layers[l]);
    if (l > 0 && layer_in(model.layers[l]) != layer_out(model.layers[l - 1])) {
      std::ostringstream msg;
      msg << layer_tag(l) << ": input width " << layer_in(model.layers[l])
          << " does not chain from previous output width " << layer_out(model.layers[l - 1]);
      throw DimensionError(msg.str());
    }
  }
}

std::vector<std::size_t> SequentialModel::boundary_widths() const {
  std::vector<std::size_t> widths;
  if (layers.empty()) return widths;
  widths.push_back(layer_in(layers.front()));
  for (const auto& layer : layers) widths.push_back(layer_out(layer));
  return widths;
}

const DenseLayer& SequentialModel::dense(std::size_t l) const {
  const auto* layer = std::get_if<DenseLayer>(&layers.at(l));
  if (layer == nullptr) throw UnsupportedError(layer_tag(l) + " is not a dense layer");
  return *layer;
}

DenseLayer& SequentialModel::dense(std::size_t l) {
  auto* layer = std::get_if<DenseLayer>(&layers.at(l));
  if (layer == nullptr) throw UnsupportedError(layer_tag(l) + " is not a dense layer");
  return *layer;
}

bool SequentialModel::all_dense() const {
  for (const auto& layer : layers) {
    if (!std::holds_alternative<DenseLayer>(layer)) return false;
  }
  return true;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& inputs, Tensor* pre_activation) {
  const std::size_t in = layer.in();
  const std::size_t out = layer.out();
  const std::size_t batch = inputs.cols();
  Tensor y = Tensor::matrix(out, batch);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t k = 0; k < batch; ++k) y.at(o, k) = layer.bias[o];
  }
  // y[o][k] += W[r][o] * x[r][k]
  for (std::size_t r = 0; r < in; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      const double w = layer.weight.at(r, o);
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < batch; ++k) y.at(o, k) += w * inputs.at(r, k);
    }
  }
  Tensor x = y;
  for (auto& v : x.data()) v = layer.activation.apply(v);
  if (pre_activation != nullptr) *pre_activation = std::move(y);
  return x;
}

ForwardTrace forward(const SequentialModel& model, const Tensor& inputs) {
  if (inputs.rank() != 2) throw DimensionError("forward: input batch must be (in, K)");
  if (!inputs.all_finite()) throw DimensionError("forward: non-finite input");
  ForwardTrace trace;
  trace.activations.push_back(inputs);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto* layer = std::get_if<DenseLayer>(&model.layers[l]);
    if (layer == nullptr) throw UnsupportedError(layer_tag(l) + ": conv forward is not supported");
    validate(*layer, l);
    if (trace.activations.back().rows() != layer->in()) {
      std::ostringstream msg;
      msg << layer_tag(l) << ": expects " << layer->in() << " inputs, got "
          << trace.activations.back().rows();
      throw DimensionError(msg.str());
    }
    Tensor pre;
    Tensor next = dense_forward(*layer, trace.activations.back(), &pre);
    trace.pre_activations.push_back(std::move(pre));
    trace.activations.push_back(std::move(next));
  }
  return trace;
}

Tensor forward_output(const SequentialModel& model, const Tensor& inputs) {
  return forward(model, inputs).output();
}

}  // namespace repurpose
