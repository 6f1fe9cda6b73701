// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Reference training kernels. Every kernel is templated on the element type;
// float is the engine precision and double backs the test oracles.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "edgetrain/model.hpp"
#include "edgetrain/tensor.hpp"

namespace edgetrain {

template <typename T>
TensorT<T> conv_fp(const TensorT<T>& a, const TensorT<T>& w, const LayerSpec& layer);

// Loss with respect to the layer input: the kernel-flipped correlation of the
// stride-dilated loss padded by K-1-pad.
template <typename T>
TensorT<T> conv_bp(const TensorT<T>& l_next, const TensorT<T>& w, const LayerSpec& layer);

// Weight gradient accumulated over the whole batch.
template <typename T>
TensorT<T> conv_wu(const TensorT<T>& a, const TensorT<T>& l_next, const LayerSpec& layer);

template <typename T>
TensorT<T> sgd_apply(const TensorT<T>& w, const TensorT<T>& dw, T lr);

template <typename T>
TensorT<T> relu_fp(const TensorT<T>& a);
template <typename T>
TensorT<T> relu_bp(const TensorT<T>& l_next, const TensorT<T>& a);

// Position of the window maximum, row-major within the K x K window.
struct PoolIndex {
  Dims4 dims;
  std::int64_t window = 0;
  std::vector<std::uint8_t> codes;

  friend bool operator==(const PoolIndex&, const PoolIndex&) = default;
};

template <typename T>
struct PoolResult {
  TensorT<T> out;
  std::optional<PoolIndex> index;
};

template <typename T>
PoolResult<T> pool_fp(const TensorT<T>& a, const LayerSpec& layer);
template <typename T>
TensorT<T> pool_bp(const TensorT<T>& l_next, const std::optional<PoolIndex>& index,
                   const LayerSpec& layer);

inline constexpr double kBnEpsilon = 1e-5;

template <typename T>
struct BnStateT {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> lambda;
  std::vector<T> ex;
  std::vector<T> ex2;
  std::vector<T> var;
  std::vector<T> dgamma;
  std::vector<T> dbeta;
  TensorT<T> a_hat;
  T epsilon = static_cast<T>(kBnEpsilon);
  // Set by bn_fp and consumed by bn_bp.
  bool fresh = false;

  static BnStateT init(std::int64_t channels);
};

using BnState = BnStateT<float>;

template <typename T>
TensorT<T> bn_fp(const TensorT<T>& a, BnStateT<T>& st);
// Updates gamma and beta by -lr times their gradients after computing the
// input loss with the pre-update gamma.
template <typename T>
TensorT<T> bn_bp(const TensorT<T>& l_next, BnStateT<T>& st, T lr);

template <typename T>
struct XentResult {
  double loss = 0.0;
  TensorT<T> grad;
};

template <typename T>
XentResult<T> softmax_xent(const TensorT<T>& logits, const std::vector<std::int32_t>& labels);

struct LayerParams {
  Tensor weights;
  std::optional<BnState> bn;

  friend bool operator==(const LayerParams& a, const LayerParams& b) {
    return a.weights == b.weights && a.bn.has_value() == b.bn.has_value() &&
           (!a.bn || (a.bn->gamma == b.bn->gamma && a.bn->beta == b.bn->beta));
  }
};

struct Params {
  std::vector<LayerParams> layers;

  friend bool operator==(const Params&, const Params&) = default;
};

// Uniform(-s, s) weights with s = sqrt(1 / (N K^2)); gamma = 1, beta = 0.
Params init_params(const ShapedNetwork& net, std::uint64_t seed);

struct Batch {
  Tensor images;
  std::vector<std::int32_t> labels;
};

struct ForwardPass {
  std::vector<Tensor> activations;  // input of each layer plus the final output
  std::vector<std::optional<PoolIndex>> pool_index;
  double loss = 0.0;
  Tensor loss_grad;
};

ForwardPass forward(const ShapedNetwork& net, Params& params, const Batch& batch);

struct TrainStep {
  double loss = 0.0;
  Params params;
};

TrainStep train_minibatch(const ShapedNetwork& net, Params params, const Batch& batch);

}  // namespace edgetrain
