// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/reftrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace edgetrain {

namespace {

void require_shaped(const LayerSpec& l, const char* what) {
  require(l.R_in > 0 && l.C_in > 0, ErrorCode::ShapeMismatch,
          std::string(what) + ": layer input dims are unresolved");
}

template <typename T>
Dims4 input_dims_of(const TensorT<T>& t, const LayerSpec& l) {
  return {t.dims().d0, l.N, l.R_in, l.C_in};
}

template <typename T>
Dims4 output_dims_of(const TensorT<T>& t, const LayerSpec& l) {
  return {t.dims().d0, l.M, l.R, l.C};
}

}  // namespace

template <typename T>
TensorT<T> conv_fp(const TensorT<T>& a, const TensorT<T>& w, const LayerSpec& l) {
  require_shaped(l, "conv_fp");
  require_dims(a.dims(), input_dims_of(a, l), "conv_fp input");
  require_dims(w.dims(), weight_dims(l), "conv_fp weights");
  const std::int64_t B = a.dims().d0;
  TensorT<T> out(output_dims_of(a, l));
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t m = 0; m < l.M; ++m) {
      for (std::int64_t r = 0; r < l.R; ++r) {
        for (std::int64_t c = 0; c < l.C; ++c) {
          T acc{};
          for (std::int64_t n = 0; n < l.N; ++n) {
            for (std::int64_t kr = 0; kr < l.K; ++kr) {
              const std::int64_t y = r * l.S + kr - l.pad;
              if (y < 0 || y >= l.R_in) continue;
              for (std::int64_t kc = 0; kc < l.K; ++kc) {
                const std::int64_t x = c * l.S + kc - l.pad;
                if (x < 0 || x >= l.C_in) continue;
                acc += a(b, n, y, x) * w(m, n, kr, kc);
              }
            }
          }
          out(b, m, r, c) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> conv_bp(const TensorT<T>& l_next, const TensorT<T>& w, const LayerSpec& l) {
  require_shaped(l, "conv_bp");
  require_dims(l_next.dims(), output_dims_of(l_next, l), "conv_bp loss");
  require_dims(w.dims(), weight_dims(l), "conv_bp weights");
  const std::int64_t B = l_next.dims().d0;
  TensorT<T> out(input_dims_of(l_next, l));
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t n = 0; n < l.N; ++n) {
      for (std::int64_t y = 0; y < l.R_in; ++y) {
        for (std::int64_t x = 0; x < l.C_in; ++x) {
          T acc{};
          for (std::int64_t m = 0; m < l.M; ++m) {
            for (std::int64_t kr = 0; kr < l.K; ++kr) {
              const std::int64_t ty = y + l.pad - kr;
              if (ty < 0 || ty % l.S != 0 || ty / l.S >= l.R) continue;
              const std::int64_t r = ty / l.S;
              for (std::int64_t kc = 0; kc < l.K; ++kc) {
                const std::int64_t tx = x + l.pad - kc;
                if (tx < 0 || tx % l.S != 0 || tx / l.S >= l.C) continue;
                acc += l_next(b, m, r, tx / l.S) * w(m, n, kr, kc);
              }
            }
          }
          out(b, n, y, x) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> conv_wu(const TensorT<T>& a, const TensorT<T>& l_next, const LayerSpec& l) {
  require_shaped(l, "conv_wu");
  require_dims(a.dims(), input_dims_of(a, l), "conv_wu input");
  require_dims(l_next.dims(), output_dims_of(a, l), "conv_wu loss");
  const std::int64_t B = a.dims().d0;
  TensorT<T> dw(weight_dims(l));
  for (std::int64_t m = 0; m < l.M; ++m) {
    for (std::int64_t n = 0; n < l.N; ++n) {
      for (std::int64_t kr = 0; kr < l.K; ++kr) {
        for (std::int64_t kc = 0; kc < l.K; ++kc) {
          T acc{};
          for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t r = 0; r < l.R; ++r) {
              const std::int64_t y = r * l.S + kr - l.pad;
              if (y < 0 || y >= l.R_in) continue;
              for (std::int64_t c = 0; c < l.C; ++c) {
                const std::int64_t x = c * l.S + kc - l.pad;
                if (x < 0 || x >= l.C_in) continue;
                acc += l_next(b, m, r, c) * a(b, n, y, x);
              }
            }
          }
          dw(m, n, kr, kc) = acc;
        }
      }
    }
  }
  return dw;
}

template <typename T>
TensorT<T> sgd_apply(const TensorT<T>& w, const TensorT<T>& dw, T lr) {
  require_dims(dw.dims(), w.dims(), "sgd_apply gradient");
  TensorT<T> out(w.dims());
  for (std::int64_t i = 0; i < w.size(); ++i) out[i] = w[i] - lr * dw[i];
  return out;
}

template <typename T>
TensorT<T> relu_fp(const TensorT<T>& a) {
  TensorT<T> out(a.dims());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] > T{} ? a[i] : T{};
  return out;
}

template <typename T>
TensorT<T> relu_bp(const TensorT<T>& l_next, const TensorT<T>& a) {
  require_dims(l_next.dims(), a.dims(), "relu_bp loss");
  TensorT<T> out(a.dims());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] > T{} ? l_next[i] : T{};
  return out;
}

template <typename T>
PoolResult<T> pool_fp(const TensorT<T>& a, const LayerSpec& l) {
  require(l.pooling(), ErrorCode::InvalidLayer, "pool_fp on a non-pooling layer");
  require_shaped(l, "pool_fp");
  require_dims(a.dims(), input_dims_of(a, l), "pool_fp input");
  require(l.K * l.K <= 256, ErrorCode::InvalidLayer, "pooling window too large for index codes");
  const bool is_max = l.kind == LayerKind::MaxPool;
  const std::int64_t B = a.dims().d0;
  PoolResult<T> res{TensorT<T>(output_dims_of(a, l)), std::nullopt};
  PoolIndex index{res.out.dims(), l.K * l.K, {}};
  if (is_max) index.codes.resize(static_cast<std::size_t>(res.out.size()));
  const T inv_area = T{1} / static_cast<T>(l.K * l.K);
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t m = 0; m < l.M; ++m) {
      for (std::int64_t r = 0; r < l.R; ++r) {
        for (std::int64_t c = 0; c < l.C; ++c) {
          T best = -std::numeric_limits<T>::infinity();
          T sum{};
          std::int64_t code = 0;
          for (std::int64_t kr = 0; kr < l.K; ++kr) {
            const std::int64_t y = r * l.S + kr - l.pad;
            if (y < 0 || y >= l.R_in) continue;
            for (std::int64_t kc = 0; kc < l.K; ++kc) {
              const std::int64_t x = c * l.S + kc - l.pad;
              if (x < 0 || x >= l.C_in) continue;
              const T v = a(b, m, y, x);
              sum += v;
              if (v > best) {
                best = v;
                code = kr * l.K + kc;
              }
            }
          }
          if (is_max) {
            res.out(b, m, r, c) = best;
            index.codes[static_cast<std::size_t>(res.out.offset(b, m, r, c))] =
                static_cast<std::uint8_t>(code);
          } else {
            res.out(b, m, r, c) = sum * inv_area;
          }
        }
      }
    }
  }
  if (is_max) res.index = std::move(index);
  return res;
}

template <typename T>
TensorT<T> pool_bp(const TensorT<T>& l_next, const std::optional<PoolIndex>& index,
                   const LayerSpec& l) {
  require(l.pooling(), ErrorCode::InvalidLayer, "pool_bp on a non-pooling layer");
  require_shaped(l, "pool_bp");
  require_dims(l_next.dims(), output_dims_of(l_next, l), "pool_bp loss");
  const bool is_max = l.kind == LayerKind::MaxPool;
  if (is_max) {
    require(index.has_value(), ErrorCode::MissingIndices, "max-pool backward needs indices");
    require_dims(index->dims, l_next.dims(), "pool_bp indices");
  }
  const std::int64_t B = l_next.dims().d0;
  TensorT<T> out(input_dims_of(l_next, l));
  const T inv_area = T{1} / static_cast<T>(l.K * l.K);
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t m = 0; m < l.M; ++m) {
      for (std::int64_t r = 0; r < l.R; ++r) {
        for (std::int64_t c = 0; c < l.C; ++c) {
          const T g = l_next(b, m, r, c);
          if (is_max) {
            const std::int64_t code =
                index->codes[static_cast<std::size_t>(l_next.offset(b, m, r, c))];
            const std::int64_t y = r * l.S + code / l.K - l.pad;
            const std::int64_t x = c * l.S + code % l.K - l.pad;
            out(b, m, y, x) += g;
            continue;
          }
          for (std::int64_t kr = 0; kr < l.K; ++kr) {
            const std::int64_t y = r * l.S + kr - l.pad;
            if (y < 0 || y >= l.R_in) continue;
            for (std::int64_t kc = 0; kc < l.K; ++kc) {
              const std::int64_t x = c * l.S + kc - l.pad;
              if (x < 0 || x >= l.C_in) continue;
              out(b, m, y, x) += g * inv_area;
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BnStateT<T> BnStateT<T>::init(std::int64_t channels) {
  const auto n = static_cast<std::size_t>(channels);
  BnStateT st;
  st.gamma.assign(n, T{1});
  st.beta.assign(n, T{});
  st.lambda.assign(n, T{});
  st.ex.assign(n, T{});
  st.ex2.assign(n, T{});
  st.var.assign(n, T{});
  st.dgamma.assign(n, T{});
  st.dbeta.assign(n, T{});
  return st;
}

template <typename T>
TensorT<T> bn_fp(const TensorT<T>& a, BnStateT<T>& st) {
  const Dims4 d = a.dims();
  require(static_cast<std::int64_t>(st.gamma.size()) == d.d1, ErrorCode::ShapeMismatch,
          "bn_fp: state has " + std::to_string(st.gamma.size()) + " channels, input " + d.str());
  const std::int64_t count = d.d0 * d.d2 * d.d3;
  const T inv_count = T{1} / static_cast<T>(count);
  st.a_hat = TensorT<T>(d);
  TensorT<T> out(d);
  for (std::int64_t m = 0; m < d.d1; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    T sum{};
    T sum_sq{};
    for (std::int64_t b = 0; b < d.d0; ++b) {
      for (std::int64_t r = 0; r < d.d2; ++r) {
        for (std::int64_t c = 0; c < d.d3; ++c) {
          const T v = a(b, m, r, c);
          sum += v;
          sum_sq += v * v;
        }
      }
    }
    st.ex[mi] = sum * inv_count;
    st.ex2[mi] = sum_sq * inv_count;
    st.var[mi] = std::max(T{}, st.ex2[mi] - st.ex[mi] * st.ex[mi]);
    st.lambda[mi] = T{1} / std::sqrt(st.var[mi] + st.epsilon);
    for (std::int64_t b = 0; b < d.d0; ++b) {
      for (std::int64_t r = 0; r < d.d2; ++r) {
        for (std::int64_t c = 0; c < d.d3; ++c) {
          const T h = (a(b, m, r, c) - st.ex[mi]) * st.lambda[mi];
          st.a_hat(b, m, r, c) = h;
          out(b, m, r, c) = h * st.gamma[mi] + st.beta[mi];
        }
      }
    }
  }
  st.fresh = true;
  return out;
}

template <typename T>
TensorT<T> bn_bp(const TensorT<T>& l_next, BnStateT<T>& st, T lr) {
  require(st.fresh, ErrorCode::StaleState, "bn_bp without a preceding bn_fp");
  const Dims4 d = l_next.dims();
  require_dims(d, st.a_hat.dims(), "bn_bp loss");
  const std::int64_t count = d.d0 * d.d2 * d.d3;
  const T inv_count = T{1} / static_cast<T>(count);
  TensorT<T> out(d);
  for (std::int64_t m = 0; m < d.d1; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    T dg{};
    T db{};
    for (std::int64_t b = 0; b < d.d0; ++b) {
      for (std::int64_t r = 0; r < d.d2; ++r) {
        for (std::int64_t c = 0; c < d.d3; ++c) {
          dg += l_next(b, m, r, c) * st.a_hat(b, m, r, c);
          db += l_next(b, m, r, c);
        }
      }
    }
    st.dgamma[mi] = dg;
    st.dbeta[mi] = db;
    const T scale = st.gamma[mi] * st.lambda[mi];
    for (std::int64_t b = 0; b < d.d0; ++b) {
      for (std::int64_t r = 0; r < d.d2; ++r) {
        for (std::int64_t c = 0; c < d.d3; ++c) {
          out(b, m, r, c) = scale * (l_next(b, m, r, c) - db * inv_count -
                                     st.a_hat(b, m, r, c) * dg * inv_count);
        }
      }
    }
    st.gamma[mi] -= lr * dg;
    st.beta[mi] -= lr * db;
  }
  st.fresh = false;
  return out;
}

template <typename T>
XentResult<T> softmax_xent(const TensorT<T>& logits, const std::vector<std::int32_t>& labels) {
  const Dims4 d = logits.dims();
  require(d.d2 == 1 && d.d3 == 1, ErrorCode::ShapeMismatch,
          "softmax_xent expects (B, classes, 1, 1), got " + d.str());
  require(static_cast<std::int64_t>(labels.size()) == d.d0, ErrorCode::ShapeMismatch,
          "softmax_xent: label count differs from batch");
  XentResult<T> res{0.0, TensorT<T>(d)};
  const double inv_batch = 1.0 / static_cast<double>(d.d0);
  for (std::int64_t b = 0; b < d.d0; ++b) {
    const std::int32_t label = labels[static_cast<std::size_t>(b)];
    require(label >= 0 && label < d.d1, ErrorCode::LabelOutOfRange,
            "label " + std::to_string(label) + " outside [0, " + std::to_string(d.d1) + ")");
    double top = -std::numeric_limits<double>::infinity();
    for (std::int64_t k = 0; k < d.d1; ++k) top = std::max(top, static_cast<double>(logits(b, k, 0, 0)));
    double denom = 0.0;
    for (std::int64_t k = 0; k < d.d1; ++k) denom += std::exp(static_cast<double>(logits(b, k, 0, 0)) - top);
    const double log_denom = std::log(denom);
    for (std::int64_t k = 0; k < d.d1; ++k) {
      const double logp = static_cast<double>(logits(b, k, 0, 0)) - top - log_denom;
      const double onehot = k == label ? 1.0 : 0.0;
      res.grad(b, k, 0, 0) = static_cast<T>((std::exp(logp) - onehot) * inv_batch);
      if (k == label) res.loss -= logp * inv_batch;
    }
  }
  return res;
}

Params init_params(const ShapedNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Params params;
  params.layers.resize(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    if (l.conv_like()) {
      const float s = static_cast<float>(std::sqrt(1.0 / static_cast<double>(l.N * l.K * l.K)));
      std::uniform_real_distribution<float> dist(-s, s);
      Tensor w(weight_dims(l));
      for (float& v : w.data()) v = dist(rng);
      params.layers[i].weights = std::move(w);
    } else if (l.kind == LayerKind::BatchNorm) {
      params.layers[i].bn = BnState::init(l.M);
    }
  }
  return params;
}

ForwardPass forward(const ShapedNetwork& net, Params& params, const Batch& batch) {
  require(params.layers.size() == net.size(), ErrorCode::ShapeMismatch,
          "parameter set does not match the network");
  const std::int64_t B = batch.images.dims().d0;
  require(B >= 1, ErrorCode::ShapeMismatch, "empty batch");
  require_dims(batch.images.dims(), feature_dims(B, net.input_shape()), "forward images");

  ForwardPass fp;
  fp.activations.reserve(net.size() + 1);
  fp.activations.push_back(batch.images);
  fp.pool_index.resize(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    const Tensor& x = fp.activations.back();
    Tensor y;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::FC:
        y = conv_fp(x.reshaped(feature_dims(B, l.input_shape())), params.layers[i].weights, l);
        break;
      case LayerKind::ReLU:
        y = relu_fp(x);
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool: {
        auto res = pool_fp(x, l);
        y = std::move(res.out);
        fp.pool_index[i] = std::move(res.index);
        break;
      }
      case LayerKind::BatchNorm:
        y = bn_fp(x, *params.layers[i].bn);
        break;
      case LayerKind::SoftmaxXent: {
        auto res = softmax_xent(x, batch.labels);
        fp.loss = res.loss;
        fp.loss_grad = std::move(res.grad);
        y = x;
        break;
      }
    }
    fp.activations.push_back(std::move(y));
  }
  return fp;
}

TrainStep train_minibatch(const ShapedNetwork& net, Params params, const Batch& batch) {
  require(net.has_loss(), ErrorCode::InvalidLayer, "training needs a terminal softmax loss");
  const auto lr = static_cast<float>(net.spec().learning_rate);
  ForwardPass fp = forward(net, params, batch);
  const std::int64_t B = batch.images.dims().d0;
  const std::size_t first = net.first_conv_like().value_or(net.size());

  Tensor grad = std::move(fp.loss_grad);
  // The softmax layer already produced the logit gradient.
  for (std::size_t next = net.size() - 1; next > first; --next) {
    const std::size_t i = next - 1;
    const LayerSpec& l = net.layer(i);
    const Tensor& x = fp.activations[i];
    const Dims4 out_dims = feature_dims(B, l.output_shape());
    grad = grad.reshaped(out_dims);
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::FC: {
        const Tensor x_in = x.reshaped(feature_dims(B, l.input_shape()));
        Tensor dw = conv_wu(x_in, grad, l);
        if (i != first) grad = conv_bp(grad, params.layers[i].weights, l).reshaped(x.dims());
        params.layers[i].weights = sgd_apply(params.layers[i].weights, dw, lr);
        break;
      }
      case LayerKind::ReLU:
        grad = relu_bp(grad, x);
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        grad = pool_bp(grad, fp.pool_index[i], l);
        break;
      case LayerKind::BatchNorm:
        grad = bn_bp(grad, *params.layers[i].bn, lr);
        break;
      case LayerKind::SoftmaxXent:
        break;
    }
  }
  // Leave no layer holding forward state that was never consumed.
  for (auto& lp : params.layers) {
    if (lp.bn) lp.bn->fresh = false;
  }
  return {fp.loss, std::move(params)};
}

#define EDGETRAIN_INSTANTIATE(T)                                                              \
  template TensorT<T> conv_fp(const TensorT<T>&, const TensorT<T>&, const LayerSpec&);        \
  template TensorT<T> conv_bp(const TensorT<T>&, const TensorT<T>&, const LayerSpec&);        \
  template TensorT<T> conv_wu(const TensorT<T>&, const TensorT<T>&, const LayerSpec&);        \
  template TensorT<T> sgd_apply(const TensorT<T>&, const TensorT<T>&, T);                     \
  template TensorT<T> relu_fp(const TensorT<T>&);                                             \
  template TensorT<T> relu_bp(const TensorT<T>&, const TensorT<T>&);                          \
  template PoolResult<T> pool_fp(const TensorT<T>&, const LayerSpec&);                        \
  template TensorT<T> pool_bp(const TensorT<T>&, const std::optional<PoolIndex>&,             \
                              const LayerSpec&);                                              \
  template struct BnStateT<T>;                                                                \
  template TensorT<T> bn_fp(const TensorT<T>&, BnStateT<T>&);                                 \
  template TensorT<T> bn_bp(const TensorT<T>&, BnStateT<T>&, T);                              \
  template XentResult<T> softmax_xent(const TensorT<T>&, const std::vector<std::int32_t>&);

EDGETRAIN_INSTANTIATE(float)
EDGETRAIN_INSTANTIATE(double)

#undef EDGETRAIN_INSTANTIATE

}  // namespace edgetrain
