#include "deltanet/network.hpp"

#include <stdexcept>

namespace deltanet {

template <typename Scalar>
Network<Scalar>::Network(const ArchSpec& spec, std::uint64_t seed, double dropout_rate)
    : Network(build(spec), spec.input_extent, seed, dropout_rate) {}

template <typename Scalar>
Network<Scalar>::Network(std::vector<LayerSpec> layers, int input_extent, std::uint64_t seed,
                         double dropout_rate)
    : layers_(infer_shapes(std::move(layers), input_extent)),
      input_extent_(input_extent),
      seed_(seed),
      dropout_rate_(dropout_rate) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  init_params();
}

template <typename Scalar>
std::string Network<Scalar>::param_name(std::size_t layer, const char* field) {
  return "layer" + std::to_string(layer) + "." + field;
}

template <typename Scalar>
int Network<Scalar>::classnum() const {
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (it->kind == LayerKind::Dense) return it->out_channels;
  }
  return layers_.back().out_channels;
}

template <typename Scalar>
void Network<Scalar>::init_params() {
  Rng rng(Rng::derive(seed_, streams::kInit));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const Index k = l.kernel;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::PwConv:
        params_.add(param_name(i, "weight"),
                    make_tensor<Scalar>({l.out_channels, l.in_channels, k, k}, Init::HeNormal, rng));
        break;
      case LayerKind::DwConv:
        params_.add(param_name(i, "weight"),
                    make_tensor<Scalar>({l.in_channels, l.multiplier, k, k}, Init::HeNormal, rng,
                                        Fans{k * k, k * k * l.multiplier}));
        break;
      case LayerKind::Dense:
        params_.add(param_name(i, "weight"),
                    make_tensor<Scalar>({l.in_channels, l.out_channels}, Init::GlorotUniform, rng));
        params_.add(param_name(i, "bias"), Tensor<Scalar>({l.out_channels}));
        break;
      default:
        break;
    }
    if (l.is_convolution()) {
      const Index c = l.out_channels;
      params_.add(param_name(i, "gamma"), Tensor<Scalar>({c}, Scalar(1)));
      params_.add(param_name(i, "beta"), Tensor<Scalar>({c}));
      params_.add(param_name(i, "running_mean"), Tensor<Scalar>({c}), false);
      params_.add(param_name(i, "running_var"), Tensor<Scalar>({c}, Scalar(1)), false);
    }
  }
}

template <typename Scalar>
Tensor<Scalar> Network<Scalar>::forward(const Tensor<Scalar>& batch, const ForwardMode& mode,
                                        Rng& rng, ForwardCache<Scalar>* cache) {
  const Shape expected_tail{input_channels(), input_extent_, input_extent_};
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected_tail) {
    throw ShapeError("network input must be [N," + std::to_string(input_channels()) + "," +
                     std::to_string(input_extent_) + "," + std::to_string(input_extent_) +
                     "], got " + to_string(batch.shape()));
  }
  if (cache) cache->layers.assign(layers_.size(), {});

  Tensor<Scalar> x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    LayerCache<Scalar>* lc = cache ? &cache->layers[i] : nullptr;
    if (lc) lc->input = x;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::DwConv:
      case LayerKind::PwConv: {
        const auto& w = params_.at(param_name(i, "weight")).value;
        Tensor<Scalar> y = l.kind == LayerKind::Conv     ? conv2d(x, w, l.stride)
                           : l.kind == LayerKind::DwConv ? depthwise_conv2d(x, w, l.stride)
                                                         : pointwise_conv2d(x, w);
        auto bn = batchnorm(y, params_.at(param_name(i, "gamma")).value,
                            params_.at(param_name(i, "beta")).value,
                            params_.at(param_name(i, "running_mean")).value,
                            params_.at(param_name(i, "running_var")).value, mode.batchnorm);
        x = relu(bn.output);
        if (lc) {
          lc->bn = std::move(bn.cache);
          lc->pre_activation = std::move(bn.output);
        }
        break;
      }
      case LayerKind::MaxPool: {
        auto pooled = maxpool_3x3_s2(x);
        x = std::move(pooled.output);
        if (lc) lc->argmax = std::move(pooled.argmax);
        break;
      }
      case LayerKind::Fmp: {
        PoolRegions rows, cols;
        if (mode.random_fmp) {
          rows = fmp_regions(l.in_extent, l.out_extent, true, rng);
          cols = fmp_regions(l.in_extent, l.out_extent, true, rng);
        } else {
          Rng fixed(Rng::derive(seed_, streams::kEvalFmp +
                                           static_cast<std::uint64_t>(mode.fmp_pass) * 4096 + i));
          rows = fmp_regions(l.in_extent, l.out_extent, true, fixed);
          cols = fmp_regions(l.in_extent, l.out_extent, true, fixed);
        }
        auto pooled = fmp_pool(x, rows, cols);
        x = std::move(pooled.output);
        if (lc) lc->argmax = std::move(pooled.argmax);
        break;
      }
      case LayerKind::Gap:
        x = global_avg_pool(x);
        break;
      case LayerKind::Dense: {
        const Index n = x.dim(0);
        Tensor<Scalar> flat = x.reshaped({n, x.size() / n});
        auto dropped = dropout(flat, dropout_rate_, mode.dropout ? Mode::Train : Mode::Eval, rng);
        x = dense(dropped.output, params_.at(param_name(i, "weight")).value,
                  params_.at(param_name(i, "bias")).value);
        if (lc) {
          lc->dropout_mask = std::move(dropped.mask);
          lc->dense_input = std::move(dropped.output);
        }
        break;
      }
      case LayerKind::Softmax:
        break;
    }
  }
  if (x.rank() != 2) x = x.reshaped({x.dim(0), x.size() / x.dim(0)});
  return x;
}

template <typename Scalar>
void Network<Scalar>::backward(const ForwardCache<Scalar>& cache,
                               const Tensor<Scalar>& grad_logits) {
  if (cache.layers.size() != layers_.size()) {
    throw std::logic_error("backward called without a matching forward cache");
  }
  Tensor<Scalar> grad = grad_logits;
  for (std::size_t r = layers_.size(); r-- > 0;) {
    const LayerSpec& l = layers_[r];
    const LayerCache<Scalar>& lc = cache.layers[r];
    if (lc.input.empty()) throw std::logic_error("forward cache is missing layer " + std::to_string(r));
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::DwConv:
      case LayerKind::PwConv: {
        Tensor<Scalar> g = relu_backward(lc.pre_activation, grad.reshaped(lc.pre_activation.shape()));
        auto& gamma = params_.at(param_name(r, "gamma"));
        auto bn = batchnorm_backward(lc.bn, gamma.value, g);
        gamma.grad = std::move(bn.gamma);
        params_.at(param_name(r, "beta")).grad = std::move(bn.beta);
        auto& w = params_.at(param_name(r, "weight"));
        ConvGrads<Scalar> cg = l.kind == LayerKind::Conv
                                   ? conv2d_backward(lc.input, w.value, l.stride, bn.input)
                               : l.kind == LayerKind::DwConv
                                   ? depthwise_conv2d_backward(lc.input, w.value, l.stride, bn.input)
                                   : pointwise_conv2d_backward(lc.input, w.value, bn.input);
        w.grad = std::move(cg.weights);
        grad = std::move(cg.input);
        break;
      }
      case LayerKind::MaxPool:
      case LayerKind::Fmp:
        grad = pool_backward(lc.input.shape(), lc.argmax,
                             grad.reshaped({lc.input.dim(0), lc.input.dim(1), l.out_extent, l.out_extent}));
        break;
      case LayerKind::Gap:
        grad = global_avg_pool_backward(lc.input.shape(), grad);
        break;
      case LayerKind::Dense: {
        auto& w = params_.at(param_name(r, "weight"));
        auto dg = dense_backward(lc.dense_input, w.value, grad);
        w.grad = std::move(dg.weights);
        params_.at(param_name(r, "bias")).grad = std::move(dg.bias);
        grad = dropout_backward(lc.dropout_mask, dg.input).reshaped(lc.input.shape());
        break;
      }
      case LayerKind::Softmax:
        break;
    }
  }
}

template <typename Scalar>
void Network<Scalar>::load_params(const ParamStore<Scalar>& source) {
  if (source.size() != params_.size()) {
    throw std::invalid_argument("checkpoint does not match the network architecture: " +
                                std::to_string(source.size()) + " entries, network has " +
                                std::to_string(params_.size()));
  }
  auto it = source.begin();
  for (auto& e : params_) {
    const auto& s = *it++;
    if (s.name != e.name || s.value.shape() != e.value.shape() || s.trainable != e.trainable) {
      throw std::invalid_argument("checkpoint does not match the network architecture at " +
                                  e.name + " " + to_string(e.value.shape()) + " (checkpoint has " +
                                  s.name + " " + to_string(s.value.shape()) + ")");
    }
  }
  it = source.begin();
  for (auto& e : params_) e.value = (it++)->value;
}

template class Network<float>;
template class Network<double>;

}  // namespace deltanet
