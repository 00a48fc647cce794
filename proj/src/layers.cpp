#include "deltanet/ops.hpp"

#include <cmath>

namespace deltanet {

namespace {

template <typename Scalar>
void require_channel_vector(const Tensor<Scalar>& t, Index channels, const char* what) {
  if (t.size() != channels) {
    throw ShapeError(std::string("batchnorm: ") + what + " has " + std::to_string(t.size()) +
                     " entries, input has " + std::to_string(channels) + " channels");
  }
}

}  // namespace

template <typename Scalar>
BatchNormResult<Scalar> batchnorm(const Tensor<Scalar>& input, const Tensor<Scalar>& gamma,
                                  const Tensor<Scalar>& beta, Tensor<Scalar>& running_mean,
                                  Tensor<Scalar>& running_var, Mode mode,
                                  const BatchNormConfig& config) {
  if (input.rank() != 4) throw ShapeError("batchnorm: expected rank-4 input");
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index spatial = input.dim(2) * input.dim(3);
  require_channel_vector(gamma, channels, "gamma");
  require_channel_vector(beta, channels, "beta");
  require_channel_vector(running_mean, channels, "running_mean");
  require_channel_vector(running_var, channels, "running_var");

  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  Array mean(channels), var(channels);
  if (mode == Mode::Train) {
    const auto count = static_cast<double>(batch * spatial);
    for (Index c = 0; c < channels; ++c) {
      double sum = 0;
      for (Index n = 0; n < batch; ++n) {
        sum += input.array().segment(input.offset(n, c, 0, 0), spatial).template cast<double>().sum();
      }
      const double mu = sum / count;
      double sq = 0;
      for (Index n = 0; n < batch; ++n) {
        sq += (input.array().segment(input.offset(n, c, 0, 0), spatial).template cast<double>() - mu)
                  .square()
                  .sum();
      }
      mean[c] = static_cast<Scalar>(mu);
      var[c] = static_cast<Scalar>(sq / count);
    }
    const auto m = static_cast<Scalar>(config.momentum);
    running_mean.array() = m * running_mean.array() + (Scalar(1) - m) * mean;
    running_var.array() = m * running_var.array() + (Scalar(1) - m) * var;
  } else {
    mean = running_mean.array();
    var = running_var.array();
  }

  BatchNormResult<Scalar> result;
  result.cache.mode = mode;
  result.cache.inv_std = (var + static_cast<Scalar>(config.epsilon)).rsqrt();
  result.cache.normalized = Tensor<Scalar>(input.shape());
  result.output = Tensor<Scalar>(input.shape());
  for (Index n = 0; n < batch; ++n) {
    for (Index c = 0; c < channels; ++c) {
      const Index at = input.offset(n, c, 0, 0);
      auto x_hat = result.cache.normalized.array().segment(at, spatial);
      x_hat = (input.array().segment(at, spatial) - mean[c]) * result.cache.inv_std[c];
      result.output.array().segment(at, spatial) = gamma[c] * x_hat + beta[c];
    }
  }
  return result;
}

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const BatchNormCache<Scalar>& cache,
                                          const Tensor<Scalar>& gamma,
                                          const Tensor<Scalar>& grad_output) {
  const Tensor<Scalar>& x_hat = cache.normalized;
  require_same_shape(x_hat, grad_output, "batchnorm_backward");
  const Index batch = x_hat.dim(0), channels = x_hat.dim(1);
  const Index spatial = x_hat.dim(2) * x_hat.dim(3);
  const auto count = static_cast<Scalar>(batch * spatial);

  BatchNormGrads<Scalar> grads{Tensor<Scalar>(x_hat.shape()), Tensor<Scalar>({channels}),
                               Tensor<Scalar>({channels})};
  for (Index c = 0; c < channels; ++c) {
    Scalar sum_dy = 0, sum_dy_xhat = 0;
    for (Index n = 0; n < batch; ++n) {
      const Index at = x_hat.offset(n, c, 0, 0);
      const auto dy = grad_output.array().segment(at, spatial);
      sum_dy += dy.sum();
      sum_dy_xhat += (dy * x_hat.array().segment(at, spatial)).sum();
    }
    grads.beta[c] = sum_dy;
    grads.gamma[c] = sum_dy_xhat;
    const Scalar scale_c = gamma[c] * cache.inv_std[c];
    for (Index n = 0; n < batch; ++n) {
      const Index at = x_hat.offset(n, c, 0, 0);
      const auto dy = grad_output.array().segment(at, spatial);
      auto dx = grads.input.array().segment(at, spatial);
      if (cache.mode == Mode::Train) {
        dx = scale_c *
             (dy - sum_dy / count - x_hat.array().segment(at, spatial) * (sum_dy_xhat / count));
      } else {
        dx = scale_c * dy;
      }
    }
  }
  return grads;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
  return Tensor<Scalar>(input.shape(), input.array().max(Scalar(0)));
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& grad_output) {
  require_same_shape(input, grad_output, "relu_backward");
  return Tensor<Scalar>(input.shape(),
                        (input.array() > Scalar(0)).select(grad_output.array(), Scalar(0)));
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& input) {
  if (input.rank() != 4) throw ShapeError("global_avg_pool: expected rank-4 input");
  const Index planes = input.dim(0) * input.dim(1);
  const Index spatial = input.dim(2) * input.dim(3);
  Tensor<Scalar> output({input.dim(0), input.dim(1), 1, 1});
  output.array() = input.matrix(planes, spatial).rowwise().mean().array();
  return output;
}

template <typename Scalar>
Tensor<Scalar> global_avg_pool_backward(const Shape& input_shape,
                                        const Tensor<Scalar>& grad_output) {
  Tensor<Scalar> grad(input_shape);
  const Index planes = input_shape.at(0) * input_shape.at(1);
  const Index spatial = input_shape.at(2) * input_shape.at(3);
  if (grad_output.size() != planes) throw ShapeError("global_avg_pool_backward: size mismatch");
  grad.matrix(planes, spatial).colwise() =
      grad_output.array().matrix() / static_cast<Scalar>(spatial);
  return grad;
}

template <typename Scalar>
Tensor<Scalar> dense(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                     const Tensor<Scalar>& bias) {
  if (weights.rank() != 2) throw ShapeError("dense: weights must be [F,K]");
  const Index batch = input.dim(0), features = input.size() / batch, classes = weights.dim(1);
  if (features != weights.dim(0)) {
    throw ShapeError("dense: input has " + std::to_string(features) + " features, weights expect " +
                     std::to_string(weights.dim(0)));
  }
  if (bias.size() != classes) throw ShapeError("dense: bias length mismatch");
  Tensor<Scalar> output({batch, classes});
  output.matrix().noalias() = input.matrix(batch, features) * weights.matrix();
  output.matrix().rowwise() += bias.array().matrix().transpose();
  return output;
}

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                  const Tensor<Scalar>& grad_output) {
  const Index batch = input.dim(0), features = input.size() / batch, classes = weights.dim(1);
  if (grad_output.shape() != Shape{batch, classes}) {
    throw ShapeError("dense_backward: grad_output shape mismatch");
  }
  DenseGrads<Scalar> grads{Tensor<Scalar>(input.shape()), Tensor<Scalar>(weights.shape()),
                           Tensor<Scalar>({classes})};
  const auto x = input.matrix(batch, features);
  const auto dy = grad_output.matrix();
  grads.input.matrix(batch, features).noalias() = dy * weights.matrix().transpose();
  grads.weights.matrix().noalias() = x.transpose() * dy;
  grads.bias.array() = dy.colwise().sum().transpose().array();
  return grads;
}

template <typename Scalar>
DropoutResult<Scalar> dropout(const Tensor<Scalar>& input, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  DropoutResult<Scalar> result{input, Tensor<Scalar>(input.shape(), Scalar(1))};
  if (mode == Mode::Eval || rate == 0.0) return result;
  const auto keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (auto& m : result.mask.values()) m = rng.uniform() < rate ? Scalar(0) : keep_scale;
  result.output.array() *= result.mask.array();
  return result;
}

template <typename Scalar>
Tensor<Scalar> dropout_backward(const Tensor<Scalar>& mask, const Tensor<Scalar>& grad_output) {
  return mul(mask, grad_output);
}

template <typename Scalar>
SoftmaxXent<Scalar> softmax_xent(const Tensor<Scalar>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_xent: logits must be [N,K]");
  const Index batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<Index>(labels.size()) != batch) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  SoftmaxXent<Scalar> out{0, Tensor<Scalar>(logits.shape()), Tensor<Scalar>(logits.shape())};
  auto probs = out.probs.matrix();
  const auto z = logits.matrix();
  double total = 0;
  for (Index n = 0; n < batch; ++n) {
    const int label = labels[static_cast<std::size_t>(n)];
    if (label < 0 || label >= classes) {
      throw std::out_of_range("softmax_xent: label " + std::to_string(label) + " outside [0," +
                              std::to_string(classes) + ")");
    }
    const Scalar row_max = z.row(n).maxCoeff();
    probs.row(n) = (z.row(n).array() - row_max).exp().matrix();
    const Scalar norm = probs.row(n).sum();
    probs.row(n) /= norm;
    // log p_label = z_label - max - log(sum exp)
    total -= static_cast<double>(z(n, label) - row_max - std::log(norm));
  }
  out.loss = static_cast<Scalar>(total / static_cast<double>(batch));
  auto grad = out.grad_logits.matrix();
  grad = probs;
  for (Index n = 0; n < batch; ++n) grad(n, labels[static_cast<std::size_t>(n)]) -= Scalar(1);
  grad /= static_cast<Scalar>(batch);
  return out;
}

#define DELTANET_INSTANTIATE_LAYERS(S)                                                        \
  template BatchNormResult<S> batchnorm(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, \
                                        Tensor<S>&, Tensor<S>&, Mode, const BatchNormConfig&); \
  template BatchNormGrads<S> batchnorm_backward(const BatchNormCache<S>&, const Tensor<S>&,   \
                                                const Tensor<S>&);                            \
  template Tensor<S> relu(const Tensor<S>&);                                                  \
  template Tensor<S> relu_backward(const Tensor<S>&, const Tensor<S>&);                       \
  template Tensor<S> global_avg_pool(const Tensor<S>&);                                       \
  template Tensor<S> global_avg_pool_backward(const Shape&, const Tensor<S>&);                \
  template Tensor<S> dense(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);             \
  template DenseGrads<S> dense_backward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&); \
  template DropoutResult<S> dropout(const Tensor<S>&, double, Mode, Rng&);                    \
  template Tensor<S> dropout_backward(const Tensor<S>&, const Tensor<S>&);                    \
  template SoftmaxXent<S> softmax_xent(const Tensor<S>&, const std::vector<int>&);

DELTANET_INSTANTIATE_LAYERS(float)
DELTANET_INSTANTIATE_LAYERS(double)

}  // namespace deltanet
