#pragma once

// Forward and backward kernels for every layer type of the three network
// variants. All kernels are pure functions over Tensor<Scalar> and are
// instantiated for float (training) and double (gradient checks).

#include "deltanet/rng.hpp"
#include "deltanet/tensor.hpp"

#include <vector>

namespace deltanet {

/// "Same" padding: output extent ceil(in/stride), total padding split with
/// the smaller half before (TensorFlow convention).
struct SamePadding {
  Index out = 0;
  Index before = 0;
};
SamePadding same_padding(Index in, Index kernel, Index stride);

// ---------------------------------------------------------------------------
// Convolutions

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> weights;
};

/// Standard cross-correlation. input [N,C_in,H,W], weights [C_out,C_in,k,k].
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, Index stride);

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                  Index stride, const Tensor<Scalar>& grad_output);

/// Depthwise convolution with depth multiplier. weights [M, delta, k, k];
/// output channel m*delta + d is input channel m filtered by weights(m, d).
template <typename Scalar>
Tensor<Scalar> depthwise_conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                Index stride);

template <typename Scalar>
ConvGrads<Scalar> depthwise_conv2d_backward(const Tensor<Scalar>& input,
                                            const Tensor<Scalar>& weights, Index stride,
                                            const Tensor<Scalar>& grad_output);

/// 1x1 convolution. weights [C_out, C, 1, 1].
template <typename Scalar>
Tensor<Scalar> pointwise_conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights);

template <typename Scalar>
ConvGrads<Scalar> pointwise_conv2d_backward(const Tensor<Scalar>& input,
                                            const Tensor<Scalar>& weights,
                                            const Tensor<Scalar>& grad_output);

// ---------------------------------------------------------------------------
// Pooling

/// Pooling output plus, for every output element, the flat input offset of
/// the first row-major maximum of its window.
template <typename Scalar>
struct PoolResult {
  Tensor<Scalar> output;
  std::vector<Index> argmax;
};

/// 3x3 windows, stride 2, same padding. Padded cells never win.
template <typename Scalar>
PoolResult<Scalar> maxpool_3x3_s2(const Tensor<Scalar>& input);

/// Scatter grad_output onto the recorded argmax positions (accumulating).
template <typename Scalar>
Tensor<Scalar> pool_backward(const Shape& input_shape, const std::vector<Index>& argmax,
                             const Tensor<Scalar>& grad_output);

/// Pooling regions along one axis. bounds = b_0 .. b_R with b_0 = 0 and
/// b_R = extent. Region i covers [b_i, b_{i+1}) in disjoint mode and
/// [b_i, min(b_{i+1} + 1, extent)) in overlap mode.
struct PoolRegions {
  std::vector<Index> bounds;
  bool overlap = false;

  Index count() const { return static_cast<Index>(bounds.size()) - 1; }
  Index extent() const { return bounds.back(); }
  Index begin(Index i) const { return bounds[static_cast<std::size_t>(i)]; }
  Index end(Index i) const;
};

/// Fractional max pooling regions for one axis from offset u in (0, 1):
/// b_i = ceil(r(i+u)) - ceil(r*u), r = extent_in/extent_out, for ratios
/// below 2; ratios >= 2 fall back to uniform regions b_i = floor(i*r).
PoolRegions fmp_regions(Index extent_in, Index extent_out, bool overlap, double u);

/// As above with u drawn from rng.
PoolRegions fmp_regions(Index extent_in, Index extent_out, bool overlap, Rng& rng);

template <typename Scalar>
PoolResult<Scalar> fmp_pool(const Tensor<Scalar>& input, const PoolRegions& rows,
                            const PoolRegions& cols);

// ---------------------------------------------------------------------------
// Normalization, activations, classifier

enum class Mode { Train, Eval };

struct BatchNormConfig {
  double epsilon = 1e-3;
  double momentum = 0.99;
};

template <typename Scalar>
struct BatchNormCache {
  Mode mode = Mode::Eval;
  Tensor<Scalar> normalized;                      // x_hat
  Eigen::Array<Scalar, Eigen::Dynamic, 1> inv_std;  // per channel
};

template <typename Scalar>
struct BatchNormResult {
  Tensor<Scalar> output;
  BatchNormCache<Scalar> cache;
};

template <typename Scalar>
struct BatchNormGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> gamma;
  Tensor<Scalar> beta;
};

/// Per-channel batch normalization over (N, H, W). Train mode normalizes by
/// biased batch statistics and folds them into the running statistics with
/// `momentum`; eval mode uses the running statistics (initially mean 0,
/// variance 1).
template <typename Scalar>
BatchNormResult<Scalar> batchnorm(const Tensor<Scalar>& input, const Tensor<Scalar>& gamma,
                                  const Tensor<Scalar>& beta, Tensor<Scalar>& running_mean,
                                  Tensor<Scalar>& running_var, Mode mode,
                                  const BatchNormConfig& config = {});

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const BatchNormCache<Scalar>& cache,
                                          const Tensor<Scalar>& gamma,
                                          const Tensor<Scalar>& grad_output);

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& grad_output);

template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> global_avg_pool_backward(const Shape& input_shape,
                                        const Tensor<Scalar>& grad_output);

template <typename Scalar>
struct DenseGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
};

/// input [N,F], weights [F,K], bias [K] -> [N,K].
template <typename Scalar>
Tensor<Scalar> dense(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                     const Tensor<Scalar>& bias);

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                  const Tensor<Scalar>& grad_output);

template <typename Scalar>
struct DropoutResult {
  Tensor<Scalar> output;
  Tensor<Scalar> mask;  // 0 or 1/(1-rate) per element
};

/// Inverted dropout. Eval mode (or rate 0) is the identity with an all-ones mask.
template <typename Scalar>
DropoutResult<Scalar> dropout(const Tensor<Scalar>& input, double rate, Mode mode, Rng& rng);

template <typename Scalar>
Tensor<Scalar> dropout_backward(const Tensor<Scalar>& mask, const Tensor<Scalar>& grad_output);

template <typename Scalar>
struct SoftmaxXent {
  Scalar loss = 0;
  Tensor<Scalar> probs;
  Tensor<Scalar> grad_logits;  // (probs - onehot) / N
};

/// Mean softmax cross-entropy over the batch.
template <typename Scalar>
SoftmaxXent<Scalar> softmax_xent(const Tensor<Scalar>& logits, const std::vector<int>& labels);

}  // namespace deltanet
