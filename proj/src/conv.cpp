#include "deltanet/ops.hpp"

#include <algorithm>

namespace deltanet {

SamePadding same_padding(Index in, Index kernel, Index stride) {
  if (in < 1 || kernel < 1 || stride < 1) throw ShapeError("same_padding: arguments must be >= 1");
  const Index out = (in + stride - 1) / stride;
  const Index total = std::max<Index>((out - 1) * stride + kernel - in, 0);
  return {out, total / 2};
}

namespace {

template <typename Scalar>
using RowMatrix = typename Tensor<Scalar>::RowMatrix;

struct ConvGeometry {
  Index batch, in_channels, height, width;
  Index out_channels, kernel, stride;
  SamePadding rows, cols;
};

template <typename Scalar>
ConvGeometry conv_geometry(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                           Index stride, const char* op) {
  if (input.rank() != 4) throw ShapeError(std::string(op) + ": input must be rank 4, got " + to_string(input.shape()));
  if (weights.rank() != 4 || weights.dim(2) != weights.dim(3)) {
    throw ShapeError(std::string(op) + ": weights must be [C_out,C_in,k,k], got " +
                     to_string(weights.shape()));
  }
  if (stride != 1 && stride != 2) throw ShapeError(std::string(op) + ": stride must be 1 or 2");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 weights.dim(0), weights.dim(2), stride, {}, {}};
  g.rows = same_padding(g.height, g.kernel, stride);
  g.cols = same_padding(g.width, g.kernel, stride);
  return g;
}

// Unfold one sample [C,H,W] into [C*k*k, Ho*Wo].
template <typename Scalar>
void im2col(const Scalar* sample, const ConvGeometry& g, RowMatrix<Scalar>& cols) {
  const Index out_h = g.rows.out, out_w = g.cols.out, k = g.kernel;
  cols.resize(g.in_channels * k * k, out_h * out_w);
  for (Index c = 0; c < g.in_channels; ++c) {
    const Scalar* plane = sample + c * g.height * g.width;
    for (Index kh = 0; kh < k; ++kh) {
      for (Index kw = 0; kw < k; ++kw) {
        Scalar* row = cols.row((c * k + kh) * k + kw).data();
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * g.stride - g.rows.before + kh;
          Scalar* dst = row + oh * out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill(dst, dst + out_w, Scalar(0));
            continue;
          }
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * g.stride - g.cols.before + kw;
            dst[ow] = (iw < 0 || iw >= g.width) ? Scalar(0) : plane[ih * g.width + iw];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const RowMatrix<Scalar>& cols, const ConvGeometry& g, Scalar* sample) {
  const Index out_h = g.rows.out, out_w = g.cols.out, k = g.kernel;
  for (Index c = 0; c < g.in_channels; ++c) {
    Scalar* plane = sample + c * g.height * g.width;
    for (Index kh = 0; kh < k; ++kh) {
      for (Index kw = 0; kw < k; ++kw) {
        const Scalar* row = cols.row((c * k + kh) * k + kw).data();
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * g.stride - g.rows.before + kh;
          if (ih < 0 || ih >= g.height) continue;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * g.stride - g.cols.before + kw;
            if (iw >= 0 && iw < g.width) plane[ih * g.width + iw] += row[oh * out_w + ow];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1; }

}  // namespace

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, Index stride) {
  const ConvGeometry g = conv_geometry(input, weights, stride, "conv2d");
  if (weights.dim(1) != g.in_channels) {
    throw ShapeError("conv2d: weights expect " + std::to_string(weights.dim(1)) +
                     " input channels, input has " + std::to_string(g.in_channels));
  }
  const Index in_plane = g.in_channels * g.height * g.width;
  const Index out_spatial = g.rows.out * g.cols.out;
  Tensor<Scalar> output({g.batch, g.out_channels, g.rows.out, g.cols.out});
  const auto w = weights.matrix(g.out_channels, g.in_channels * g.kernel * g.kernel);

  RowMatrix<Scalar> cols;
  for (Index n = 0; n < g.batch; ++n) {
    typename Tensor<Scalar>::MatrixMap out(output.data() + n * g.out_channels * out_spatial,
                                           g.out_channels, out_spatial);
    if (is_pointwise(g)) {
      typename Tensor<Scalar>::ConstMatrixMap x(input.data() + n * in_plane, g.in_channels,
                                                out_spatial);
      out.noalias() = w * x;
    } else {
      im2col(input.data() + n * in_plane, g, cols);
      out.noalias() = w * cols;
    }
  }
  return output;
}

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                  Index stride, const Tensor<Scalar>& grad_output) {
  const ConvGeometry g = conv_geometry(input, weights, stride, "conv2d_backward");
  const Shape expected{g.batch, g.out_channels, g.rows.out, g.cols.out};
  if (grad_output.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_output " + to_string(grad_output.shape()) +
                     ", expected " + to_string(expected));
  }
  const Index in_plane = g.in_channels * g.height * g.width;
  const Index out_spatial = g.rows.out * g.cols.out;
  const Index patch = g.in_channels * g.kernel * g.kernel;

  ConvGrads<Scalar> grads{Tensor<Scalar>(input.shape()), Tensor<Scalar>(weights.shape())};
  auto dw = grads.weights.matrix(g.out_channels, patch);
  const auto w = weights.matrix(g.out_channels, patch);

  RowMatrix<Scalar> cols;
  RowMatrix<Scalar> dcols;
  for (Index n = 0; n < g.batch; ++n) {
    typename Tensor<Scalar>::ConstMatrixMap dy(
        grad_output.data() + n * g.out_channels * out_spatial, g.out_channels, out_spatial);
    if (is_pointwise(g)) {
      typename Tensor<Scalar>::ConstMatrixMap x(input.data() + n * in_plane, g.in_channels,
                                                out_spatial);
      typename Tensor<Scalar>::MatrixMap dx(grads.input.data() + n * in_plane, g.in_channels,
                                            out_spatial);
      dw.noalias() += dy * x.transpose();
      dx.noalias() = w.transpose() * dy;
    } else {
      im2col(input.data() + n * in_plane, g, cols);
      dw.noalias() += dy * cols.transpose();
      dcols.noalias() = w.transpose() * dy;
      col2im(dcols, g, grads.input.data() + n * in_plane);
    }
  }
  return grads;
}

template <typename Scalar>
Tensor<Scalar> pointwise_conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights) {
  if (weights.rank() != 4 || weights.dim(2) != 1 || weights.dim(3) != 1) {
    throw ShapeError("pointwise_conv2d: weights must be [C_out,C,1,1], got " +
                     to_string(weights.shape()));
  }
  return conv2d(input, weights, 1);
}

template <typename Scalar>
ConvGrads<Scalar> pointwise_conv2d_backward(const Tensor<Scalar>& input,
                                            const Tensor<Scalar>& weights,
                                            const Tensor<Scalar>& grad_output) {
  if (weights.rank() != 4 || weights.dim(2) != 1 || weights.dim(3) != 1) {
    throw ShapeError("pointwise_conv2d_backward: weights must be [C_out,C,1,1]");
  }
  return conv2d_backward(input, weights, 1, grad_output);
}

template <typename Scalar>
Tensor<Scalar> depthwise_conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weights,
                                Index stride) {
  const ConvGeometry g = conv_geometry(input, weights, stride, "depthwise_conv2d");
  if (weights.dim(0) != g.in_channels) {
    throw ShapeError("depthwise_conv2d: weights cover " + std::to_string(weights.dim(0)) +
                     " channels, input has " + std::to_string(g.in_channels));
  }
  const Index delta = weights.dim(1), k = g.kernel;
  const Index out_h = g.rows.out, out_w = g.cols.out;
  Tensor<Scalar> output({g.batch, g.in_channels * delta, out_h, out_w});

  for (Index n = 0; n < g.batch; ++n) {
    for (Index m = 0; m < g.in_channels; ++m) {
      const Scalar* plane = input.data() + input.offset(n, m, 0, 0);
      for (Index d = 0; d < delta; ++d) {
        const Scalar* filter = weights.data() + (m * delta + d) * k * k;
        Scalar* out = output.data() + output.offset(n, m * delta + d, 0, 0);
        for (Index oh = 0; oh < out_h; ++oh) {
          for (Index ow = 0; ow < out_w; ++ow) {
            Scalar acc = 0;
            for (Index kh = 0; kh < k; ++kh) {
              const Index ih = oh * stride - g.rows.before + kh;
              if (ih < 0 || ih >= g.height) continue;
              for (Index kw = 0; kw < k; ++kw) {
                const Index iw = ow * stride - g.cols.before + kw;
                if (iw < 0 || iw >= g.width) continue;
                acc += plane[ih * g.width + iw] * filter[kh * k + kw];
              }
            }
            out[oh * out_w + ow] = acc;
          }
        }
      }
    }
  }
  return output;
}

template <typename Scalar>
ConvGrads<Scalar> depthwise_conv2d_backward(const Tensor<Scalar>& input,
                                            const Tensor<Scalar>& weights, Index stride,
                                            const Tensor<Scalar>& grad_output) {
  const ConvGeometry g = conv_geometry(input, weights, stride, "depthwise_conv2d_backward");
  if (weights.dim(0) != g.in_channels) {
    throw ShapeError("depthwise_conv2d_backward: weights/input channel mismatch");
  }
  const Index delta = weights.dim(1), k = g.kernel;
  const Index out_h = g.rows.out, out_w = g.cols.out;
  const Shape expected{g.batch, g.in_channels * delta, out_h, out_w};
  if (grad_output.shape() != expected) {
    throw ShapeError("depthwise_conv2d_backward: grad_output " + to_string(grad_output.shape()) +
                     ", expected " + to_string(expected));
  }

  ConvGrads<Scalar> grads{Tensor<Scalar>(input.shape()), Tensor<Scalar>(weights.shape())};
  for (Index n = 0; n < g.batch; ++n) {
    for (Index m = 0; m < g.in_channels; ++m) {
      const Scalar* plane = input.data() + input.offset(n, m, 0, 0);
      Scalar* dplane = grads.input.data() + input.offset(n, m, 0, 0);
      for (Index d = 0; d < delta; ++d) {
        const Scalar* filter = weights.data() + (m * delta + d) * k * k;
        Scalar* dfilter = grads.weights.data() + (m * delta + d) * k * k;
        const Scalar* dy = grad_output.data() + grad_output.offset(n, m * delta + d, 0, 0);
        for (Index oh = 0; oh < out_h; ++oh) {
          for (Index ow = 0; ow < out_w; ++ow) {
            const Scalar upstream = dy[oh * out_w + ow];
            if (upstream == Scalar(0)) continue;
            for (Index kh = 0; kh < k; ++kh) {
              const Index ih = oh * stride - g.rows.before + kh;
              if (ih < 0 || ih >= g.height) continue;
              for (Index kw = 0; kw < k; ++kw) {
                const Index iw = ow * stride - g.cols.before + kw;
                if (iw < 0 || iw >= g.width) continue;
                dplane[ih * g.width + iw] += upstream * filter[kh * k + kw];
                dfilter[kh * k + kw] += upstream * plane[ih * g.width + iw];
              }
            }
          }
        }
      }
    }
  }
  return grads;
}

#define DELTANET_INSTANTIATE_CONV(S)                                                          \
  template Tensor<S> conv2d(const Tensor<S>&, const Tensor<S>&, Index);                       \
  template ConvGrads<S> conv2d_backward(const Tensor<S>&, const Tensor<S>&, Index,            \
                                        const Tensor<S>&);                                    \
  template Tensor<S> pointwise_conv2d(const Tensor<S>&, const Tensor<S>&);                    \
  template ConvGrads<S> pointwise_conv2d_backward(const Tensor<S>&, const Tensor<S>&,         \
                                                  const Tensor<S>&);                          \
  template Tensor<S> depthwise_conv2d(const Tensor<S>&, const Tensor<S>&, Index);             \
  template ConvGrads<S> depthwise_conv2d_backward(const Tensor<S>&, const Tensor<S>&, Index,  \
                                                  const Tensor<S>&);

DELTANET_INSTANTIATE_CONV(float)
DELTANET_INSTANTIATE_CONV(double)

}  // namespace deltanet
