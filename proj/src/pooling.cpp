#include "deltanet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deltanet {

namespace {

template <typename Scalar>
void require_rank4(const Tensor<Scalar>& t, const char* op) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(op) + ": expected rank-4 input, got " + to_string(t.shape()));
  }
}

// Max over rows [r0, r1) x cols [c0, c1) of one plane; ties keep the first
// row-major position.
template <typename Scalar>
Index window_argmax(const Scalar* plane, Index width, Index r0, Index r1, Index c0, Index c1) {
  Index best = r0 * width + c0;
  Scalar best_value = plane[best];
  for (Index r = r0; r < r1; ++r) {
    for (Index c = c0; c < c1; ++c) {
      const Scalar v = plane[r * width + c];
      if (v > best_value) {
        best_value = v;
        best = r * width + c;
      }
    }
  }
  return best;
}

}  // namespace

template <typename Scalar>
PoolResult<Scalar> maxpool_3x3_s2(const Tensor<Scalar>& input) {
  require_rank4(input, "maxpool_3x3_s2");
  constexpr Index kKernel = 3, kStride = 2;
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index height = input.dim(2), width = input.dim(3);
  const SamePadding rows = same_padding(height, kKernel, kStride);
  const SamePadding cols = same_padding(width, kKernel, kStride);

  PoolResult<Scalar> result{Tensor<Scalar>({batch, channels, rows.out, cols.out}), {}};
  result.argmax.resize(static_cast<std::size_t>(result.output.size()));
  Index o = 0;
  for (Index p = 0; p < batch * channels; ++p) {
    const Index base = p * height * width;
    const Scalar* plane = input.data() + base;
    for (Index oh = 0; oh < rows.out; ++oh) {
      const Index r0 = std::max<Index>(oh * kStride - rows.before, 0);
      const Index r1 = std::min<Index>(oh * kStride - rows.before + kKernel, height);
      for (Index ow = 0; ow < cols.out; ++ow, ++o) {
        const Index c0 = std::max<Index>(ow * kStride - cols.before, 0);
        const Index c1 = std::min<Index>(ow * kStride - cols.before + kKernel, width);
        const Index at = window_argmax(plane, width, r0, r1, c0, c1);
        result.output[o] = plane[at];
        result.argmax[static_cast<std::size_t>(o)] = base + at;
      }
    }
  }
  return result;
}

template <typename Scalar>
Tensor<Scalar> pool_backward(const Shape& input_shape, const std::vector<Index>& argmax,
                             const Tensor<Scalar>& grad_output) {
  if (static_cast<Index>(argmax.size()) != grad_output.size()) {
    throw ShapeError("pool_backward: argmax/grad_output size mismatch");
  }
  Tensor<Scalar> grad(input_shape);
  for (Index i = 0; i < grad_output.size(); ++i) {
    grad[argmax[static_cast<std::size_t>(i)]] += grad_output[i];
  }
  return grad;
}

Index PoolRegions::end(Index i) const {
  const Index b = bounds[static_cast<std::size_t>(i + 1)];
  return overlap ? std::min<Index>(b + 1, extent()) : b;
}

PoolRegions fmp_regions(Index extent_in, Index extent_out, bool overlap, double u) {
  if (extent_out < 1 || extent_in < 1) throw ShapeError("fmp_regions: extents must be >= 1");
  if (extent_out > extent_in) {
    throw ShapeError("fmp_regions: output extent " + std::to_string(extent_out) +
                     " exceeds input extent " + std::to_string(extent_in));
  }
  PoolRegions regions;
  regions.overlap = overlap;
  regions.bounds.resize(static_cast<std::size_t>(extent_out + 1));
  const auto in = static_cast<double>(extent_in);
  const auto out = static_cast<double>(extent_out);

  if (extent_in >= 2 * extent_out) {
    for (Index i = 0; i <= extent_out; ++i) {
      regions.bounds[static_cast<std::size_t>(i)] = (i * extent_in) / extent_out;
    }
    return regions;
  }

  const auto offset = static_cast<Index>(std::ceil(in * u / out));
  for (Index i = 0; i <= extent_out; ++i) {
    regions.bounds[static_cast<std::size_t>(i)] =
        static_cast<Index>(std::ceil(in * (static_cast<double>(i) + u) / out)) - offset;
  }
  regions.bounds.front() = 0;
  regions.bounds.back() = extent_in;
  // Rounding can only disturb the sequence by one step; keep it strictly increasing.
  for (std::size_t i = 1; i + 1 < regions.bounds.size(); ++i) {
    const Index lo = regions.bounds[i - 1] + 1;
    const Index hi = extent_in - static_cast<Index>(regions.bounds.size() - 1 - i);
    regions.bounds[i] = std::clamp(regions.bounds[i], lo, hi);
  }
  return regions;
}

PoolRegions fmp_regions(Index extent_in, Index extent_out, bool overlap, Rng& rng) {
  return fmp_regions(extent_in, extent_out, overlap, rng.uniform_open());
}

template <typename Scalar>
PoolResult<Scalar> fmp_pool(const Tensor<Scalar>& input, const PoolRegions& rows,
                            const PoolRegions& cols) {
  require_rank4(input, "fmp_pool");
  const Index batch = input.dim(0), channels = input.dim(1);
  const Index height = input.dim(2), width = input.dim(3);
  if (rows.extent() != height || cols.extent() != width) {
    throw ShapeError("fmp_pool: regions cover " + std::to_string(rows.extent()) + "x" +
                     std::to_string(cols.extent()) + " but input is " + std::to_string(height) +
                     "x" + std::to_string(width));
  }
  const Index out_h = rows.count(), out_w = cols.count();
  PoolResult<Scalar> result{Tensor<Scalar>({batch, channels, out_h, out_w}), {}};
  result.argmax.resize(static_cast<std::size_t>(result.output.size()));
  Index o = 0;
  for (Index p = 0; p < batch * channels; ++p) {
    const Index base = p * height * width;
    const Scalar* plane = input.data() + base;
    for (Index i = 0; i < out_h; ++i) {
      for (Index j = 0; j < out_w; ++j, ++o) {
        const Index at = window_argmax(plane, width, rows.begin(i), rows.end(i), cols.begin(j),
                                       cols.end(j));
        result.output[o] = plane[at];
        result.argmax[static_cast<std::size_t>(o)] = base + at;
      }
    }
  }
  return result;
}

#define DELTANET_INSTANTIATE_POOL(S)                                                       \
  template PoolResult<S> maxpool_3x3_s2(const Tensor<S>&);                                 \
  template Tensor<S> pool_backward(const Shape&, const std::vector<Index>&, const Tensor<S>&); \
  template PoolResult<S> fmp_pool(const Tensor<S>&, const PoolRegions&, const PoolRegions&);

DELTANET_INSTANTIATE_POOL(float)
DELTANET_INSTANTIATE_POOL(double)

}  // namespace deltanet
