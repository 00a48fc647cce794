#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltanet {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string to_string(const Shape& shape);

/// Number of elements of `shape`. Throws ShapeError on any dimension < 1.
Index num_elements(const Shape& shape);

/// Dense row-major tensor. Activations use the (batch, channel, height, width)
/// layout; element (n,c,h,w) lives at ((n*C + c)*H + h)*W + w.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  Tensor() = default;

  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)),
        data_(Array::Constant(num_elements(shape_), fill)) {}

  Tensor(Shape shape, Array data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (num_elements(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return {data_.data(), static_cast<std::size_t>(data_.size())}; }
  std::span<const Scalar> values() const {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }

  Scalar& operator[](Index i) { return data_[i]; }
  const Scalar& operator[](Index i) const { return data_[i]; }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  Scalar& operator()(Index n, Index c, Index h, Index w) { return data_[offset(n, c, h, w)]; }
  const Scalar& operator()(Index n, Index c, Index h, Index w) const {
    return data_[offset(n, c, h, w)];
  }

  /// Row-major matrix view over the whole buffer.
  MatrixMap matrix(Index rows, Index cols) {
    check_view(rows, cols);
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap matrix(Index rows, Index cols) const {
    check_view(rows, cols);
    return ConstMatrixMap(data_.data(), rows, cols);
  }
  MatrixMap matrix() { return matrix(shape_.at(0), size() / shape_.at(0)); }
  ConstMatrixMap matrix() const { return matrix(shape_.at(0), size() / shape_.at(0)); }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  void set_zero() { data_.setZero(); }

 private:
  void check_view(Index rows, Index cols) const {
    if (rows * cols != data_.size()) {
      throw ShapeError("cannot view " + to_string(shape_) + " as " + std::to_string(rows) +
                       "x" + std::to_string(cols));
    }
  }

  Shape shape_;
  Array data_;
};

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "add");
  return Tensor<Scalar>(a.shape(), a.array() + b.array());
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, Scalar b) {
  return Tensor<Scalar>(a.shape(), a.array() + b);
}

template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "mul");
  return Tensor<Scalar>(a.shape(), a.array() * b.array());
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar s) {
  return Tensor<Scalar>(a.shape(), a.array() * s);
}

class Rng;

enum class Init { Constant, HeNormal, GlorotUniform };

struct Fans {
  Index in = 1;
  Index out = 1;
};

/// Fan-in/fan-out by layout: [out, in, kh, kw] filters, [in, out] dense
/// weights, and vectors (fan = length).
Fans default_fans(const Shape& shape);

/// he_normal draws N(0, 2/fan_in); glorot_uniform draws U(+-sqrt(6/(fan_in+fan_out))).
template <typename Scalar>
Tensor<Scalar> make_tensor(const Shape& shape, Init init, Rng& rng, Scalar constant = Scalar(0));

template <typename Scalar>
Tensor<Scalar> make_tensor(const Shape& shape, Init init, Rng& rng, Fans fans,
                           Scalar constant = Scalar(0));

}  // namespace deltanet
