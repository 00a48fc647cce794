#include "deltanet/tensor.hpp"

#include "deltanet/rng.hpp"

#include <cmath>

namespace deltanet {

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Index num_elements(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  Index n = 1;
  for (Index d : shape) {
    if (d < 1) throw ShapeError("invalid shape " + to_string(shape) + ": dimensions must be >= 1");
    n *= d;
  }
  return n;
}

Fans default_fans(const Shape& shape) {
  num_elements(shape);
  switch (shape.size()) {
    case 4: {
      const Index receptive = shape[2] * shape[3];
      return {shape[1] * receptive, shape[0] * receptive};
    }
    case 2:
      return {shape[0], shape[1]};
    default:
      return {shape[0], shape[0]};
  }
}

template <typename Scalar>
Tensor<Scalar> make_tensor(const Shape& shape, Init init, Rng& rng, Fans fans, Scalar constant) {
  Tensor<Scalar> t(shape, constant);
  switch (init) {
    case Init::Constant:
      break;
    case Init::HeNormal: {
      const double sigma = std::sqrt(2.0 / static_cast<double>(fans.in));
      for (auto& v : t.values()) v = static_cast<Scalar>(sigma * rng.normal());
      break;
    }
    case Init::GlorotUniform: {
      const double limit = std::sqrt(6.0 / static_cast<double>(fans.in + fans.out));
      for (auto& v : t.values()) v = static_cast<Scalar>(limit * (2.0 * rng.uniform() - 1.0));
      break;
    }
  }
  return t;
}

template <typename Scalar>
Tensor<Scalar> make_tensor(const Shape& shape, Init init, Rng& rng, Scalar constant) {
  return make_tensor<Scalar>(shape, init, rng, default_fans(shape), constant);
}

template Tensor<float> make_tensor(const Shape&, Init, Rng&, Fans, float);
template Tensor<double> make_tensor(const Shape&, Init, Rng&, Fans, double);
template Tensor<float> make_tensor(const Shape&, Init, Rng&, float);
template Tensor<double> make_tensor(const Shape&, Init, Rng&, double);

}  // namespace deltanet
