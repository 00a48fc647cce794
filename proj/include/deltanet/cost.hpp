#pragma once

#include "deltanet/arch.hpp"
#include "deltanet/param_store.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deltanet {

// Closed-form cost accounting for depthwise separable layers. Channel
// counts go through scale_channels so they agree with the built networks.

/// D_K * D_K * (alpha*M * delta)
std::int64_t dw_params(int kernel, int m, double alpha, int delta);
/// (alpha*M * delta) * alpha*N
std::int64_t pw_params(int m, int n, double alpha, int delta);
/// D_K * D_K * (alpha*M * delta) * D_F * D_F, D_F = output extent
std::int64_t dw_madds(int kernel, int m, double alpha, int delta, int feature_extent);
/// (alpha*M * delta) * alpha*N * D_F * D_F
std::int64_t pw_madds(int m, int n, double alpha, int delta, int feature_extent);

/// Cost of a modified separable layer relative to the alpha = delta = 1
/// layer. Parameters and Mult-Adds share the expression since D_F^2 cancels.
struct SeparableRatio {
  double exact = 1.0;   // (alpha*D_K^2 + alpha^2*N) * delta / (D_K^2 + N)
  double approx = 1.0;  // alpha^2 * delta
};
SeparableRatio separable_ratio(int kernel, int n, double alpha, int delta);

struct LayerCost {
  std::string name;  // "layer{i}", matching ParamStore prefixes
  LayerKind kind = LayerKind::Conv;
  std::int64_t params = 0;     // weights and biases
  std::int64_t bn_params = 0;  // gamma, beta, running mean, running variance
  std::int64_t mult_adds = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  bool count_bn = true;

  std::int64_t total_params() const;
  std::int64_t total_mult_adds() const;
};

/// Mult-Adds count one multiply-accumulate per output element per filter
/// tap, for convolutions and the dense layer only. Pooling, BN, ReLU and
/// softmax cost nothing. With count_bn, each normalized channel adds four
/// parameters.
CostReport model_cost(const std::vector<LayerSpec>& layers, bool count_bn = true);

/// Millions rounded half-up to two decimals, as printed in the cost tables.
double millions(std::int64_t count);
std::string format_millions(std::int64_t count);

struct CostCheck {
  bool ok = true;
  std::string mismatch;  // first differing layer, empty when ok
};

/// Compare analytical per-layer parameter counts against the tensors a
/// network actually allocated.
template <typename Scalar>
CostCheck verify_against_network(const CostReport& report, const ParamStore<Scalar>& params);

}  // namespace deltanet
