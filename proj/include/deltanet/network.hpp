#pragma once

#include "deltanet/arch.hpp"
#include "deltanet/ops.hpp"
#include "deltanet/param_store.hpp"

#include <cstdint>
#include <vector>

namespace deltanet {

/// Which stochastic/statistical behaviours a forward pass uses. Training
/// turns all of them on; evaluation turns them off and draws FMP regions
/// from a fixed per-layer seed (`fmp_pass` selects the averaging pass).
struct ForwardMode {
  Mode batchnorm = Mode::Eval;
  bool dropout = false;
  bool random_fmp = false;
  int fmp_pass = 0;

  static ForwardMode train() { return {Mode::Train, true, true, 0}; }
  static ForwardMode eval(int pass = 0) { return {Mode::Eval, false, false, pass}; }
};

template <typename Scalar>
struct LayerCache {
  Tensor<Scalar> input;
  Tensor<Scalar> pre_activation;
  BatchNormCache<Scalar> bn;
  std::vector<Index> argmax;
  Tensor<Scalar> dropout_mask;
  Tensor<Scalar> dense_input;
};

template <typename Scalar>
struct ForwardCache {
  std::vector<LayerCache<Scalar>> layers;
};

/// Sequential network over a shape-annotated LayerSpec list. Every
/// convolution is followed by batch norm and ReLU; dropout sits on the
/// dense layer's input; the softmax layer is folded into the loss, so
/// forward() returns logits.
template <typename Scalar>
class Network {
 public:
  static constexpr double kDefaultDropout = 0.1;

  Network(const ArchSpec& spec, std::uint64_t seed, double dropout_rate = kDefaultDropout);
  Network(std::vector<LayerSpec> layers, int input_extent, std::uint64_t seed,
          double dropout_rate = kDefaultDropout);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }
  int input_extent() const { return input_extent_; }
  int input_channels() const { return layers_.front().in_channels; }
  int classnum() const;
  std::uint64_t seed() const { return seed_; }
  double dropout_rate() const { return dropout_rate_; }

  /// batch [N, C, E, E] -> logits [N, classnum]. Pass `cache` to enable backward().
  Tensor<Scalar> forward(const Tensor<Scalar>& batch, const ForwardMode& mode, Rng& rng,
                         ForwardCache<Scalar>* cache = nullptr);

  /// Overwrites every parameter gradient from dL/dlogits.
  void backward(const ForwardCache<Scalar>& cache, const Tensor<Scalar>& grad_logits);

  /// Copy values from `source`; names, shapes and trainable flags must match exactly.
  void load_params(const ParamStore<Scalar>& source);

  static std::string param_name(std::size_t layer, const char* field);

 private:
  void init_params();

  std::vector<LayerSpec> layers_;
  int input_extent_;
  std::uint64_t seed_;
  double dropout_rate_;
  ParamStore<Scalar> params_;
};

}  // namespace deltanet
