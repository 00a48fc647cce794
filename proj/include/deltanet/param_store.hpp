#pragma once

#include "deltanet/tensor.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace deltanet {

template <typename Scalar>
struct ParamEntry {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> adam_m;
  Tensor<Scalar> adam_v;
  bool trainable = true;
};

/// Named parameters in insertion order. Entries are named
/// layer{index}.{weight|bias|gamma|beta|running_mean|running_var}; running
/// statistics are stored as non-trainable entries.
template <typename Scalar>
class ParamStore {
 public:
  using Entry = ParamEntry<Scalar>;

  Entry& add(std::string name, Tensor<Scalar> value, bool trainable = true);

  bool contains(const std::string& name) const { return index_.contains(name); }
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();

  /// Total scalar count, optionally including non-trainable entries.
  std::int64_t count(bool include_non_trainable = true) const;

  std::int64_t step_count = 0;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of every trainable entry.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const AdamConfig& config = {});

}  // namespace deltanet
