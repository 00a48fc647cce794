#include "deltanet/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace deltanet {

template <typename Scalar>
typename ParamStore<Scalar>::Entry& ParamStore<Scalar>::add(std::string name, Tensor<Scalar> value,
                                                            bool trainable) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  index_.emplace(name, entries_.size());
  Entry e;
  e.name = std::move(name);
  e.grad = Tensor<Scalar>(value.shape());
  e.adam_m = Tensor<Scalar>(value.shape());
  e.adam_v = Tensor<Scalar>(value.shape());
  e.value = std::move(value);
  e.trainable = trainable;
  entries_.push_back(std::move(e));
  return entries_.back();
}

template <typename Scalar>
typename ParamStore<Scalar>::Entry& ParamStore<Scalar>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return entries_[it->second];
}

template <typename Scalar>
const typename ParamStore<Scalar>::Entry& ParamStore<Scalar>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return entries_[it->second];
}

template <typename Scalar>
void ParamStore<Scalar>::zero_grad() {
  for (auto& e : entries_) e.grad.set_zero();
}

template <typename Scalar>
std::int64_t ParamStore<Scalar>::count(bool include_non_trainable) const {
  std::int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable || include_non_trainable) n += e.value.size();
  }
  return n;
}

template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const AdamConfig& config) {
  ++params.step_count;
  const double t = static_cast<double>(params.step_count);
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(config.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(config.beta2, t));
  const auto lr = static_cast<Scalar>(config.lr);
  const auto eps = static_cast<Scalar>(config.epsilon);
  for (auto& e : params) {
    if (!e.trainable) continue;
    const auto& g = e.grad.array();
    e.adam_m.array() = b1 * e.adam_m.array() + (Scalar(1) - b1) * g;
    e.adam_v.array() = b2 * e.adam_v.array() + (Scalar(1) - b2) * g.square();
    e.value.array() -= lr * (e.adam_m.array() / correction1) /
                       ((e.adam_v.array() / correction2).sqrt() + eps);
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step(ParamStore<float>&, const AdamConfig&);
template void adam_step(ParamStore<double>&, const AdamConfig&);

}  // namespace deltanet
