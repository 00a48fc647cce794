#include "deltanet/cost.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>

namespace deltanet {

std::int64_t dw_params(int kernel, int m, double alpha, int delta) {
  return std::int64_t{kernel} * kernel * scale_channels(m, alpha) * delta;
}

std::int64_t pw_params(int m, int n, double alpha, int delta) {
  return std::int64_t{scale_channels(m, alpha)} * delta * scale_channels(n, alpha);
}

std::int64_t dw_madds(int kernel, int m, double alpha, int delta, int feature_extent) {
  return dw_params(kernel, m, alpha, delta) * feature_extent * feature_extent;
}

std::int64_t pw_madds(int m, int n, double alpha, int delta, int feature_extent) {
  return pw_params(m, n, alpha, delta) * feature_extent * feature_extent;
}

SeparableRatio separable_ratio(int kernel, int n, double alpha, int delta) {
  const double k2 = static_cast<double>(kernel) * kernel;
  return {(alpha * k2 + alpha * alpha * n) * delta / (k2 + n), alpha * alpha * delta};
}

std::int64_t CostReport::total_params() const {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.params + (count_bn ? l.bn_params : 0);
  return total;
}

std::int64_t CostReport::total_mult_adds() const {
  std::int64_t total = 0;
  for (const auto& l : layers) total += l.mult_adds;
  return total;
}

CostReport model_cost(const std::vector<LayerSpec>& layers, bool count_bn) {
  CostReport report;
  report.count_bn = count_bn;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_extent < 1 || l.out_extent < 1) {
      throw std::invalid_argument("model_cost: layer " + std::to_string(i) +
                                  " has no inferred shape");
    }
    LayerCost c{"layer" + std::to_string(i), l.kind, 0, 0, 0};
    const std::int64_t k2 = std::int64_t{l.kernel} * l.kernel;
    const std::int64_t df2 = std::int64_t{l.out_extent} * l.out_extent;
    switch (l.kind) {
      case LayerKind::Conv:
        c.params = k2 * l.in_channels * l.out_channels;
        break;
      case LayerKind::DwConv:
        c.params = dw_params(l.kernel, l.in_channels, 1.0, l.multiplier);
        break;
      case LayerKind::PwConv:
        c.params = pw_params(l.in_channels, l.out_channels, 1.0, 1);
        break;
      case LayerKind::Dense:
        c.params = std::int64_t{l.in_channels} * l.out_channels + l.out_channels;
        c.mult_adds = std::int64_t{l.in_channels} * l.out_channels;
        break;
      default:
        break;
    }
    if (l.is_convolution()) {
      c.mult_adds = c.params * df2;
      c.bn_params = 4 * std::int64_t{l.out_channels};
    }
    report.layers.push_back(std::move(c));
  }
  return report;
}

double millions(std::int64_t count) {
  return static_cast<double>((count + 5000) / 10000) / 100.0;
}

std::string format_millions(std::int64_t count) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", millions(count));
  return buf;
}

namespace {

bool is_bn_field(const std::string& field) {
  return field == "gamma" || field == "beta" || field == "running_mean" || field == "running_var";
}

}  // namespace

template <typename Scalar>
CostCheck verify_against_network(const CostReport& report, const ParamStore<Scalar>& params) {
  std::map<std::string, std::int64_t> actual;
  for (const auto& e : params) {
    const auto dot = e.name.find('.');
    const std::string layer = e.name.substr(0, dot);
    if (dot != std::string::npos && is_bn_field(e.name.substr(dot + 1)) && !report.count_bn) continue;
    actual[layer] += e.value.size();
  }
  for (const auto& l : report.layers) {
    const std::int64_t expected = l.params + (report.count_bn ? l.bn_params : 0);
    const auto it = actual.find(l.name);
    const std::int64_t got = it == actual.end() ? 0 : it->second;
    if (got != expected) {
      return {false, l.name + " (" + std::string(kind_name(l.kind)) + "): analytical " +
                         std::to_string(expected) + ", network " + std::to_string(got)};
    }
    if (it != actual.end()) actual.erase(it);
  }
  if (!actual.empty()) {
    return {false, actual.begin()->first + ": network has " +
                       std::to_string(actual.begin()->second) + " parameters not in the report"};
  }
  return {};
}

template CostCheck verify_against_network(const CostReport&, const ParamStore<float>&);
template CostCheck verify_against_network(const CostReport&, const ParamStore<double>&);

}  // namespace deltanet
