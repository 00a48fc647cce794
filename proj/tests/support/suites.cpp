#include "suites.hpp"

#include "deltanet/network.hpp"
#include "deltanet/ops.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <functional>

namespace deltanet::testing {

namespace {

using T = Tensor<double>;

Index pick(Rng& rng, Index lo, Index hi) { return lo + static_cast<Index>(rng.below(hi - lo + 1)); }

/// Folds one seed's reports for an op into the running worst.
struct Accumulator {
  std::vector<OpGradResult> results;

  void add(const std::string& op, const GradReport& r) {
    auto it = std::find_if(results.begin(), results.end(),
                           [&](const OpGradResult& o) { return o.op == op; });
    if (it == results.end()) {
      results.push_back({op, 1, r});
    } else {
      ++it->seeds;
      it->worst = worst(it->worst, r);
    }
  }
};

/// L = <f(x), R>; dL/dx is backward(R).
template <typename Forward>
GradReport check_input(T& x, const T& analytic, const T& upstream, Forward&& f) {
  return check_gradient(x, analytic, [&] { return dot(f(), upstream); });
}

void conv_cases(Accumulator& acc, Rng& rng) {
  const Index n = pick(rng, 1, 2), c = pick(rng, 1, 3), co = pick(rng, 1, 3);
  const Index h = pick(rng, 3, 6), w = pick(rng, 3, 6);
  const Index k = rng.below(2) ? 3 : 1, s = pick(rng, 1, 2);
  T x = random_tensor({n, c, h, w}, rng);
  T wt = random_tensor({co, c, k, k}, rng);
  const T up = random_tensor(conv2d(x, wt, s).shape(), rng);
  const auto g = conv2d_backward(x, wt, s, up);
  auto f = [&] { return conv2d(x, wt, s); };
  acc.add("conv2d/input", check_input(x, g.input, up, f));
  acc.add("conv2d/weights", check_input(wt, g.weights, up, f));
}

void depthwise_cases(Accumulator& acc, Rng& rng, Index delta) {
  const Index n = pick(rng, 1, 2), m = pick(rng, 1, 3);
  const Index h = pick(rng, 3, 6), w = pick(rng, 3, 6), s = pick(rng, 1, 2);
  T x = random_tensor({n, m, h, w}, rng);
  T wt = random_tensor({m, delta, 3, 3}, rng);
  const T up = random_tensor(depthwise_conv2d(x, wt, s).shape(), rng);
  const auto g = depthwise_conv2d_backward(x, wt, s, up);
  auto f = [&] { return depthwise_conv2d(x, wt, s); };
  const std::string tag = "depthwise(delta=" + std::to_string(delta) + ")";
  acc.add(tag + "/input", check_input(x, g.input, up, f));
  acc.add(tag + "/weights", check_input(wt, g.weights, up, f));
}

void pointwise_cases(Accumulator& acc, Rng& rng) {
  const Index n = pick(rng, 1, 2), c = pick(rng, 1, 4), co = pick(rng, 1, 4);
  T x = random_tensor({n, c, pick(rng, 1, 4), pick(rng, 1, 4)}, rng);
  T wt = random_tensor({co, c, 1, 1}, rng);
  const T up = random_tensor(pointwise_conv2d(x, wt).shape(), rng);
  const auto g = pointwise_conv2d_backward(x, wt, up);
  auto f = [&] { return pointwise_conv2d(x, wt); };
  acc.add("pointwise/input", check_input(x, g.input, up, f));
  acc.add("pointwise/weights", check_input(wt, g.weights, up, f));
}

void pooling_cases(Accumulator& acc, Rng& rng) {
  {
    T x = distinct_tensor({pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 2, 7), pick(rng, 2, 7)}, rng);
    const auto r = maxpool_3x3_s2(x);
    const T up = random_tensor(r.output.shape(), rng);
    const T g = pool_backward(x.shape(), r.argmax, up);
    acc.add("maxpool_3x3_s2", check_input(x, g, up, [&] { return maxpool_3x3_s2(x).output; }));
  }
  for (bool overlap : {false, true}) {
    const Index in = pick(rng, 2, 9);
    const Index out = pick(rng, 1, in);
    const PoolRegions rows = fmp_regions(in, out, overlap, rng);
    const PoolRegions cols = fmp_regions(in, out, overlap, rng);
    T x = distinct_tensor({pick(rng, 1, 2), pick(rng, 1, 2), in, in}, rng);
    const auto r = fmp_pool(x, rows, cols);
    const T up = random_tensor(r.output.shape(), rng);
    const T g = pool_backward(x.shape(), r.argmax, up);
    acc.add(overlap ? "fmp_pool/overlap" : "fmp_pool/disjoint",
            check_input(x, g, up, [&] { return fmp_pool(x, rows, cols).output; }));
  }
}

void batchnorm_cases(Accumulator& acc, Rng& rng) {
  const Index n = pick(rng, 2, 3), c = pick(rng, 1, 3);
  const Shape shape{n, c, pick(rng, 2, 4), pick(rng, 2, 4)};
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    T x = random_tensor(shape, rng, -2, 2);
    T gamma = random_tensor({c}, rng, 0.5, 1.5);
    T beta = random_tensor({c}, rng);
    const T mean0 = random_tensor({c}, rng, -0.5, 0.5);
    const T var0 = random_tensor({c}, rng, 0.5, 2);
    auto run = [&] {
      T m = mean0, v = var0;
      return batchnorm(x, gamma, beta, m, v, mode);
    };
    const auto fwd = run();
    const T up = random_tensor(fwd.output.shape(), rng);
    const auto g = batchnorm_backward(fwd.cache, gamma, up);
    auto f = [&] { return run().output; };
    const std::string tag = mode == Mode::Train ? "batchnorm(train)" : "batchnorm(eval)";
    acc.add(tag + "/input", check_input(x, g.input, up, f));
    acc.add(tag + "/gamma", check_input(gamma, g.gamma, up, f));
    acc.add(tag + "/beta", check_input(beta, g.beta, up, f));
  }
}

void elementwise_cases(Accumulator& acc, Rng& rng) {
  {
    T x = away_from_zero({pick(rng, 1, 3), pick(rng, 1, 3), 3, 3}, rng);
    const T up = random_tensor(x.shape(), rng);
    acc.add("relu", check_input(x, relu_backward(x, up), up, [&] { return relu(x); }));
  }
  {
    T x = random_tensor({pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)}, rng);
    const T up = random_tensor({x.dim(0), x.dim(1), 1, 1}, rng);
    acc.add("global_avg_pool", check_input(x, global_avg_pool_backward(x.shape(), up), up,
                                           [&] { return global_avg_pool(x); }));
  }
  {
    const Index n = pick(rng, 1, 3), f = pick(rng, 1, 5), k = pick(rng, 1, 5);
    T x = random_tensor({n, f}, rng), w = random_tensor({f, k}, rng), b = random_tensor({k}, rng);
    const T up = random_tensor({n, k}, rng);
    const auto g = dense_backward(x, w, up);
    auto fwd = [&] { return dense(x, w, b); };
    acc.add("dense/input", check_input(x, g.input, up, fwd));
    acc.add("dense/weights", check_input(w, g.weights, up, fwd));
    acc.add("dense/bias", check_input(b, g.bias, up, fwd));
  }
  {
    T x = random_tensor({pick(rng, 1, 3), pick(rng, 2, 8)}, rng);
    Rng mask_rng(rng.next_u64());
    const T mask = dropout(x, 0.1, Mode::Train, mask_rng).mask;
    const T up = random_tensor(x.shape(), rng);
    acc.add("dropout", check_input(x, dropout_backward(mask, up), up,
                                   [&] { return mul(x, mask); }));
  }
  {
    const Index n = pick(rng, 1, 4), k = pick(rng, 2, 6);
    T logits = random_tensor({n, k}, rng, -3, 3);
    std::vector<int> labels;
    for (Index i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(k)));
    const auto r = softmax_xent(logits, labels);
    acc.add("softmax_xent", check_gradient(logits, r.grad_logits,
                                           [&] { return softmax_xent(logits, labels).loss; }));
  }
}

}  // namespace

std::vector<OpGradResult> gradient_suite(int seeds) {
  Accumulator acc;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(Rng::derive(0x6752ad, static_cast<std::uint64_t>(s)));
    conv_cases(acc, rng);
    for (Index delta : {1, 2, 4}) depthwise_cases(acc, rng, delta);
    pointwise_cases(acc, rng);
    pooling_cases(acc, rng);
    batchnorm_cases(acc, rng);
    elementwise_cases(acc, rng);
  }
  return acc.results;
}

std::vector<LayerSpec> two_block_layers() {
  using K = LayerKind;
  return {
      {K::Conv, 1, 3, 3, 4, 1, 0, 0},
      {K::DwConv, 1, 3, 4, 8, 2, 0, 0},
      {K::PwConv, 1, 1, 8, 6, 1, 0, 0},
      {K::MaxPool, 2, 3, 6, 6, 1, 0, 0},
      {K::DwConv, 1, 3, 6, 12, 2, 0, 0},
      {K::PwConv, 1, 1, 12, 5, 1, 0, 0},
      {K::Fmp, 1, 0, 5, 5, 1, 0, 2},
      {K::Gap, 1, 0, 5, 5, 1, 0, 0},
      {K::Dense, 1, 1, 5, 3, 1, 0, 0},
      {K::Softmax, 1, 0, 3, 3, 1, 0, 0},
  };
}

NetworkGradResult network_gradient_check(std::uint64_t seed) {
  Network<double> net(two_block_layers(), 6, seed, 0.0);
  Rng rng(Rng::derive(seed, 99));
  const T batch = random_tensor({3, 3, 6, 6}, rng);
  const std::vector<int> labels{0, 2, 1};
  // Batch statistics, no dropout, fixed pooling regions: a deterministic
  // function of the parameters.
  ForwardMode mode = ForwardMode::eval();
  mode.batchnorm = Mode::Train;

  struct Pattern {
    std::vector<bool> active;
    std::vector<Index> argmax;
    bool operator==(const Pattern&) const = default;
  };
  auto run = [&](Pattern* pattern) {
    Rng unused(0);
    ForwardCache<double> cache;
    const double loss = softmax_xent(net.forward(batch, mode, unused, &cache), labels).loss;
    if (pattern) {
      for (const auto& lc : cache.layers) {
        for (Index i = 0; i < lc.pre_activation.size(); ++i) pattern->active.push_back(lc.pre_activation[i] > 0);
        pattern->argmax.insert(pattern->argmax.end(), lc.argmax.begin(), lc.argmax.end());
      }
    }
    return loss;
  };

  Rng unused(0);
  ForwardCache<double> cache;
  const T logits = net.forward(batch, mode, unused, &cache);
  net.backward(cache, softmax_xent(logits, labels).grad_logits);
  Pattern base;
  run(&base);

  NetworkGradResult result;
  for (auto& e : net.params()) {
    if (!e.trainable) continue;
    for (Index i = 0; i < e.value.size(); ++i) {
      const double saved = e.value[i];
      Pattern up_pattern, down_pattern;
      e.value[i] = saved + kFdStep;
      const double up = run(&up_pattern);
      e.value[i] = saved - kFdStep;
      const double down = run(&down_pattern);
      e.value[i] = saved;
      if (!(up_pattern == base) || !(down_pattern == base)) {
        ++result.skipped;
        continue;
      }
      ++result.checked;
      const double numeric = (up - down) / (2 * kFdStep);
      const double err = rel_error(e.grad[i], numeric);
      if (err > result.worst.max_rel || result.worst.worst < 0) {
        result.worst = {err, i, e.grad[i], numeric};
      }
    }
  }
  return result;
}

std::vector<OracleResult> kernel_oracle_suite(int instances, std::uint64_t seed) {
  using F = Tensor<float>;
  Rng rng(seed);
  auto rf = [&](const Shape& s) { return random_tensor(s, rng).cast<float>(); };
  // Float round-off grows with the magnitude of the result, so the error is
  // scaled by max(1, |reference|).
  auto diff = [](const F& a, const F& b) -> double {
    if (a.shape() != b.shape()) return INFINITY;
    const auto ref = b.array().template cast<double>();
    return ((a.array().template cast<double>() - ref).abs() / ref.abs().max(1.0)).maxCoeff();
  };
  auto mismatches = [](const PoolResult<float>& a, const PoolResult<float>& b) -> double {
    if (a.output.shape() != b.output.shape() || a.argmax.size() != b.argmax.size()) return INFINITY;
    double bad = 0;
    for (Index i = 0; i < a.output.size(); ++i) {
      bad += a.output[i] != b.output[i] || a.argmax[static_cast<std::size_t>(i)] !=
                                               b.argmax[static_cast<std::size_t>(i)];
    }
    return bad;
  };

  std::vector<OracleResult> out{{"conv2d", 0, 0},
                                {"depthwise_conv2d(delta=1)", 0, 0},
                                {"depthwise_conv2d(delta=2)", 0, 0},
                                {"depthwise_conv2d(delta=4)", 0, 0},
                                {"pointwise_conv2d", 0, 0},
                                {"maxpool_3x3_s2", 0, 0},
                                {"fmp_pool", 0, 0}};
  auto record = [&](std::size_t i, double err) {
    ++out[i].instances;
    out[i].max_error = std::max(out[i].max_error, err);
  };

  for (int t = 0; t < instances; ++t) {
    const Index n = pick(rng, 1, 2), h = pick(rng, 1, 9), w = pick(rng, 1, 9);
    {
      const Index c = pick(rng, 1, 4), co = pick(rng, 1, 4), k = rng.below(2) ? 3 : 1;
      const Index s = pick(rng, 1, 2);
      const F x = rf({n, c, h, w}), wt = rf({co, c, k, k});
      record(0, diff(conv2d(x, wt, s), naive_conv2d(x, wt, s)));
    }
    for (std::size_t d = 0; d < 3; ++d) {
      const Index delta = Index{1} << d, m = pick(rng, 1, 4), s = pick(rng, 1, 2);
      const F x = rf({n, m, h, w}), wt = rf({m, delta, 3, 3});
      record(1 + d, diff(depthwise_conv2d(x, wt, s), naive_depthwise(x, wt, s)));
    }
    {
      const Index c = pick(rng, 1, 8), co = pick(rng, 1, 8);
      const F x = rf({n, c, h, w}), wt = rf({co, c, 1, 1});
      record(4, diff(pointwise_conv2d(x, wt), naive_pointwise(x, wt)));
    }
    {
      // Quantized values make ties common, exercising the first-max rule.
      F x = rf({n, pick(rng, 1, 3), h, w});
      for (Index i = 0; i < x.size(); ++i) x[i] = std::round(x[i] * 3);
      record(5, mismatches(maxpool_3x3_s2(x), naive_maxpool(x)));
    }
    {
      const Index in = pick(rng, 1, 12), out_extent = pick(rng, 1, in);
      const bool overlap = rng.below(2) == 1;
      const PoolRegions rows = fmp_regions(in, out_extent, overlap, rng);
      const PoolRegions cols = fmp_regions(in, out_extent, overlap, rng);
      F x = rf({n, pick(rng, 1, 3), in, in});
      for (Index i = 0; i < x.size(); ++i) x[i] = std::round(x[i] * 3);
      record(6, mismatches(fmp_pool(x, rows, cols), naive_fmp(x, rows, cols)));
    }
  }
  return out;
}

std::vector<FmpPropertyResult> fmp_property_suite(int seeds) {
  std::vector<FmpPropertyResult> results;
  for (std::size_t p = 0; p + 1 < std::size(kFmpSchedule); ++p) {
    FmpPropertyResult r{kFmpSchedule[p], kFmpSchedule[p + 1], seeds, 0, 0, 0};
    const Index in = r.extent_in, out = r.extent_out;
    const bool small_ratio = static_cast<double>(in) / static_cast<double>(out) < 2.0;
    for (int s = 0; s < seeds; ++s) {
      Rng rng(Rng::derive(0xF3A9, static_cast<std::uint64_t>(p * 100000 + s)));
      const PoolRegions d = fmp_regions(in, out, false, rng);
      const PoolRegions o = fmp_regions(in, out, true, rng);

      // Disjoint: consecutive half-open regions tiling [0, in).
      std::vector<int> hits(static_cast<std::size_t>(in), 0);
      bool bad = d.count() != out || d.bounds.front() != 0 || d.bounds.back() != in;
      for (Index i = 0; i < d.count() && !bad; ++i) {
        if (d.end(i) <= d.begin(i)) bad = true;
        for (Index j = d.begin(i); j < d.end(i) && !bad; ++j) ++hits[static_cast<std::size_t>(j)];
        if (small_ratio) {
          const Index size = d.end(i) - d.begin(i);
          r.size_failures += size != 1 && size != 2;
        }
      }
      bad = bad || std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; });
      // Overlap: every cell covered at least once, last region ends at `in`.
      std::vector<int> ohits(static_cast<std::size_t>(in), 0);
      for (Index i = 0; i < o.count(); ++i)
        for (Index j = o.begin(i); j < o.end(i); ++j) ++ohits[static_cast<std::size_t>(j)];
      bad = bad || o.count() != out || o.end(o.count() - 1) != in ||
            std::any_of(ohits.begin(), ohits.end(), [](int h) { return h == 0; });
      r.coverage_failures += bad;

      // Backward: one unit of gradient per region, landing inside it.
      for (const PoolRegions* regions : {&d, &o}) {
        const Tensor<double> x = distinct_tensor({1, 1, in, in}, rng);
        const auto pooled = fmp_pool(x, *regions, *regions);
        const Tensor<double> g =
            pool_backward(x.shape(), pooled.argmax, Tensor<double>(pooled.output.shape(), 1.0));
        bool scatter_bad = g.array().sum() != static_cast<double>(out * out);
        for (Index a = 0; a < out && !scatter_bad; ++a)
          for (Index b = 0; b < out && !scatter_bad; ++b) {
            const Index at = pooled.argmax[static_cast<std::size_t>(a * out + b)];
            const Index row = at / in, col = at % in;
            scatter_bad = row < regions->begin(a) || row >= regions->end(a) ||
                          col < regions->begin(b) || col >= regions->end(b);
          }
        if (!regions->overlap) scatter_bad = scatter_bad || g.array().maxCoeff() > 1.0;
        r.scatter_failures += scatter_bad;
      }
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace deltanet::testing
