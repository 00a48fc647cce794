#include "deltanet/arch.hpp"

#include <cmath>
#include <stdexcept>

namespace deltanet {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "table1";
    case Variant::MaxPool3: return "table2";
    case Variant::Fmp: return "table3";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "table1") return Variant::Baseline;
  if (name == "table2") return Variant::MaxPool3;
  if (name == "table3") return Variant::Fmp;
  throw std::invalid_argument("unknown variant \"" + std::string(name) +
                              "\" (expected table1, table2 or table3)");
}

void ArchSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must be in (0, 1], got " + std::to_string(alpha));
  }
  if (delta < 1) throw std::invalid_argument("delta must be >= 1, got " + std::to_string(delta));
  if (classnum < 1) throw std::invalid_argument("classnum must be >= 1");
  if (input_extent < 1 || input_channels < 1) throw std::invalid_argument("input must be non-empty");
  if (variant == Variant::Fmp && input_extent != kFmpSchedule[0]) {
    throw std::invalid_argument("the FMP variant is defined for 32x32 input only");
  }
}

std::string_view kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::DwConv: return "dwconv";
    case LayerKind::PwConv: return "pwconv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Fmp: return "fmp";
    case LayerKind::Gap: return "gap";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

int scale_channels(int c, double alpha) {
  if (c < 1) throw std::invalid_argument("scale_channels: channel count must be >= 1");
  return std::max(1, static_cast<int>(std::floor(alpha * c + 0.5)));
}

namespace {

struct Block {
  int in, out, stride;
};

// Depthwise separable blocks shared by all three layouts (strides as in the
// plain network; the pooled layouts move the downsampling into pool layers).
constexpr Block kBlocks[] = {
    {32, 64, 1},   {64, 128, 2},  {128, 128, 1}, {128, 256, 2}, {256, 256, 1},
    {256, 512, 2}, {512, 512, 1}, {512, 512, 1}, {512, 512, 1}, {512, 512, 1},
    {512, 512, 1}, {512, 1024, 2}, {1024, 1024, 1}};

// Index of the block each FMP stage precedes; the first stage follows the stem.
constexpr int kFmpBeforeBlock[] = {0, 2, 4, 6, 8, 10, 12};

class Builder {
 public:
  explicit Builder(const ArchSpec& spec) : spec_(spec), channels_(spec.input_channels) {}

  void conv(int out, int stride) {
    push({LayerKind::Conv, stride, 3, channels_, out, 1, 0, 0});
  }
  void separable(int in, int out, int stride) {
    const int m = scale_channels(in, spec_.alpha);
    push({LayerKind::DwConv, stride, 3, m, m * spec_.delta, spec_.delta, 0, 0});
    push({LayerKind::PwConv, 1, 1, m * spec_.delta, scale_channels(out, spec_.alpha), 1, 0, 0});
  }
  void maxpool() { push({LayerKind::MaxPool, 2, 3, channels_, channels_, 1, 0, 0}); }
  void fmp(int out_extent) {
    push({LayerKind::Fmp, 1, 0, channels_, channels_, 1, 0, out_extent});
  }
  void head() {
    push({LayerKind::Gap, 1, 0, channels_, channels_, 1, 0, 0});
    push({LayerKind::Dense, 1, 1, channels_, spec_.classnum, 1, 0, 0});
    push({LayerKind::Softmax, 1, 0, channels_, channels_, 1, 0, 0});
  }

  std::vector<LayerSpec> take() && { return std::move(layers_); }

 private:
  void push(LayerSpec layer) {
    if (layer.in_channels != channels_) {
      throw std::logic_error("builder: channel chain broken at layer " +
                             std::to_string(layers_.size()));
    }
    channels_ = layer.out_channels;
    layers_.push_back(layer);
  }

  const ArchSpec& spec_;
  int channels_;
  std::vector<LayerSpec> layers_;
};

}  // namespace

std::vector<LayerSpec> build(const ArchSpec& spec) {
  spec.validate();
  Builder b(spec);
  const int stem = scale_channels(32, spec.alpha);
  switch (spec.variant) {
    case Variant::Baseline:
      b.conv(stem, 2);
      for (const Block& blk : kBlocks) b.separable(blk.in, blk.out, blk.stride);
      break;
    case Variant::MaxPool3:
      b.conv(stem, 1);
      b.maxpool();
      for (const Block& blk : kBlocks) {
        if (blk.stride == 2) b.maxpool();
        b.separable(blk.in, blk.out, 1);
      }
      break;
    case Variant::Fmp: {
      b.conv(stem, 1);
      int stage = 0;
      for (int i = 0; i < static_cast<int>(std::size(kBlocks)); ++i) {
        if (stage < static_cast<int>(std::size(kFmpBeforeBlock)) && kFmpBeforeBlock[stage] == i) {
          b.fmp(kFmpSchedule[++stage]);
        }
        b.separable(kBlocks[i].in, kBlocks[i].out, 1);
      }
      break;
    }
  }
  b.head();
  return infer_shapes(std::move(b).take(), spec.input_extent);
}

std::vector<LayerSpec> infer_shapes(std::vector<LayerSpec> layers, int input_extent) {
  int extent = input_extent;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& l = layers[i];
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("layer " + std::to_string(i) + " (" +
                                  std::string(kind_name(l.kind)) + "): " + why);
    };
    if (i > 0 && l.in_channels != layers[i - 1].out_channels) {
      fail("expects " + std::to_string(l.in_channels) + " input channels, previous layer produces " +
           std::to_string(layers[i - 1].out_channels));
    }
    if (l.in_channels < 1 || l.out_channels < 1) fail("channel counts must be >= 1");
    l.in_extent = extent;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::DwConv:
        if (l.stride != 1 && l.stride != 2) fail("stride must be 1 or 2");
        if (l.kind == LayerKind::DwConv && l.out_channels != l.in_channels * l.multiplier) {
          fail("depthwise output channels must equal input channels times the depth multiplier");
        }
        l.out_extent = (extent + l.stride - 1) / l.stride;
        break;
      case LayerKind::PwConv:
        l.out_extent = extent;
        break;
      case LayerKind::MaxPool:
        l.out_extent = (extent + 1) / 2;
        break;
      case LayerKind::Fmp:
        if (l.out_extent < 1 || l.out_extent > extent) {
          fail("pooled extent " + std::to_string(l.out_extent) + " not in [1, " +
               std::to_string(extent) + "]");
        }
        break;
      case LayerKind::Gap:
        l.out_extent = 1;
        break;
      case LayerKind::Dense:
        if (extent != 1) fail("dense layer needs 1x1 input, got " + std::to_string(extent));
        l.out_extent = 1;
        break;
      case LayerKind::Softmax:
        l.out_extent = extent;
        break;
    }
    if ((l.kind == LayerKind::MaxPool || l.kind == LayerKind::Fmp || l.kind == LayerKind::Gap ||
         l.kind == LayerKind::Softmax) &&
        l.out_channels != l.in_channels) {
      fail("channel count must pass through unchanged");
    }
    extent = l.out_extent;
  }
  return layers;
}

std::string type_label(const LayerSpec& l) {
  const std::string s = " / s" + std::to_string(l.stride);
  switch (l.kind) {
    case LayerKind::Conv: return "Conv" + s;
    case LayerKind::DwConv: return "Conv dw" + s;
    case LayerKind::PwConv: return "Conv" + s;
    case LayerKind::MaxPool: return "Maxpool / s2";
    case LayerKind::Fmp: return "FMP / s1.4";
    case LayerKind::Gap: return "Avg Pool / s1";
    case LayerKind::Dense: return "FC / s1";
    case LayerKind::Softmax: return "Softmax / s1";
  }
  return "?";
}

std::string filter_label(const LayerSpec& l) {
  const std::string k = std::to_string(l.kernel) + "x" + std::to_string(l.kernel) + "x";
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::PwConv:
    case LayerKind::Dense:
      return k + std::to_string(l.in_channels) + "x" + std::to_string(l.out_channels);
    case LayerKind::DwConv: return k + std::to_string(l.out_channels);
    case LayerKind::MaxPool: return "Max pooling kernel 3x3 stride2";
    case LayerKind::Fmp: return "Fractional Max Pooling s1.4";
    case LayerKind::Gap: return "Global average pooling";
    case LayerKind::Softmax: return "Classifier";
  }
  return "?";
}

std::string input_label(const LayerSpec& l) {
  const std::string e = std::to_string(l.in_extent);
  return e + "x" + e + "x" + std::to_string(l.in_channels);
}

}  // namespace deltanet
