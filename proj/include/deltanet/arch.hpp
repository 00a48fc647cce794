#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace deltanet {

/// The three network layouts: plain strided MobileNet, 3x3/s2 max pooling in
/// place of the strided depthwise convolutions, and fractional max pooling.
enum class Variant { Baseline, MaxPool3, Fmp };

std::string_view variant_name(Variant v);  // "table1" | "table2" | "table3"
Variant parse_variant(std::string_view name);

struct ArchSpec {
  Variant variant = Variant::Baseline;
  double alpha = 1.0;  // width multiplier, (0, 1]
  int delta = 1;       // depth multiplier, >= 1
  int classnum = 10;
  int input_extent = 32;
  int input_channels = 3;

  void validate() const;
};

enum class LayerKind { Conv, DwConv, PwConv, MaxPool, Fmp, Gap, Dense, Softmax };

std::string_view kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int stride = 1;
  int kernel = 1;
  int in_channels = 0;
  int out_channels = 0;
  /// Depth multiplier of a depthwise layer (out_channels = in_channels * multiplier).
  int multiplier = 1;
  int in_extent = 0;
  /// For FMP layers build() fixes the target extent; infer_shapes fills the rest.
  int out_extent = 0;

  bool has_weights() const {
    return kind == LayerKind::Conv || kind == LayerKind::DwConv || kind == LayerKind::PwConv ||
           kind == LayerKind::Dense;
  }
  bool is_convolution() const {
    return kind == LayerKind::Conv || kind == LayerKind::DwConv || kind == LayerKind::PwConv;
  }
};

/// max(1, round_half_up(alpha * c)).
int scale_channels(int c, double alpha);

/// Spatial schedule of the fractional-max-pooling network, one entry per
/// pooling stage input plus the final extent.
inline constexpr int kFmpSchedule[] = {32, 22, 15, 10, 6, 4, 2, 1};

/// Layer list for `spec`, shape-annotated.
std::vector<LayerSpec> build(const ArchSpec& spec);

/// Propagate spatial extents from `input_extent` and check channel
/// agreement. Throws std::invalid_argument naming the offending layer.
std::vector<LayerSpec> infer_shapes(std::vector<LayerSpec> layers, int input_extent);

/// "Conv / s2", "Conv dw / s1", "Maxpool / s2", "FMP / s1.4", ...
std::string type_label(const LayerSpec& layer);
/// "3x3x3x32", "3x3x64", "Max pooling kernel 3x3 stride2", ...
std::string filter_label(const LayerSpec& layer);
/// Input size as HxWxC.
std::string input_label(const LayerSpec& layer);

}  // namespace deltanet
