#pragma once

#include "deltanet/rng.hpp"
#include "deltanet/tensor.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deltanet {

// CIFAR binary version. Records have no header:
//   CIFAR-10  : 1 label byte + 3072 pixel bytes             (3073 bytes)
//   CIFAR-100 : 1 coarse byte + 1 fine byte + 3072 pixels   (3074 bytes)
// Pixels are channel-major: R[32x32], G[32x32], B[32x32].
//
// Expected files (in `dir` or the archive's own subdirectory):
//   cifar-10-batches-bin/data_batch_{1..5}.bin, test_batch.bin
//   cifar-100-binary/train.bin, test.bin

enum class DatasetName { Cifar10, Cifar100 };
enum class Split { Train, Test };

std::string_view dataset_name(DatasetName d);  // "cifar10" | "cifar100"
DatasetName parse_dataset(std::string_view name);
int dataset_classes(DatasetName d);

enum class DataErrc { NotFound, Corrupt };

class DataError : public std::runtime_error {
 public:
  DataError(DataErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  DataErrc code() const { return code_; }

 private:
  DataErrc code_;
};

inline constexpr Index kCifarExtent = 32;
inline constexpr Index kCifarChannels = 3;
inline constexpr Index kCifarPixels = kCifarExtent * kCifarExtent * kCifarChannels;

struct Dataset {
  DatasetName name = DatasetName::Cifar10;
  Split split = Split::Train;
  Tensor<float> images;  // [N,3,32,32], /255 then train-mean subtracted
  std::vector<int> labels;
  std::array<double, 3> channel_mean{};  // train-split mean that was subtracted

  Index size() const { return static_cast<Index>(labels.size()); }
  int classes() const { return dataset_classes(name); }
  /// First n examples.
  Dataset head(Index n) const;
};

std::vector<std::filesystem::path> cifar_files(DatasetName name, const std::filesystem::path& dir,
                                               Split split);

/// Raw decode of one binary batch file: pixels scaled to [0,1], no centering.
Dataset read_cifar_file(DatasetName name, const std::filesystem::path& file);

/// Load a split and subtract the per-channel mean of the train split.
Dataset load_cifar(DatasetName name, const std::filesystem::path& dir, Split split);

struct Batch {
  Tensor<float> images;
  std::vector<int> labels;
};

/// Batches over a dataset in fixed or Fisher-Yates shuffled order; the last
/// batch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, Index batch_size, bool shuffle, Rng& rng);

  std::optional<Batch> next();
  const std::vector<Index>& order() const { return order_; }
  Index batches() const { return (static_cast<Index>(order_.size()) + batch_size_ - 1) / batch_size_; }

 private:
  const Dataset& data_;
  Index batch_size_;
  std::vector<Index> order_;
  std::size_t cursor_ = 0;
};

}  // namespace deltanet
