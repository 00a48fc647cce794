#include "deltanet/cifar.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

namespace deltanet {

namespace fs = std::filesystem;

std::string_view dataset_name(DatasetName d) {
  return d == DatasetName::Cifar10 ? "cifar10" : "cifar100";
}

DatasetName parse_dataset(std::string_view name) {
  if (name == "cifar10") return DatasetName::Cifar10;
  if (name == "cifar100") return DatasetName::Cifar100;
  throw std::invalid_argument("unknown dataset \"" + std::string(name) +
                              "\" (expected cifar10 or cifar100)");
}

int dataset_classes(DatasetName d) { return d == DatasetName::Cifar10 ? 10 : 100; }

namespace {

Index record_bytes(DatasetName name) {
  return (name == DatasetName::Cifar10 ? 1 : 2) + kCifarPixels;
}

fs::path locate(const fs::path& dir, const char* subdir, const std::string& file) {
  for (const fs::path& candidate : {dir / file, dir / subdir / file}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  throw DataError(DataErrc::NotFound, "CIFAR file " + file + " not found in " + dir.string());
}

std::array<double, 3> compute_channel_mean(const Tensor<float>& images) {
  std::array<double, 3> mean{};
  const Index n = images.dim(0), plane = kCifarExtent * kCifarExtent;
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < kCifarChannels; ++c) {
      mean[static_cast<std::size_t>(c)] +=
          images.array().segment(images.offset(i, c, 0, 0), plane).cast<double>().sum();
    }
  }
  for (auto& m : mean) m /= static_cast<double>(n * plane);
  return mean;
}

void subtract_mean(Dataset& d, const std::array<double, 3>& mean) {
  const Index plane = kCifarExtent * kCifarExtent;
  for (Index i = 0; i < d.size(); ++i) {
    for (Index c = 0; c < kCifarChannels; ++c) {
      d.images.array().segment(d.images.offset(i, c, 0, 0), plane) -=
          static_cast<float>(mean[static_cast<std::size_t>(c)]);
    }
  }
  d.channel_mean = mean;
}

Dataset read_files(DatasetName name, const std::vector<fs::path>& files, Split split) {
  std::vector<Dataset> parts;
  Index total = 0;
  for (const auto& f : files) {
    parts.push_back(read_cifar_file(name, f));
    total += parts.back().size();
  }
  Dataset out;
  out.name = name;
  out.split = split;
  out.images = Tensor<float>({std::max<Index>(total, 1), kCifarChannels, kCifarExtent, kCifarExtent});
  Index at = 0;
  for (auto& p : parts) {
    out.images.array().segment(at, p.images.size()) = p.images.array();
    at += p.images.size();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  if (total == 0) throw DataError(DataErrc::Corrupt, "CIFAR split contains no records");
  return out;
}

}  // namespace

Dataset Dataset::head(Index n) const {
  if (n < 1 || n > size()) {
    throw std::invalid_argument("subset size " + std::to_string(n) + " outside [1, " +
                                std::to_string(size()) + "]");
  }
  Dataset out;
  out.name = name;
  out.split = split;
  out.channel_mean = channel_mean;
  out.images = Tensor<float>({n, kCifarChannels, kCifarExtent, kCifarExtent},
                             images.array().head(n * kCifarPixels));
  out.labels.assign(labels.begin(), labels.begin() + n);
  return out;
}

std::vector<fs::path> cifar_files(DatasetName name, const fs::path& dir, Split split) {
  std::vector<fs::path> files;
  if (name == DatasetName::Cifar10) {
    const char* sub = "cifar-10-batches-bin";
    if (split == Split::Train) {
      for (int i = 1; i <= 5; ++i) {
        files.push_back(locate(dir, sub, "data_batch_" + std::to_string(i) + ".bin"));
      }
    } else {
      files.push_back(locate(dir, sub, "test_batch.bin"));
    }
  } else {
    files.push_back(locate(dir, "cifar-100-binary", split == Split::Train ? "train.bin" : "test.bin"));
  }
  return files;
}

Dataset read_cifar_file(DatasetName name, const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError(DataErrc::NotFound, "cannot open " + file.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const Index record = record_bytes(name);
  const auto size = static_cast<Index>(bytes.size());
  if (size == 0 || size % record != 0) {
    throw DataError(DataErrc::Corrupt, file.string() + ": size " + std::to_string(size) +
                                           " is not a positive multiple of the " +
                                           std::to_string(record) + "-byte record");
  }
  const Index n = size / record;
  const Index label_offset = name == DatasetName::Cifar10 ? 0 : 1;  // CIFAR-100: fine label
  const int classes = dataset_classes(name);

  Dataset d;
  d.name = name;
  d.images = Tensor<float>({n, kCifarChannels, kCifarExtent, kCifarExtent});
  d.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * record;
    const int label = rec[label_offset];
    if (label >= classes) {
      throw DataError(DataErrc::Corrupt, file.string() + ": record " + std::to_string(i) +
                                             " has label " + std::to_string(label));
    }
    d.labels[static_cast<std::size_t>(i)] = label;
    const unsigned char* px = rec + record - kCifarPixels;
    float* dst = d.images.data() + i * kCifarPixels;
    for (Index p = 0; p < kCifarPixels; ++p) dst[p] = static_cast<float>(px[p]) / 255.0f;
  }
  return d;
}

Dataset load_cifar(DatasetName name, const fs::path& dir, Split split) {
  Dataset train = read_files(name, cifar_files(name, dir, Split::Train), Split::Train);
  const auto mean = compute_channel_mean(train.images);
  if (split == Split::Train) {
    subtract_mean(train, mean);
    return train;
  }
  Dataset test = read_files(name, cifar_files(name, dir, Split::Test), Split::Test);
  subtract_mean(test, mean);
  return test;
}

BatchIterator::BatchIterator(const Dataset& data, Index batch_size, bool shuffle, Rng& rng)
    : data_(data), batch_size_(batch_size), order_(static_cast<std::size_t>(data.size())) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), Index{0});
  if (shuffle) {
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.below(i)]);
    }
  }
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const Index n = std::min<Index>(batch_size_, static_cast<Index>(order_.size() - cursor_));
  Batch b{Tensor<float>({n, kCifarChannels, kCifarExtent, kCifarExtent}), {}};
  b.labels.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index src = order_[cursor_ + static_cast<std::size_t>(i)];
    b.images.array().segment(i * kCifarPixels, kCifarPixels) =
        data_.images.array().segment(src * kCifarPixels, kCifarPixels);
    b.labels.push_back(data_.labels[static_cast<std::size_t>(src)]);
  }
  cursor_ += static_cast<std::size_t>(n);
  return b;
}

}  // namespace deltanet
