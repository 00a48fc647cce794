#pragma once

#include "deltanet/arch.hpp"
#include "deltanet/cifar.hpp"
#include "deltanet/network.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace deltanet {

struct TrainConfig {
  ArchSpec arch;
  DatasetName dataset = DatasetName::Cifar10;
  std::filesystem::path data_dir;
  int epochs = 10;
  int batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint;  // empty: no checkpointing
  std::optional<Index> subset_n;       // leading train examples to use
  std::optional<Index> test_subset_n;  // leading test examples to use
  int eval_fmp_passes = 1;
  double dropout = Network<float>::kDefaultDropout;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double train_acc = 0;
  double test_acc = 0;
  double secs = 0;
};

struct History {
  std::vector<EpochStats> epochs;
  double best_test_acc = -1;
  int best_epoch = 0;
};

/// `epoch=<i> loss=<f> train_acc=<f> test_acc=<f> secs=<f>`
std::string format_epoch(const EpochStats& e);

struct TrainResult {
  Network<float> network;
  History history;
};

/// Adam + dropout training without augmentation. Saves the parameters with
/// the best test accuracy to cfg.checkpoint and writes one log line per epoch.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  std::ostream* log = nullptr);

/// Loads the data named by cfg, applies the subsets, then trains.
TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr);

/// Fraction of correct predictions in eval mode. FMP networks average the
/// logits of `fmp_passes` fixed region draws.
double evaluate(Network<float>& net, const Dataset& data, int fmp_passes = 1,
                Index batch_size = 128);

/// The (train, test) pair cfg refers to, with subsets applied.
std::pair<Dataset, Dataset> load_datasets(const TrainConfig& cfg);

}  // namespace deltanet
