#pragma once

#include "deltanet/train.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace deltanet {

/// Experiment configuration as stored in a JSON file. Keys:
///   variant ("table1"|"table2"|"table3"), alpha, delta,
///   dataset ("cifar10"|"cifar100"), data_dir, classnum (must agree with
///   dataset), epochs, batch_size, lr, seed, subset_n, test_subset_n,
///   checkpoint, count_bn, eval_fmp_passes.
/// Unknown keys are rejected. A missing data_dir falls back to the
/// DELTANET_DATA_DIR environment variable.
struct RunConfig {
  TrainConfig train;
  bool count_bn = true;

  static RunConfig parse(const std::string& json_text);
  static RunConfig load(const std::filesystem::path& path);
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace deltanet
