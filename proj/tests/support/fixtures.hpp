#pragma once

#include "deltanet/cifar.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deltanet::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// One CIFAR record: label byte(s) followed by 3072 channel-major pixels.
struct CifarRecord {
  int label = 0;
  std::vector<std::uint8_t> pixels;  // 3072 bytes
};

void write_cifar_file(DatasetName name, const std::filesystem::path& file,
                      const std::vector<CifarRecord>& records);

/// A record whose pixels make the label easy to recover: one colour channel
/// lit in a label-dependent band, on top of seeded noise.
CifarRecord synthetic_record(int label, int classes, std::uint64_t seed);

/// Writes a complete synthetic copy of the dataset's files into `dir`
/// (flat layout): `train_n` training records split over the batch files and
/// `test_n` test records, labels cycling through the classes.
void write_synthetic_cifar(DatasetName name, const std::filesystem::path& dir, int train_n,
                           int test_n, std::uint64_t seed = 7);

/// Rows of a symbolic architecture table fixture with {Na}, {Nad} and {K}
/// substituted and "repeat n ... end" groups expanded.
std::vector<std::string> expand_table_fixture(const std::filesystem::path& file, double alpha,
                                              int delta, int classnum);

std::filesystem::path fixture_path(const std::string& name);

std::string read_text(const std::filesystem::path& file);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& file);

}  // namespace deltanet::testing
