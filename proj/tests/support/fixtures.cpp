#include "fixtures.hpp"

#include "deltanet/rng.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace deltanet::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("deltanet_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_cifar_file(DatasetName name, const fs::path& file,
                      const std::vector<CifarRecord>& records) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& r : records) {
    if (name == DatasetName::Cifar100) out.put(static_cast<char>(r.label / 5));
    out.put(static_cast<char>(r.label));
    out.write(reinterpret_cast<const char*>(r.pixels.data()),
              static_cast<std::streamsize>(r.pixels.size()));
  }
}

CifarRecord synthetic_record(int label, int classes, std::uint64_t seed) {
  Rng rng(seed);
  CifarRecord r{label, std::vector<std::uint8_t>(3072)};
  const int channel = label % 3;
  const int bands = (classes + 2) / 3;
  const int band = label / 3;
  const int lo = band * 32 / bands, hi = (band + 1) * 32 / bands;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        double v = 40 + 60 * rng.uniform();
        if (c == channel && y >= lo && y < std::max(hi, lo + 1)) v += 140;
        r.pixels[static_cast<std::size_t>((c * 32 + y) * 32 + x)] =
            static_cast<std::uint8_t>(std::min(255.0, v));
      }
    }
  }
  return r;
}

void write_synthetic_cifar(DatasetName name, const fs::path& dir, int train_n, int test_n,
                           std::uint64_t seed) {
  fs::create_directories(dir);
  const int classes = dataset_classes(name);
  auto make = [&](int begin, int end, std::uint64_t salt) {
    std::vector<CifarRecord> out;
    for (int i = begin; i < end; ++i) {
      out.push_back(synthetic_record(i % classes, classes, Rng::derive(seed + salt, static_cast<std::uint64_t>(i))));
    }
    return out;
  };
  if (name == DatasetName::Cifar10) {
    for (int b = 0; b < 5; ++b) {
      write_cifar_file(name, dir / ("data_batch_" + std::to_string(b + 1) + ".bin"),
                       make(train_n * b / 5, train_n * (b + 1) / 5, 0));
    }
    write_cifar_file(name, dir / "test_batch.bin", make(0, test_n, 1000003));
  } else {
    write_cifar_file(name, dir / "train.bin", make(0, train_n, 0));
    write_cifar_file(name, dir / "test.bin", make(0, test_n, 1000003));
  }
}

namespace {

int fixture_channels(int c, double alpha) {
  return std::max(1, static_cast<int>(std::floor(alpha * c + 0.5)));
}

std::string substitute(const std::string& row, double alpha, int delta, int classnum) {
  static const std::regex token(R"(\{(\d+)(a|ad)\}|\{K\})");
  std::string out;
  auto it = std::sregex_iterator(row.begin(), row.end(), token);
  std::size_t last = 0;
  for (; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out += row.substr(last, static_cast<std::size_t>(m.position()) - last);
    if (m.str() == "{K}") {
      out += std::to_string(classnum);
    } else {
      int c = fixture_channels(std::stoi(m[1].str()), alpha);
      if (m[2].str() == "ad") c *= delta;
      out += std::to_string(c);
    }
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  return out + row.substr(last);
}

}  // namespace

std::vector<std::string> expand_table_fixture(const fs::path& file, double alpha, int delta,
                                              int classnum) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing fixture " + file.string());
  std::vector<std::string> rows;
  std::vector<std::string> group;
  int repeat = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("repeat ", 0) == 0) {
      repeat = std::stoi(line.substr(7));
      group.clear();
    } else if (line == "end") {
      for (int i = 0; i < repeat; ++i) rows.insert(rows.end(), group.begin(), group.end());
      repeat = 0;
    } else if (repeat > 0) {
      group.push_back(substitute(line, alpha, delta, classnum));
    } else {
      rows.push_back(substitute(line, alpha, delta, classnum));
    }
  }
  return rows;
}

fs::path fixture_path(const std::string& name) { return fs::path(DELTANET_FIXTURE_DIR) / name; }

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& file) {
  const std::string s = read_text(file);
  return {s.begin(), s.end()};
}

}  // namespace deltanet::testing
