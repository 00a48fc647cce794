#include "deltanet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <type_traits>

namespace deltanet {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'N', 'C'};
constexpr std::uint8_t kF32 = 0;
constexpr std::uint8_t kF64 = 1;

template <typename Scalar>
constexpr std::uint8_t dtype_tag() {
  return std::is_same_v<Scalar, float> ? kF32 : kF64;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { le(v); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename Scalar>
  void scalar(Scalar v) {
    if constexpr (std::is_same_v<Scalar, float>) {
      le(std::bit_cast<std::uint32_t>(v));
    } else {
      le(std::bit_cast<std::uint64_t>(v));
    }
  }
  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrc::Truncated,
                            "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename Scalar>
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<Scalar>& params) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u8(e.trainable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (Index d : e.value.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.u8(dtype_tag<Scalar>());
    for (Scalar v : e.value.values()) w.scalar(v);
  }
  return std::move(w).take();
}

template <typename Scalar>
ParamStore<Scalar> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.string(4) != std::string(kMagic, 4)) {
    throw CheckpointError(CheckpointErrc::BadMagic, "not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrc::VersionMismatch,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  ParamStore<Scalar> params;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.string(r.u32());
    const std::uint8_t trainable = r.u8();
    if (trainable > 1) throw CheckpointError(CheckpointErrc::Malformed, "bad trainable flag in " + name);
    Shape shape(r.u32());
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) throw CheckpointError(CheckpointErrc::Malformed, "zero dimension in " + name);
    }
    if (shape.empty()) throw CheckpointError(CheckpointErrc::Malformed, "rank-0 tensor " + name);
    const std::uint8_t dtype = r.u8();
    if (dtype != kF32 && dtype != kF64) {
      throw CheckpointError(CheckpointErrc::BadDtype,
                            "unknown dtype tag " + std::to_string(dtype) + " in " + name);
    }
    const Index n = num_elements(shape);
    r.need(static_cast<std::size_t>(n) * (dtype == kF32 ? 4 : 8));
    Tensor<Scalar> value(shape);
    for (auto& v : value.values()) {
      v = dtype == kF32 ? static_cast<Scalar>(std::bit_cast<float>(r.u32()))
                        : static_cast<Scalar>(std::bit_cast<double>(r.u64()));
    }
    if (params.contains(name)) {
      throw CheckpointError(CheckpointErrc::Malformed, "duplicate entry " + name);
    }
    params.add(std::move(name), std::move(value), trainable == 1);
  }
  if (!r.done()) throw CheckpointError(CheckpointErrc::Malformed, "trailing bytes after last entry");
  return params;
}

template <typename Scalar>
void save_checkpoint(const ParamStore<Scalar>& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrc::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrc::Io, "write failed for " + path.string());
}

template <typename Scalar>
ParamStore<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrc::Io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint<Scalar>(bytes);
}

template std::vector<std::uint8_t> encode_checkpoint(const ParamStore<float>&);
template std::vector<std::uint8_t> encode_checkpoint(const ParamStore<double>&);
template ParamStore<float> decode_checkpoint(const std::vector<std::uint8_t>&);
template ParamStore<double> decode_checkpoint(const std::vector<std::uint8_t>&);
template void save_checkpoint(const ParamStore<float>&, const std::filesystem::path&);
template void save_checkpoint(const ParamStore<double>&, const std::filesystem::path&);
template ParamStore<float> load_checkpoint(const std::filesystem::path&);
template ParamStore<double> load_checkpoint(const std::filesystem::path&);

}  // namespace deltanet
