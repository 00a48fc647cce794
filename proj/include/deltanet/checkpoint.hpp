#pragma once

#include "deltanet/param_store.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltanet {

// Checkpoint layout, all integers little-endian:
//   "DMNC"  u32 version (=1)  u32 entry_count
//   per entry:
//     u32 name_len, name bytes (UTF-8), u8 trainable,
//     u32 rank, u32 dims[rank], u8 dtype (0 = f32, 1 = f64), payload
// Only parameter values are stored; gradients and Adam moments are not.

enum class CheckpointErrc { Io, BadMagic, VersionMismatch, Truncated, BadDtype, Malformed };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  CheckpointErrc code() const { return code_; }

 private:
  CheckpointErrc code_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<Scalar>& params);

template <typename Scalar>
ParamStore<Scalar> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename Scalar>
void save_checkpoint(const ParamStore<Scalar>& params, const std::filesystem::path& path);

template <typename Scalar>
ParamStore<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace deltanet
