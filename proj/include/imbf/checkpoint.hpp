#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "imbf/error.hpp"
#include "imbf/model.hpp"

namespace imbf {

// Checkpoint layout (all integers little-endian):
//   magic "IMBF", format version u32, then per group:
//   name length u32, UTF-8 name, rows u32, cols u32, trainable u8,
//   row-major f32 weights, then f32 biases.
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<uint32_t>(v));
}

class ByteReader {
 public:
  ByteReader(const char* data, size_t size) : data_(data), size_(size) {}

  bool done() const { return pos_ == size_; }

  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    }
    pos_ += 4;
    return v;
  }

  uint8_t u8() {
    require(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string bytes(size_t n) {
    require(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void require(size_t n) {
    if (pos_ + n > size_) {
      throw data_error(ErrorCode::CorruptCheckpoint, "checkpoint: truncated payload");
    }
  }

  const char* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace detail

inline std::string save_checkpoint(const ParamSet<float>& params) {
  std::string out;
  out += "IMBF";
  detail::put_u32(out, kCheckpointVersion);
  for (const auto& g : params.groups) {
    detail::put_u32(out, static_cast<uint32_t>(g.name.size()));
    out += g.name;
    detail::put_u32(out, static_cast<uint32_t>(g.weight.rows()));
    detail::put_u32(out, static_cast<uint32_t>(g.weight.cols()));
    out.push_back(g.trainable ? '\x01' : '\x00');
    for (size_t i = 0; i < g.weight.size(); ++i) detail::put_f32(out, g.weight.data()[i]);
    for (float b : g.bias) detail::put_f32(out, b);
  }
  return out;
}

inline ParamSet<float> load_checkpoint(const std::string& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  if (r.bytes(4) != "IMBF") {
    throw data_error(ErrorCode::CorruptCheckpoint, "checkpoint: bad magic");
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw data_error(ErrorCode::VersionMismatch,
                     "checkpoint: unsupported format version " + std::to_string(version));
  }
  ParamSet<float> params;
  while (!r.done()) {
    ParamGroup<float> g;
    g.name = r.bytes(r.u32());
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    g.trainable = r.u8() != 0;
    g.weight = Matrix<float>(rows, cols);
    for (size_t i = 0; i < g.weight.size(); ++i) g.weight.data()[i] = r.f32();
    g.bias.resize(cols);
    for (size_t i = 0; i < cols; ++i) g.bias[i] = r.f32();
    params.groups.push_back(std::move(g));
  }
  if (params.groups.empty()) {
    throw data_error(ErrorCode::CorruptCheckpoint, "checkpoint: no parameter groups");
  }
  for (size_t g = 0; g + 1 < params.groups.size(); ++g) {
    if (params.groups[g].weight.cols() != params.groups[g + 1].weight.rows()) {
      throw data_error(ErrorCode::CorruptCheckpoint, "checkpoint: layer shapes do not chain");
    }
  }
  return params;
}

inline void save_checkpoint_file(const ParamSet<float>& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(ErrorCode::IoFailure, "cannot write checkpoint: " + path.string());
  const std::string bytes = save_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error(ErrorCode::IoFailure, "checkpoint write failed: " + path.string());
}

inline ParamSet<float> load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(ErrorCode::MissingFile, "cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace imbf
