// Copyright 2026 The resdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary tensor-table file:
//
//   "HTRD" | u16 version | u32 count |
//   count x (u32 name_len | name | u32 channels | u32 length | f64[] values) |
//   u32 crc32 of every preceding byte
//
// All integers and floats little-endian.

#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/nn/tensor.hpp"

namespace resdiff::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

inline constexpr char kCheckpointMagic[4] = {'H', 'T', 'R', 'D'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(Errc::CorruptCheckpoint, "unexpected end of checkpoint data");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::string encode_tensor_table(const TensorTable& table) {
  std::string out(kCheckpointMagic, 4);
  detail::put<std::uint16_t>(out, kCheckpointVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& name = table.name(i);
    const Tensor& t = table[i];
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.channels()));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.length()));
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
  }
  detail::put<std::uint32_t>(out, detail::crc32_of(out));
  return out;
}

inline TensorTable decode_tensor_table(std::string_view data) {
  if (data.size() < 4 + 2 + 4 + 4 || std::memcmp(data.data(), kCheckpointMagic, 4) != 0) {
    throw Error(Errc::CorruptCheckpoint, "missing HTRD magic");
  }
  const std::string_view body = data.substr(0, data.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, data.data() + body.size(), 4);
  if (stored != detail::crc32_of(body)) throw Error(Errc::CorruptCheckpoint, "CRC32 mismatch");

  detail::Reader r(body.substr(4));
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw Error(Errc::CorruptCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  TensorTable table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.bytes(name_len));
    const auto channels = r.get<std::uint32_t>();
    const auto length = r.get<std::uint32_t>();
    const std::size_t n = static_cast<std::size_t>(channels) * length;
    if (n > r.remaining() / sizeof(double)) throw Error(Errc::CorruptCheckpoint, "tensor " + name + " truncated");
    std::vector<double> values(n);
    const auto raw = r.bytes(n * sizeof(double));
    std::memcpy(values.data(), raw.data(), raw.size());
    table.add(std::move(name), Tensor(channels, length, std::move(values)));
  }
  if (r.remaining() != 0) throw Error(Errc::CorruptCheckpoint, "trailing bytes after tensor table");
  return table;
}

inline void save_tensor_table(const std::filesystem::path& path, const TensorTable& table) {
  const std::string bytes = encode_tensor_table(table);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Errc::Io, "write failed for " + path.string());
}

inline TensorTable load_tensor_table(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensor_table(bytes);
}

}  // namespace resdiff::nn
