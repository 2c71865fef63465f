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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "resdiff/nn/checkpoint.hpp"
#include "resdiff/nn/unet.hpp"

namespace resdiff::nn {
namespace {

TensorTable random_table(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 6), dim(0, 9);
  std::uniform_real_distribution<double> exponent(-300.0, 300.0);
  std::normal_distribution<double> n(0.0, 1.0);
  TensorTable t;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    Tensor x(static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng)));
    for (double& v : x.values()) v = n(rng) * std::pow(10.0, exponent(rng));
    t.add("t" + std::to_string(i) + (i % 2 ? "/nested.name" : ""), std::move(x));
  }
  return t;
}

bool bitwise_equal(const TensorTable& a, const TensorTable& b) {
  if (a.names() != b.names()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].same_shape(b[i])) return false;
    if (std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

TEST(Checkpoint, RandomTablesRoundTripBitwise) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const TensorTable t = random_table(rng);
    EXPECT_TRUE(bitwise_equal(decode_tensor_table(encode_tensor_table(t)), t));
  }
}

TEST(Checkpoint, SpecialValuesRoundTrip) {
  TensorTable t;
  t.add("x", Tensor(1, 5,
                    std::vector<double>{-0.0, std::numeric_limits<double>::denorm_min(),
                                        std::numeric_limits<double>::max(), std::numeric_limits<double>::epsilon(),
                                        1.0 / 3.0}));
  EXPECT_TRUE(bitwise_equal(decode_tensor_table(encode_tensor_table(t)), t));
}

TEST(Checkpoint, HeaderLayout) {
  TensorTable t;
  t.add("ab", Tensor(1, 1, 2.5));
  const std::string bytes = encode_tensor_table(t);
  EXPECT_EQ(bytes.substr(0, 4), "HTRD");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0u);
  // magic + version + count + (len + name + c + l + value) + crc
  EXPECT_EQ(bytes.size(), 4u + 2 + 4 + (4 + 2 + 4 + 4 + 8) + 4);
}

TEST(Checkpoint, UNetParametersRoundTripThroughFile) {
  const UNet net(UNetConfig::tiny(), 3);
  const auto path = std::filesystem::temp_directory_path() / "resdiff_checkpoint_test.htrd";
  save_tensor_table(path, net.params());
  const TensorTable back = load_tensor_table(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(bitwise_equal(back, net.params()));
  const UNet restored(UNetConfig::tiny(), back);
  EXPECT_EQ(restored.params(), net.params());
}

TEST(Checkpoint, DetectsCorruption) {
  std::mt19937_64 rng(2);
  TensorTable t;
  t.add("w", Tensor(2, 3, 0.25));
  const std::string good = encode_tensor_table(t);
  for (std::size_t i = 0; i < good.size(); ++i) {
    std::string bad = good;
    bad[i] = static_cast<char>(bad[i] ^ 0x10);
    EXPECT_THROW(decode_tensor_table(bad), Error) << "flipped byte " << i;
  }
  EXPECT_THROW(decode_tensor_table(good.substr(0, good.size() - 1)), Error);
  EXPECT_THROW(decode_tensor_table(""), Error);
  try {
    decode_tensor_table("XXXX" + good.substr(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptCheckpoint);
  }
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load_tensor_table("/nonexistent/dir/model.htrd");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}

TEST(Checkpoint, LayoutMismatchRejectedByUNet) {
  const UNet small(UNetConfig::tiny(), 1);
  EXPECT_THROW(UNet(UNetConfig{}, small.params()), Error);
}

}  // namespace
}  // namespace resdiff::nn
