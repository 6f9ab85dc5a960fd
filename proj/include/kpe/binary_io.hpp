// Copyright 2026 The kpegraph Authors.
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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "kpe/error.hpp"

namespace kpe::io {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic)
    throw LoadError(std::string(what) + ": bad magic, expected '" + std::string(magic) + "'");
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = byteswap_if_big(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in, std::string_view what) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw LoadError(std::string(what) + ": truncated file");
  return byteswap_if_big(v);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  write_u32(out, bits);
}

inline float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(read_u32(in, what));
}

// Row-major float32 dump of any dense Eigen expression.
template <typename Derived>
void write_matrix_f32(std::ostream& out, const Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(out, static_cast<float>(m(r, c)));
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> read_matrix_f32(std::istream& in, Eigen::Index rows,
                                                                       Eigen::Index cols,
                                                                       std::string_view what) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(read_f32(in, what));
  return m;
}

}  // namespace kpe::io
