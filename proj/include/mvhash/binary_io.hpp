// Copyright 2026-present the mvhash project
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
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mvhash/common.hpp"

// Little-endian binary streams shared by every on-disk artifact.

namespace mvhash::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

class Writer {
 public:
  explicit Writer(const std::string& path);

  void magic(std::string_view tag) { raw(tag.data(), tag.size()); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    raw(&value, sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    raw(values.data(), values.size_bytes());
  }

  void close();

 private:
  void raw(const void* data, std::size_t bytes);

  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path);

  /// Throws unless the next bytes equal 'tag'.
  void expect_magic(std::string_view tag);

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value;
    raw(&value, sizeof(T));
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_array(std::span<T> values) {
    raw(values.data(), values.size_bytes());
  }

  std::uint64_t remaining() const { return size_ - offset_; }
  const std::string& path() const { return path_; }

 private:
  void raw(void* data, std::size_t bytes);

  std::string path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t offset_ = 0;
};

}  // namespace mvhash::io
