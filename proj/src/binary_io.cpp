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

#include "mvhash/binary_io.hpp"

#include <filesystem>

namespace mvhash::io {

Writer::Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
}

void Writer::raw(const void* data, std::size_t bytes) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out_) throw Error("write failed on '" + path_ + "'");
}

void Writer::close() {
  out_.close();
  if (!out_) throw Error("closing '" + path_ + "' failed");
}

Reader::Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot open '" + path + "' for reading");
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat '" + path + "'");
}

void Reader::expect_magic(std::string_view tag) {
  std::string got(tag.size(), '\0');
  raw(got.data(), got.size());
  if (got != tag) {
    throw Error("'" + path_ + "': bad magic, expected '" + std::string(tag) + "'");
  }
}

void Reader::raw(void* data, std::size_t bytes) {
  if (bytes > remaining()) {
    throw Error("'" + path_ + "': truncated (need " + std::to_string(bytes) + " bytes at offset " +
                std::to_string(offset_) + ")");
  }
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (!in_) throw Error("read failed on '" + path_ + "'");
  offset_ += bytes;
}

}  // namespace mvhash::io
