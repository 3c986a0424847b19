/* Copyright 2026 The LightNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lightnet/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lightnet/error.hpp"

namespace lightnet {
namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char ch = static_cast<unsigned char>(bytes_[pos_]);
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(ch)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) fail(ErrorCode::kFormat, source_, ": PGM ", what, " is too large");
      ++pos_;
    }
    if (pos_ == start) fail(ErrorCode::kFormat, source_, ": malformed PGM header (missing ", what, ")");
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

PgmImage decode_pgm(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(ErrorCode::kFormat, source, ": not a binary PGM (expected magic P5)");
  }
  HeaderReader reader(bytes, source);
  reader.advance(2);
  PgmImage img;
  img.width = reader.number("width");
  img.height = reader.number("height");
  const std::size_t maxval = reader.number("maxval");
  if (img.width == 0 || img.height == 0) fail(ErrorCode::kFormat, source, ": PGM has zero extent");
  if (maxval == 0 || maxval > 65535) {
    fail(ErrorCode::kFormat, source, ": PGM maxval ", maxval, " out of range [1, 65535]");
  }
  img.maxval = static_cast<std::uint32_t>(maxval);
  if (reader.pos() >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
    fail(ErrorCode::kFormat, source, ": malformed PGM header");
  }
  reader.advance(1);
  const std::size_t bytes_per_pixel = maxval > 255 ? 2 : 1;
  const std::size_t count = img.width * img.height;
  const std::size_t expected = count * bytes_per_pixel;
  const std::size_t available = bytes.size() - reader.pos();
  if (available != expected) {
    fail(ErrorCode::kFormat, source, ": PGM pixel data is ", available, " bytes, expected ", expected);
  }
  img.pixels.resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v = bytes_per_pixel == 1
                                ? p[i]
                                : static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    if (v > maxval) fail(ErrorCode::kFormat, source, ": PGM pixel ", i, " exceeds maxval");
    img.pixels[i] = v;
  }
  return img;
}

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '", path.string(), "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pgm(bytes, path.string());
}

std::string encode_pgm(std::size_t width, std::size_t height, const std::uint8_t* pixels) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels), width * height);
  return out;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::uint8_t* pixels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write '", path.string(), "'");
  const std::string bytes = encode_pgm(width, height, pixels);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for '", path.string(), "'");
}

}  // namespace lightnet
