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

// Binary (P5) portable graymap reading and writing.

#ifndef LIGHTNET_PGM_HPP_
#define LIGHTNET_PGM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lightnet {

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> pixels;  // row-major, height * width
};

// Throws Error(kFormat) naming `source` on malformed input.
PgmImage decode_pgm(const std::string& bytes, const std::string& source);
PgmImage read_pgm(const std::filesystem::path& path);

// 8-bit only.
std::string encode_pgm(std::size_t width, std::size_t height, const std::uint8_t* pixels);
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::uint8_t* pixels);

}  // namespace lightnet

#endif  // LIGHTNET_PGM_HPP_
