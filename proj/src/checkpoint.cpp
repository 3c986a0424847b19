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

#include "lightnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "lightnet/error.hpp"

namespace fs = std::filesystem;

namespace lightnet {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "checkpoints require IEEE-754 floats");

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorCode::kFormat, "checkpoint truncated at byte offset ", pos_, " while reading ",
           what, " (need ", n, " bytes, ", bytes_.size() - pos_, " left)");
    }
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  require(tensors.size() <= std::numeric_limits<std::uint32_t>::max(), "too many tensors");
  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    require(t.name.size() <= std::numeric_limits<std::uint16_t>::max(), "tensor name too long");
    require(t.tensor.rank() <= std::numeric_limits<std::uint8_t>::max(), "tensor rank too large");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.tensor.rank()));
    for (std::size_t d : t.tensor.dims()) {
      require(d <= std::numeric_limits<std::uint32_t>::max(), "tensor dimension too large");
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (float v : t.tensor.values()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.get_bytes(4, "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    fail(ErrorCode::kFormat, "bad checkpoint magic at byte offset 0");
  }
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kFormat, "unsupported checkpoint version ", version, " at byte offset ",
         version_at);
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = r.get<std::uint16_t>("name length");
    t.name = r.get_bytes(name_len, "name");
    const auto rank = r.get<std::uint8_t>("rank");
    Shape dims;
    std::size_t elements = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      dims.push_back(r.get<std::uint32_t>("dimension"));
      elements *= dims.back();
      if (elements > r.remaining()) {
        // Cheap bound before allocating: each value needs 4 bytes.
        r.need(elements * 4, "tensor values");
      }
    }
    r.need(elements * 4, "tensor values");
    std::vector<float> values(elements);
    for (float& v : values) v = std::bit_cast<float>(r.get<std::uint32_t>("value"));
    t.tensor = Tensor<float>(std::move(dims), std::move(values));
    tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) {
    fail(ErrorCode::kFormat, "checkpoint has ", r.remaining(), " trailing bytes at byte offset ",
         r.pos());
  }
  return tensors;
}

template <typename T>
std::string encode_checkpoint(Model<T>& model) {
  std::vector<NamedTensor> tensors;
  for (const auto& entry : model.state()) {
    if constexpr (std::is_same_v<T, float>) {
      tensors.push_back({entry.name, *entry.tensor});
    } else {
      tensors.push_back({entry.name, entry.tensor->template cast<float>()});
    }
  }
  return encode_checkpoint(tensors);
}

template <typename T>
void save_checkpoint(Model<T>& model, const fs::path& path) {
  write_file(path, encode_checkpoint(model));
}

template <typename T>
Model<T> model_from_checkpoint(const ArchSpec& spec, const std::vector<NamedTensor>& tensors) {
  Model<T> model(spec, 0);
  auto state = model.state();
  if (state.size() != tensors.size()) {
    fail(ErrorCode::kFormat, "checkpoint holds ", tensors.size(), " tensors but architecture '",
         spec.name, "' needs ", state.size());
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i].name != tensors[i].name) {
      fail(ErrorCode::kFormat, "checkpoint tensor ", i, " is '", tensors[i].name, "', expected '",
           state[i].name, "'");
    }
    if (state[i].tensor->dims() != tensors[i].tensor.dims()) {
      fail(ErrorCode::kFormat, "checkpoint tensor '", tensors[i].name, "' has shape ",
           shape_to_string(tensors[i].tensor.dims()), ", expected ",
           shape_to_string(state[i].tensor->dims()));
    }
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if constexpr (std::is_same_v<T, float>) {
      *state[i].tensor = tensors[i].tensor;
    } else {
      *state[i].tensor = tensors[i].tensor.template cast<T>();
    }
  }
  return model;
}

template <typename T>
Model<T> load_checkpoint(const ArchSpec& spec, const fs::path& path) {
  return model_from_checkpoint<T>(spec, decode_checkpoint(read_file(path)));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '", path.string(), "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write '", path.string(), "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::kIo, "write failed for '", path.string(), "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot write '", path.string(), "'");
  }
}

template std::string encode_checkpoint<float>(Model<float>&);
template std::string encode_checkpoint<double>(Model<double>&);
template void save_checkpoint<float>(Model<float>&, const fs::path&);
template void save_checkpoint<double>(Model<double>&, const fs::path&);
template Model<float> load_checkpoint<float>(const ArchSpec&, const fs::path&);
template Model<double> load_checkpoint<double>(const ArchSpec&, const fs::path&);
template Model<float> model_from_checkpoint<float>(const ArchSpec&, const std::vector<NamedTensor>&);
template Model<double> model_from_checkpoint<double>(const ArchSpec&,
                                                     const std::vector<NamedTensor>&);

}  // namespace lightnet
