// Copyright 2026 The utg Authors
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

#include "utg/nn/model_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace utg::nn {
namespace {

constexpr char kMagic[4] = {'U', 'T', 'G', 'M'};

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ModelFormatError("model file truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_model_file(const ModelFile& file) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, ModelFile::kVersion);
  const std::string config = file.config.dump();
  put_le<std::uint64_t>(out, config.size());
  out.insert(out.end(), config.begin(), config.end());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.arrays.size()));
  for (const auto& [name, tensor] : file.arrays) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape()) put_le<std::uint64_t>(out, d);
    for (float v : tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelFile decode_model_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ModelFormatError("not a UTGM model file (bad magic)");
  }
  Reader r(bytes);
  r.get_string(4);
  const auto version = r.get_le<std::uint32_t>();
  if (version != ModelFile::kVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }
  ModelFile file;
  const auto config_len = r.get_le<std::uint64_t>();
  try {
    file.config = nlohmann::json::parse(r.get_string(config_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFormatError(std::string("model config is not valid JSON: ") + e.what());
  }
  const auto count = r.get_le<std::uint32_t>();
  for (std::uint32_t a = 0; a < count; ++a) {
    const auto name = r.get_string(r.get_le<std::uint32_t>());
    const auto rank = r.get_le<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get_le<std::uint64_t>();
    Tensor<float> t(shape);
    for (auto& v : t.data()) v = std::bit_cast<float>(r.get_le<std::uint32_t>());
    file.arrays.emplace(name, std::move(t));
  }
  if (!r.at_end()) throw ModelFormatError("trailing bytes after model arrays");
  return file;
}

void write_model_file(const std::filesystem::path& path, const ModelFile& file) {
  const auto bytes = encode_model_file(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model_file(bytes);
}

void store_params(const ParamStore<float>& params, const std::string& prefix, ModelFile& file) {
  for (const auto& [name, e] : params.entries()) file.arrays[prefix + name] = e.value;
}

void load_params(const ModelFile& file, const std::string& prefix, ParamStore<float>& params) {
  for (auto& [name, e] : params.entries()) {
    auto it = file.arrays.find(prefix + name);
    if (it == file.arrays.end()) throw ModelFormatError("model file lacks array '" + prefix + name + "'");
    if (it->second.shape() != e.value.shape()) {
      throw ModelFormatError("array '" + prefix + name + "' has shape " +
                             shape_string(it->second.shape()) + ", expected " +
                             shape_string(e.value.shape()));
    }
    e.value = it->second;
  }
}

}  // namespace utg::nn
