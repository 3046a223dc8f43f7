// Copyright 2026 The clrprune Authors.
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

#include "clrprune/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "clrprune/error.hpp"
#include "clrprune/rng.hpp"

namespace clrprune {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'R', 'W'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kMaxRank = 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorKind::Format, std::string("CLRW truncated while reading ") + what + " at offset " +
                                  std::to_string(pos_));
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) { return take(1, what)[0]; }
  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    return static_cast<std::uint32_t>(s[0]) | static_cast<std::uint32_t>(s[1]) << 8 |
           static_cast<std::uint32_t>(s[2]) << 16 | static_cast<std::uint32_t>(s[3]) << 24;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::string dims_string(std::span<const std::uint32_t> dims) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ")";
  return os.str();
}

void expect_dims(const WeightStore& store, const std::string& key,
                 std::vector<std::uint32_t> expected, bool required) {
  const Tensor* t = store.find(key);
  if (!t) {
    if (required) fail(ErrorKind::Structural, "weights are missing tensor '" + key + "'");
    return;
  }
  if (t->dims != expected) {
    fail(ErrorKind::Shape, "tensor '" + key + "' has dims " + dims_string(t->dims) +
                                    " but the architecture expects " + dims_string(expected));
  }
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.dims == b.dims && a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

void WeightStore::insert(std::string name, Tensor tensor) {
  if (name.empty()) fail(ErrorKind::Usage, "tensor name must not be empty");
  if (tensor.rank() > kMaxRank) fail(ErrorKind::Usage, "tensor '" + name + "' has rank > 4");
  if (tensor.element_count() != tensor.data.size()) {
    fail(ErrorKind::Usage, "tensor '" + name + "' dims " + dims_string(tensor.dims) + " do not match " +
                               std::to_string(tensor.data.size()) + " values");
  }
  entries_[std::move(name)] = std::move(tensor);
}

const Tensor* WeightStore::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const Tensor& WeightStore::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) fail(ErrorKind::Config, "no tensor named '" + std::string(name) + "'");
  return *t;
}

std::string weight_key(std::string_view layer) { return std::string(layer) + ".weight"; }
std::string bias_key(std::string_view layer) { return std::string(layer) + ".bias"; }

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kClrwVersion);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, tensor] : store) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(kDtypeF32);
    out.push_back(static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.dims) put_u32(out, d);
    for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorKind::Format, "not a CLRW file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kClrwVersion) {
    fail(ErrorKind::Format, "unsupported CLRW version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");

  WeightStore store;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = r.u32("name length");
    auto name_bytes = r.take(name_len, "tensor name");
    std::string name(name_bytes.begin(), name_bytes.end());
    if (name.empty()) fail(ErrorKind::Format, "tensor " + std::to_string(t) + " has an empty name");
    if (store.contains(name)) fail(ErrorKind::Format, "duplicate tensor '" + name + "'");
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != kDtypeF32) {
      fail(ErrorKind::Format, "tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    }
    const std::uint8_t rank = r.u8("rank");
    if (rank > kMaxRank) fail(ErrorKind::Format, "tensor '" + name + "' has rank " + std::to_string(rank));
    Tensor tensor;
    std::uint64_t elements = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      tensor.dims.push_back(r.u32("dims"));
      elements *= tensor.dims.back();
    }
    if (elements > (bytes.size() - r.offset()) / 4) {
      fail(ErrorKind::Format, "CLRW truncated in data of tensor '" + name + "'");
    }
    tensor.data.resize(elements);
    for (std::uint64_t i = 0; i < elements; ++i) {
      const float v = std::bit_cast<float>(r.u32("data"));
      if (!std::isfinite(v)) {
        fail(ErrorKind::Data, "tensor '" + name + "' has a non-finite value at index " + std::to_string(i));
      }
      tensor.data[i] = v;
    }
    store.insert(std::move(name), std::move(tensor));
  }
  if (!r.done()) fail(ErrorKind::Format, "CLRW file has trailing bytes after the last tensor");
  return store;
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open weights file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

void save_weights(const WeightStore& store, const std::string& path) {
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write weights file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

FilterMatrix flatten_filters(const Tensor& tensor) {
  if (tensor.rank() != 4) {
    fail(ErrorKind::Usage, "flatten_filters expects a rank-4 tensor, got rank " + std::to_string(tensor.rank()));
  }
  const std::size_t n = tensor.dims[0];
  FilterMatrix m(n, n == 0 ? 0 : tensor.data.size() / n);
  // Row-major (n, c, h, w) storage already lists each filter contiguously
  // in (channel, row, col) order.
  for (std::size_t i = 0; i < tensor.data.size(); ++i) m.values[i] = tensor.data[i];
  return m;
}

void check_binding(const ArchSpec& arch, const WeightStore& store, bool require_conv_weights) {
  for (const auto& l : arch.layers()) {
    const auto n = static_cast<std::uint32_t>(l.out_channels);
    const auto c = static_cast<std::uint32_t>(l.in_channels);
    switch (l.kind) {
      case LayerKind::Conv:
        expect_dims(store, weight_key(l.name),
                    {n, c, static_cast<std::uint32_t>(l.kernel_h), static_cast<std::uint32_t>(l.kernel_w)},
                    require_conv_weights);
        expect_dims(store, bias_key(l.name), {n}, false);
        break;
      case LayerKind::FullyConnected:
        expect_dims(store, weight_key(l.name), {n, c}, false);
        expect_dims(store, bias_key(l.name), {n}, false);
        break;
      case LayerKind::BatchNorm:
        for (const char* p : {".weight", ".bias", ".running_mean", ".running_var"}) {
          expect_dims(store, l.name + p, {n}, false);
        }
        break;
      default:
        break;
    }
  }
}

WeightStore synthesize_weights(const ArchSpec& arch, std::uint64_t seed) {
  Rng rng(seed);
  WeightStore store;
  auto filled = [](std::vector<std::uint32_t> dims, float value) {
    Tensor t{std::move(dims), {}};
    t.data.assign(t.element_count(), value);
    return t;
  };
  for (const auto& l : arch.layers()) {
    const auto n = static_cast<std::uint32_t>(l.out_channels);
    const auto c = static_cast<std::uint32_t>(l.in_channels);
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::FullyConnected) {
      Tensor w;
      if (l.kind == LayerKind::Conv) {
        w.dims = {n, c, static_cast<std::uint32_t>(l.kernel_h), static_cast<std::uint32_t>(l.kernel_w)};
      } else {
        w.dims = {n, c};
      }
      const std::size_t fan_in = w.element_count() / n;
      const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
      w.data.resize(w.element_count());
      for (auto& v : w.data) v = static_cast<float>(rng.normal() * scale);
      store.insert(weight_key(l.name), std::move(w));
      if (l.bias) store.insert(bias_key(l.name), filled({n}, 0.0f));
    } else if (l.kind == LayerKind::BatchNorm) {
      store.insert(l.name + ".weight", filled({n}, 1.0f));
      store.insert(l.name + ".bias", filled({n}, 0.0f));
      store.insert(l.name + ".running_mean", filled({n}, 0.0f));
      store.insert(l.name + ".running_var", filled({n}, 1.0f));
    }
  }
  return store;
}

}  // namespace clrprune
