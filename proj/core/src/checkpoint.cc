// Copyright 2026 The tdmpc Authors.
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

#include "tdmpc/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tdmpc {
namespace {

constexpr char kMagic[8] = {'T', 'D', 'M', 'P', 'C', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void Put(T value) {
    const char* p = reinterpret_cast<const char*>(&value);
    out_.append(p, sizeof(T));
  }
  void PutString(const std::string& s) {
    Put<uint32_t>(static_cast<uint32_t>(s.size()));
    out_.append(s);
  }
  void PutBytes(const std::string& s) { out_.append(s); }
  void PutDoubles(const double* data, size_t n) {
    out_.append(reinterpret_cast<const char*>(data), n * sizeof(double));
  }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T Get() {
    T value;
    Need(sizeof(T));
    std::memcpy(&value, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string GetBytes(size_t n) {
    Need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string GetString() { return GetBytes(Get<uint32_t>()); }
  void GetDoubles(double* data, size_t n) {
    Need(n * sizeof(double));
    std::memcpy(data, in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool Done() const { return pos_ == in_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > in_.size()) {
      throw std::runtime_error("checkpoint: truncated data");
    }
  }
  const std::string& in_;
  size_t pos_ = 0;
};

}  // namespace

const Network& Checkpoint::Get(const std::string& name) const {
  for (const NamedNetwork& s : sections) {
    if (s.name == name) return s.net;
  }
  throw std::runtime_error("checkpoint: no section named '" + name + "'");
}

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.PutBytes(std::string(kMagic, sizeof(kMagic)));
  w.Put<uint32_t>(kCheckpointVersion);
  w.Put<uint64_t>(checkpoint.metadata.size());
  w.PutBytes(checkpoint.metadata);
  w.Put<uint32_t>(static_cast<uint32_t>(checkpoint.sections.size()));
  for (const NamedNetwork& section : checkpoint.sections) {
    const Network& net = section.net;
    w.PutString(section.name);
    w.Put<uint32_t>(static_cast<uint32_t>(net.role()));
    w.Put<uint32_t>(static_cast<uint32_t>(net.input_dim()));
    w.Put<uint32_t>(static_cast<uint32_t>(net.layers().size()));
    for (const LayerSpec& l : net.layers()) {
      w.Put<uint32_t>(static_cast<uint32_t>(l.in));
      w.Put<uint32_t>(static_cast<uint32_t>(l.out));
      w.Put<uint32_t>(static_cast<uint32_t>(l.activation));
      w.Put<uint32_t>(l.layer_norm ? 1u : 0u);
    }
    w.Put<uint64_t>(static_cast<uint64_t>(net.num_params()));
    w.PutDoubles(net.params().data(), static_cast<size_t>(net.num_params()));
  }
  return w.Take();
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.GetBytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const uint32_t version = r.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint checkpoint;
  checkpoint.metadata = r.GetBytes(r.Get<uint64_t>());
  const uint32_t sections = r.Get<uint32_t>();
  for (uint32_t i = 0; i < sections; ++i) {
    NamedNetwork section;
    section.name = r.GetString();
    const auto role = static_cast<NetworkRole>(r.Get<uint32_t>());
    const int input_dim = static_cast<int>(r.Get<uint32_t>());
    const uint32_t num_layers = r.Get<uint32_t>();
    std::vector<LayerSpec> layers;
    for (uint32_t l = 0; l < num_layers; ++l) {
      LayerSpec spec;
      spec.in = static_cast<int>(r.Get<uint32_t>());
      spec.out = static_cast<int>(r.Get<uint32_t>());
      const uint32_t act = r.Get<uint32_t>();
      if (act > static_cast<uint32_t>(Activation::kTanh)) {
        throw std::runtime_error("checkpoint: unknown activation");
      }
      spec.activation = static_cast<Activation>(act);
      spec.layer_norm = r.Get<uint32_t>() != 0;
      layers.push_back(spec);
    }
    section.net = layers.empty() ? Network::Identity(role, input_dim)
                                 : Network(role, std::move(layers));
    const uint64_t count = r.Get<uint64_t>();
    if (count != static_cast<uint64_t>(section.net.num_params())) {
      throw std::runtime_error("checkpoint: parameter count mismatch in '" +
                               section.name + "'");
    }
    r.GetDoubles(section.net.params().data(), count);
    checkpoint.sections.push_back(std::move(section));
  }
  if (!r.Done()) throw std::runtime_error("checkpoint: trailing bytes");
  return checkpoint;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = SerializeCheckpoint(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DeserializeCheckpoint(buffer.str());
}

}  // namespace tdmpc
