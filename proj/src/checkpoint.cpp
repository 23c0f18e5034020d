// Copyright 2026 The rnnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rnnt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace rnnt {

namespace {
constexpr int kFormatVersion = 1;

// Values are written little-endian. All supported targets are little-endian,
// which the build asserts here rather than carrying byte-swap code.
static_assert(std::endian::native == std::endian::little, "little-endian target required");
}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params, const Json& meta,
                     const std::string& dtype) {
  if (dtype != "f64" && dtype != "f32") throw Error("save_checkpoint: dtype must be f64 or f32");
  const size_t elem = dtype == "f64" ? 8 : 4;

  Json header;
  header["format"] = "rnnt-checkpoint";
  header["version"] = kFormatVersion;
  header["dtype"] = dtype;
  header["meta"] = meta;
  Json plist = Json::array();
  uint64_t offset = 0;
  for (const std::string& n : params.names()) {
    const Matrix& m = params.at(n);
    uint64_t bytes = elem * static_cast<uint64_t>(m.size());
    plist.push_back({{"name", n},
                     {"rows", m.rows()},
                     {"cols", m.cols()},
                     {"offset", offset},
                     {"bytes", bytes}});
    offset += bytes;
  }
  header["params"] = std::move(plist);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_checkpoint: cannot open '" + path + "' for writing");
  out << header.dump() << "\n";
  for (const std::string& n : params.names()) {
    const Matrix& m = params.at(n);
    if (dtype == "f64") {
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
    } else {
      std::vector<float> buf(static_cast<size_t>(m.size()));
      for (long i = 0; i < m.size(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(m.data()[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(sizeof(float) * buf.size()));
    }
  }
  if (!out) throw Error("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_checkpoint: cannot open '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) throw Error("load_checkpoint: missing header in '" + path + "'");
  Json header = Json::parse(header_line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "rnnt-checkpoint")
    throw Error("load_checkpoint: '" + path + "' is not a checkpoint file");
  if (header.value("version", 0) != kFormatVersion)
    throw Error("load_checkpoint: unsupported version in '" + path + "'");

  Checkpoint ckpt;
  ckpt.dtype = header.value("dtype", "f64");
  ckpt.meta = header.value("meta", Json::object());
  const size_t elem = ckpt.dtype == "f64" ? 8 : 4;
  const std::streampos payload_start = in.tellg();

  for (const Json& p : header.at("params")) {
    const std::string name = p.at("name");
    const long rows = p.at("rows"), cols = p.at("cols");
    const uint64_t offset = p.at("offset"), bytes = p.at("bytes");
    if (bytes != elem * static_cast<uint64_t>(rows) * static_cast<uint64_t>(cols))
      throw Error("load_checkpoint: inconsistent byte count for '" + name + "'");
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    Matrix m(rows, cols);
    if (ckpt.dtype == "f64") {
      in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(bytes));
    } else {
      std::vector<float> buf(static_cast<size_t>(rows) * static_cast<size_t>(cols));
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
      for (long i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(buf[static_cast<size_t>(i)]);
    }
    if (!in) throw Error("load_checkpoint: truncated payload in '" + path + "'");
    ckpt.params.add(name, std::move(m));
  }
  return ckpt;
}

}  // namespace rnnt
