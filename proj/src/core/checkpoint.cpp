// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/checkpoint.hpp"

#include "fuzzkd/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fuzzkd::nn {

namespace {

class Writer {
public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void bytes(const void *p, std::size_t n) {
    const auto *c = static_cast<const unsigned char *>(p);
    out.insert(out.end(), c, c + n);
  }
  std::vector<unsigned char> out;
};

class Reader {
public:
  explicit Reader(const std::vector<unsigned char> &b) : buf(b) {}

  void need(std::size_t n, const char *what) {
    if (buf.size() - pos < n)
      throw_format(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint32_t u32(const char *what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char *what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char *what) {
    need(n, what);
    std::string s(reinterpret_cast<const char *>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  bool done() const { return pos == buf.size(); }

private:
  const std::vector<unsigned char> &buf;
  std::size_t pos = 0;
};

} // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint &ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.u32(ckpt.version);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor &t : ckpt.tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    std::size_t count = 1;
    for (std::uint32_t d : t.dims) {
      w.u32(d);
      count *= d;
    }
    if (count != t.values.size())
      throw_invalid("tensor " + t.name + " value count does not match dims");
    for (float f : t.values)
      w.f32(f);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  w.bytes(ckpt.metadata.data(), ckpt.metadata.size());
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<unsigned char> &bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string(kCheckpointMagic, 4))
    throw_format("not a checkpoint file (bad magic bytes)");
  Checkpoint ckpt;
  ckpt.version = r.u32("version");
  if (ckpt.version != kCheckpointVersion)
    throw_format("unsupported checkpoint version " +
                 std::to_string(ckpt.version) + " (expected " +
                 std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u32("tensor name length"), "tensor name");
    const std::uint32_t rank = r.u32("tensor rank");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32("tensor dims"));
      n *= t.dims.back();
      if (n > bytes.size())
        throw_format("checkpoint truncated while reading tensor values");
    }
    r.need(n * 4, "tensor values");
    t.values.resize(n);
    for (float &f : t.values)
      f = r.f32("tensor values");
    ckpt.tensors.push_back(std::move(t));
  }
  ckpt.metadata = r.str(r.u32("metadata length"), "metadata");
  if (!r.done())
    throw_format("trailing bytes after checkpoint metadata");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw_io("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw_io("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw_io("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

Checkpoint make_checkpoint(const Network &net, const nlohmann::json &extra) {
  Checkpoint ckpt;
  for (const Tensor &t : net.parameters()) {
    NamedTensor nt;
    nt.name = t.name;
    for (std::size_t d : t.shape)
      nt.dims.push_back(static_cast<std::uint32_t>(d));
    nt.values.reserve(t.values.size());
    for (double v : t.values)
      nt.values.push_back(static_cast<float>(v));
    ckpt.tensors.push_back(std::move(nt));
  }
  nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
  meta["network"] = net.spec();
  ckpt.metadata = meta.dump();
  return ckpt;
}

Network network_from_checkpoint(const Checkpoint &ckpt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception &e) {
    throw_format(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (!meta.contains("network"))
    throw_format("checkpoint metadata lacks a network spec");
  NetworkSpec spec;
  try {
    spec = meta.at("network").get<NetworkSpec>();
  } catch (const nlohmann::json::exception &e) {
    throw_format(std::string("checkpoint network spec is malformed: ") + e.what());
  }
  Network net(spec);
  for (Tensor &t : net.parameters()) {
    const auto it =
        std::find_if(ckpt.tensors.begin(), ckpt.tensors.end(),
                     [&](const NamedTensor &nt) { return nt.name == t.name; });
    if (it == ckpt.tensors.end())
      throw_format("checkpoint is missing tensor '" + t.name + "'");
    if (it->dims.size() != t.shape.size() ||
        !std::equal(t.shape.begin(), t.shape.end(), it->dims.begin()))
      throw_format("checkpoint tensor '" + t.name + "' has the wrong shape");
    for (std::size_t i = 0; i < t.values.size(); ++i)
      t.values[i] = static_cast<double>(it->values[i]);
  }
  return net;
}

} // namespace fuzzkd::nn
