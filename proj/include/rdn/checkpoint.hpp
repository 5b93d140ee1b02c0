#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdn/kv.hpp"
#include "rdn/optim.hpp"
#include "rdn/params.hpp"

namespace rdn {

// On-disk layout (all integers little-endian):
//   8 bytes   magic "RDNCKPT1"
//   u32       config text length, then that many bytes of key=value lines
//   u32       tensor count
//   per tensor: u32 name length, name bytes, 4 x u32 dims, u64 byte offset
//               into the payload
//   u64       payload byte length
//   payload   raw float32 scalars
//   u32       CRC32 of the payload bytes
inline constexpr char kCheckpointMagic[8] = {'R', 'D', 'N', 'C',
                                             'K', 'P', 'T', '1'};

struct CheckpointData {
  RdnConfig cfg;
  RdnParams<float> params;
  std::optional<AdamState<float>> adam;
  int epoch = 0;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

// Bounds-checked little-endian reader over a byte buffer.
struct ByteReader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw FormatError("checkpoint truncated: need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    }
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

inline std::string config_text(const CheckpointData& d) {
  const RdnConfig& c = d.cfg;
  std::string t;
  t += "d=" + std::to_string(c.d_blocks) + "\n";
  t += "c=" + std::to_string(c.c_layers) + "\n";
  t += "g=" + std::to_string(c.growth) + "\n";
  t += "g0=" + std::to_string(c.g0) + "\n";
  t += "scale=" + std::to_string(c.scale) + "\n";
  t += std::string("topology=") +
       (c.topology == Topology::SR ? "sr" : "sameres") + "\n";
  t += std::string("cm=") + (c.ablation.cm ? "1" : "0") + "\n";
  t += std::string("lrl=") + (c.ablation.lrl ? "1" : "0") + "\n";
  t += std::string("gff=") + (c.ablation.gff ? "1" : "0") + "\n";
  t += "in_channels=" + std::to_string(c.in_channels) + "\n";
  t += "out_channels=" + std::to_string(c.out_channels) + "\n";
  t += "epoch=" + std::to_string(d.epoch) + "\n";
  t += std::string("adam=") + (d.adam ? "1" : "0") + "\n";
  t += "adam_t=" + std::to_string(d.adam ? d.adam->t : 0) + "\n";
  return t;
}

struct ParsedConfig {
  RdnConfig cfg;
  int epoch = 0;
  bool has_adam = false;
  long long adam_t = 0;
};

inline ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig p;
  std::map<std::string, std::string> seen;
  for (const auto& [k, v] : kv::parse(text)) {
    if (!seen.emplace(k, v).second) {
      throw FormatError("checkpoint config: duplicate key '" + k + "'");
    }
  }
  auto take = [&seen](const char* key) {
    auto it = seen.find(key);
    if (it == seen.end()) {
      throw FormatError(std::string("checkpoint config: missing key '") + key +
                        "'");
    }
    std::string v = it->second;
    seen.erase(it);
    return v;
  };
  p.cfg.d_blocks = static_cast<int>(kv::to_int("d", take("d")));
  p.cfg.c_layers = static_cast<int>(kv::to_int("c", take("c")));
  p.cfg.growth = static_cast<int>(kv::to_int("g", take("g")));
  p.cfg.g0 = static_cast<int>(kv::to_int("g0", take("g0")));
  p.cfg.scale = static_cast<int>(kv::to_int("scale", take("scale")));
  const std::string topo = take("topology");
  if (topo == "sr") {
    p.cfg.topology = Topology::SR;
  } else if (topo == "sameres") {
    p.cfg.topology = Topology::SameRes;
  } else {
    throw FormatError("checkpoint config: bad topology '" + topo + "'");
  }
  p.cfg.ablation.cm = kv::to_bool("cm", take("cm"));
  p.cfg.ablation.lrl = kv::to_bool("lrl", take("lrl"));
  p.cfg.ablation.gff = kv::to_bool("gff", take("gff"));
  p.cfg.in_channels =
      static_cast<int>(kv::to_int("in_channels", take("in_channels")));
  p.cfg.out_channels =
      static_cast<int>(kv::to_int("out_channels", take("out_channels")));
  p.epoch = static_cast<int>(kv::to_int("epoch", take("epoch")));
  p.has_adam = kv::to_bool("adam", take("adam"));
  p.adam_t = kv::to_int("adam_t", take("adam_t"));
  if (!seen.empty()) {
    throw FormatError("checkpoint config: unknown key '" +
                      seen.begin()->first + "'");
  }
  p.cfg.validate();
  return p;
}

struct TensorEntry {
  std::string name;
  std::uint32_t dims[4];
  std::uint64_t offset;
};

inline void append_weights(std::vector<TensorEntry>& index,
                           std::vector<std::uint8_t>& payload,
                           const std::string& name,
                           const ConvWeights<float>& w) {
  auto push = [&index, &payload](const std::string& tname,
                                 const std::vector<float>& vals,
                                 std::uint32_t d0, std::uint32_t d1,
                                 std::uint32_t d2, std::uint32_t d3) {
    TensorEntry e;
    e.name = tname;
    e.dims[0] = d0;
    e.dims[1] = d1;
    e.dims[2] = d2;
    e.dims[3] = d3;
    e.offset = payload.size();
    const std::size_t bytes = vals.size() * sizeof(float);
    payload.resize(payload.size() + bytes);
    std::memcpy(payload.data() + e.offset, vals.data(), bytes);
    index.push_back(std::move(e));
  };
  push(name + "/kernel", w.kernel, w.out_ch, w.in_ch, w.kh, w.kw);
  push(name + "/bias", w.bias, w.out_ch, 1, 1, 1);
}

}  // namespace detail

inline void save_checkpoint(const CheckpointData& data,
                            const std::string& path) {
  data.cfg.validate();
  std::vector<detail::TensorEntry> index;
  std::vector<std::uint8_t> payload;
  for (const auto& [name, w] : data.params.layers) {
    detail::append_weights(index, payload, name, w);
  }
  if (data.adam) {
    for (const auto& [name, w] : data.adam->m) {
      detail::append_weights(index, payload, "adam.m/" + name, w);
    }
    for (const auto& [name, w] : data.adam->v) {
      detail::append_weights(index, payload, "adam.v/" + name, w);
    }
  }

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
  const std::string cfg_text = detail::config_text(data);
  detail::put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out.insert(out.end(), cfg_text.begin(), cfg_text.end());
  detail::put_u32(out, static_cast<std::uint32_t>(index.size()));
  for (const detail::TensorEntry& e : index) {
    detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    for (int i = 0; i < 4; ++i) detail::put_u32(out, e.dims[i]);
    detail::put_u64(out, e.offset);
  }
  detail::put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
  detail::put_u32(out, crc);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  detail::ByteReader r{buf};

  const std::string magic = r.bytes(8);
  if (std::memcmp(magic.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
  }
  const std::uint32_t cfg_len = r.u32();
  const detail::ParsedConfig pc = detail::parse_config_text(r.bytes(cfg_len));

  const std::uint32_t tensor_count = r.u32();
  std::vector<detail::TensorEntry> index(tensor_count);
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const std::uint32_t name_len = r.u32();
    index[i].name = r.bytes(name_len);
    for (int d = 0; d < 4; ++d) index[i].dims[d] = r.u32();
    index[i].offset = r.u64();
  }
  const std::uint64_t payload_len = r.u64();
  r.need(payload_len);
  const std::uint8_t* payload = buf.data() + r.pos;
  r.pos += payload_len;
  const std::uint32_t stored_crc = r.u32();
  const std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, payload, static_cast<uInt>(payload_len)));
  if (crc != stored_crc) {
    throw FormatError("'" + path + "': payload CRC mismatch");
  }
  if (r.pos != buf.size()) {
    throw FormatError("'" + path + "': trailing bytes after CRC");
  }

  std::map<std::string, const detail::TensorEntry*> by_name;
  for (const detail::TensorEntry& e : index) {
    if (!by_name.emplace(e.name, &e).second) {
      throw FormatError("'" + path + "': duplicate tensor '" + e.name + "'");
    }
  }
  auto read_weights = [&by_name, payload, payload_len, &path](
                          const std::string& prefix, int out_ch, int in_ch,
                          int k) {
    ConvWeights<float> w(out_ch, in_ch, k, k);
    auto fetch = [&by_name, payload, payload_len, &path](
                     const std::string& name, std::vector<float>& dst,
                     std::uint32_t d0, std::uint32_t d1, std::uint32_t d2,
                     std::uint32_t d3) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw FormatError("'" + path + "': missing tensor '" + name + "'");
      }
      const detail::TensorEntry& e = *it->second;
      if (e.dims[0] != d0 || e.dims[1] != d1 || e.dims[2] != d2 ||
          e.dims[3] != d3) {
        throw FormatError("'" + path + "': tensor '" + name +
                          "' has unexpected dims");
      }
      const std::uint64_t bytes = dst.size() * sizeof(float);
      if (e.offset > payload_len || e.offset + bytes > payload_len) {
        throw FormatError("'" + path + "': tensor '" + name +
                          "' overruns payload");
      }
      std::memcpy(dst.data(), payload + e.offset, bytes);
      by_name.erase(it);
    };
    fetch(prefix + "/kernel", w.kernel, out_ch, in_ch, k, k);
    fetch(prefix + "/bias", w.bias, out_ch, 1, 1, 1);
    return w;
  };

  CheckpointData data;
  data.cfg = pc.cfg;
  data.epoch = pc.epoch;
  for (const LayerSpec& s : layer_specs(pc.cfg)) {
    data.params.layers.emplace(s.name,
                               read_weights(s.name, s.out_ch, s.in_ch, s.k));
  }
  if (pc.has_adam) {
    AdamState<float> adam;
    adam.t = pc.adam_t;
    for (const LayerSpec& s : layer_specs(pc.cfg)) {
      adam.m.emplace(s.name, read_weights("adam.m/" + s.name, s.out_ch,
                                          s.in_ch, s.k));
      adam.v.emplace(s.name, read_weights("adam.v/" + s.name, s.out_ch,
                                          s.in_ch, s.k));
    }
    data.adam = std::move(adam);
  }
  if (!by_name.empty()) {
    throw FormatError("'" + path + "': unexpected tensor '" +
                      by_name.begin()->first + "'");
  }
  if (!data.params.all_finite()) {
    throw FormatError("'" + path + "': non-finite weights");
  }
  return data;
}

}  // namespace rdn
