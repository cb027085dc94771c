#include "sdnn/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace sdnn::io {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'N', 'N'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

// Cursor over the byte stream; every read reports its offset on failure.
struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t count, const char* what) const {
    if (pos + count > bytes.size())
      throw Error("checkpoint truncated at offset " + std::to_string(pos) +
                  ": needed " + std::to_string(count) + " bytes for " + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)])
           << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)])
           << (8 * i);
    pos += 8;
    return v;
  }
  float f32(const char* what) {
    std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

bool valid_kind_tag(std::uint8_t tag) { return tag >= 1 && tag <= 7; }

std::size_t mask_byte_count(std::size_t p) { return (p + 7) / 8; }

struct LayerSizes {
  std::size_t p = 0;
  std::size_t nnz = 0;
  std::size_t bias = 0;
  std::size_t rank = 0;
};

LayerSizes layer_sizes(const nn::Layer& l) {
  LayerSizes s;
  if (l.has_params()) {
    s.p = l.weights.numel();
    s.nnz = l.weights.nonzero_count();
    s.bias = l.bias.numel();
    s.rank = l.weights.shape.size();
  }
  return s;
}

SizeReport accumulate_report(const std::vector<LayerSizes>& sizes) {
  SizeReport r;
  r.overhead_bytes = 8;  // magic + version + layer count
  for (const auto& s : sizes) {
    r.dense_bytes += 4 * s.p;
    r.mask_bytes += mask_byte_count(s.p);
    r.value_bytes += 4 * s.nnz;
    r.bias_bytes += 4 * s.bias;
    r.overhead_bytes += 26 + 4 * s.rank;  // fixed per-layer fields
  }
  r.bitmask_bytes =
      r.overhead_bytes + r.mask_bytes + r.value_bytes + r.bias_bytes;
  r.compression_ratio =
      r.bitmask_bytes ? static_cast<double>(r.dense_bytes) /
                            static_cast<double>(r.bitmask_bytes)
                      : 0.0;
  const std::size_t payload = r.mask_bytes + r.value_bytes;
  r.payload_ratio =
      payload ? static_cast<double>(r.dense_bytes) /
                    static_cast<double>(payload)
              : 0.0;
  return r;
}

}  // namespace

std::vector<std::uint8_t> encode_bitmask(const nn::NetworkModel& model,
                                         bool dense) {
  if (model.layers.size() > std::numeric_limits<std::uint16_t>::max())
    throw Error("model has too many layers for the checkpoint format");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<std::uint16_t>(model.layers.size()));

  for (const auto& l : model.layers) {
    out.push_back(static_cast<std::uint8_t>(l.kind));
    if (!l.has_params()) {
      out.push_back(0);   // rank
      put_u64(out, 0);    // P
      put_u64(out, 0);    // nnz
      put_u64(out, 0);    // bias count
      continue;
    }
    if (!l.weights.all_finite() || !l.bias.all_finite())
      throw Error("cannot encode non-finite parameters");
    const std::size_t P = l.weights.numel();
    out.push_back(static_cast<std::uint8_t>(l.weights.shape.size()));
    for (std::size_t d : l.weights.shape)
      put_u32(out, static_cast<std::uint32_t>(d));
    put_u64(out, P);

    std::vector<std::uint8_t> mask(mask_byte_count(P), 0);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < P; ++i) {
      if (dense || l.weights[i] != 0.0) {
        mask[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        kept.push_back(i);
      }
    }
    out.insert(out.end(), mask.begin(), mask.end());
    put_u64(out, kept.size());
    for (std::size_t i : kept)
      put_f32(out, static_cast<float>(l.weights[i]));
    put_u64(out, l.bias.numel());
    for (double b : l.bias.data) put_f32(out, static_cast<float>(b));
  }
  return out;
}

std::vector<LayerRecord> decode_bitmask(
    const std::vector<std::uint8_t>& bytes) {
  Reader rd{bytes};
  rd.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error("bad magic at offset 0: expected \"SDNN\"");
  rd.pos = 4;
  const std::uint16_t version = rd.u16("version");
  if (version != kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) +
                " at offset 4 (this build reads version " +
                std::to_string(kVersion) + ")");
  const std::uint16_t layer_count = rd.u16("layer count");

  std::vector<LayerRecord> records;
  records.reserve(layer_count);
  for (std::uint16_t li = 0; li < layer_count; ++li) {
    const std::size_t layer_off = rd.pos;
    const std::uint8_t tag = rd.u8("layer kind");
    if (!valid_kind_tag(tag))
      throw Error("unknown layer kind tag " + std::to_string(tag) +
                  " at offset " + std::to_string(layer_off));
    LayerRecord rec;
    rec.kind = static_cast<nn::LayerKind>(tag);

    const std::uint8_t rank = rd.u8("weight rank");
    std::uint64_t dim_product = rank ? 1 : 0;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const std::uint32_t dim = rd.u32("weight dim");
      rec.dims.push_back(dim);
      dim_product *= dim;
    }
    const std::uint64_t P = rd.u64("weight count");
    if (P != dim_product)
      throw Error("layer " + std::to_string(li) + ": weight count " +
                  std::to_string(P) + " does not match dims product " +
                  std::to_string(dim_product) + " (offset " +
                  std::to_string(layer_off) + ")");

    const std::size_t mask_bytes = mask_byte_count(P);
    rd.need(mask_bytes, "bitmask");
    const std::size_t mask_off = rd.pos;
    std::uint64_t popcount = 0;
    std::vector<bool> set(P, false);
    for (std::uint64_t i = 0; i < P; ++i) {
      if (bytes[mask_off + i / 8] & (1u << (i % 8))) {
        set[i] = true;
        ++popcount;
      }
    }
    // bits beyond P must be zero padding
    for (std::uint64_t i = P; i < std::uint64_t{mask_bytes} * 8; ++i)
      if (bytes[mask_off + i / 8] & (1u << (i % 8)))
        throw Error("layer " + std::to_string(li) +
                    ": nonzero padding bit in the bitmask at offset " +
                    std::to_string(mask_off + i / 8));
    rd.pos += mask_bytes;

    const std::uint64_t nnz = rd.u64("retained count");
    if (nnz != popcount)
      throw Error("layer " + std::to_string(li) + ": retained count " +
                  std::to_string(nnz) + " does not match mask popcount " +
                  std::to_string(popcount) + " (offset " +
                  std::to_string(rd.pos - 8) + ")");

    rec.weights.assign(P, 0.0);
    for (std::uint64_t i = 0; i < P; ++i)
      if (set[i]) rec.weights[i] = static_cast<double>(rd.f32("weight value"));
    const std::uint64_t bias_count = rd.u64("bias count");
    rec.biases.resize(bias_count);
    for (std::uint64_t i = 0; i < bias_count; ++i)
      rec.biases[i] = static_cast<double>(rd.f32("bias value"));
    records.push_back(std::move(rec));
  }
  if (rd.pos != bytes.size())
    throw Error("trailing " + std::to_string(bytes.size() - rd.pos) +
                " bytes after the last layer (offset " +
                std::to_string(rd.pos) + ")");
  return records;
}

void load_weights(nn::NetworkModel& model,
                  const std::vector<LayerRecord>& records) {
  if (records.size() != model.layers.size())
    throw Error("checkpoint has " + std::to_string(records.size()) +
                " layers, model has " + std::to_string(model.layers.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    nn::Layer& l = model.layers[i];
    const LayerRecord& r = records[i];
    if (r.kind != l.kind)
      throw Error("layer " + std::to_string(i) + " kind mismatch: checkpoint " +
                  nn::kind_name(r.kind) + ", model " + nn::kind_name(l.kind));
    if (!l.has_params()) {
      if (!r.dims.empty() || !r.weights.empty() || !r.biases.empty())
        throw Error("layer " + std::to_string(i) +
                    ": checkpoint carries parameters for a parameter-free layer");
      continue;
    }
    if (r.dims != l.weights.shape)
      throw Error("layer " + std::to_string(i) + " weight shape mismatch: checkpoint " +
                  shape_string(r.dims) + ", model " +
                  shape_string(l.weights.shape));
    if (r.biases.size() != l.bias.numel())
      throw Error("layer " + std::to_string(i) + " bias count mismatch: checkpoint " +
                  std::to_string(r.biases.size()) + ", model " +
                  std::to_string(l.bias.numel()));
    l.weights.data = r.weights;
    l.bias.data = r.biases;
  }
}

void save_checkpoint(const nn::NetworkModel& model, const std::string& path,
                     bool dense) {
  const auto bytes = encode_bitmask(model, dense);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint: " + path);
}

std::vector<LayerRecord> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_bitmask(bytes);
}

SizeReport size_report(const nn::NetworkModel& model) {
  std::vector<LayerSizes> sizes;
  sizes.reserve(model.layers.size());
  for (const auto& l : model.layers) sizes.push_back(layer_sizes(l));
  return accumulate_report(sizes);
}

SizeReport size_report(const nn::NetworkModel& model,
                       const iht::SparsityPlan& plan) {
  plan.validate();
  std::vector<LayerSizes> sizes;
  sizes.reserve(model.layers.size());
  std::size_t wl = 0;
  for (const auto& l : model.layers) {
    LayerSizes s = layer_sizes(l);
    if (l.has_params()) {
      const double r = plan.final_ratio(wl++);
      const auto budget = static_cast<std::size_t>(std::max(
          1LL, std::llround((1.0 - r) * static_cast<double>(s.p))));
      s.nnz = std::min(budget, s.p);
    }
    sizes.push_back(s);
  }
  return accumulate_report(sizes);
}

}  // namespace sdnn::io
