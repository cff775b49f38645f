#include "somn/checkpoint.hpp"

#include <cstring>

#include "somn/csv.hpp"
#include "somn/error.hpp"

namespace somn {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'M', 'N', 'C', 'K', 'P', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    require(pos + n <= bytes.size(), errc::malformed, "checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

std::vector<std::uint8_t> encode_model(const ModelGraph& model) {
  std::vector<std::uint8_t> out;
  put_u64(out, model.seed());
  put_u32(out, static_cast<std::uint32_t>(model.layer_count()));
  for (int i = 0; i < model.layer_count(); ++i) {
    const Layer& layer = model.layer(i);
    put_u32(out, static_cast<std::uint32_t>(layer.kind()));
    const auto config = layer.config_ints();
    put_u32(out, static_cast<std::uint32_t>(config.size()));
    for (const auto c : config) put_i64(out, c);
    const auto params = layer.params();
    put_u64(out, params.size());
    for (const double p : params) put_f64(out, p);
  }
  return out;
}

std::unique_ptr<Layer> make_layer(LayerKind kind, const std::vector<std::int64_t>& cfg) {
  auto geti = [&](std::size_t i) {
    require(i < cfg.size(), errc::malformed, "checkpoint layer config too short");
    return static_cast<int>(cfg[i]);
  };
  switch (kind) {
    case LayerKind::conv:
      return std::make_unique<ConvLayer>(geti(0), geti(1), geti(2), geti(3));
    case LayerKind::cosine_conv:
      return std::make_unique<CosineConvLayer>(geti(0), geti(1), geti(2),
                                               static_cast<ConvMode>(geti(3)));
    case LayerKind::max_pool:
      return std::make_unique<MaxPoolLayer>(geti(0));
    case LayerKind::one_max_pool:
      return std::make_unique<OneMaxPoolLayer>();
    case LayerKind::relu:
      return std::make_unique<ReluLayer>();
    case LayerKind::dense:
      return std::make_unique<DenseLayer>(geti(0), geti(1));
    case LayerKind::softmax_ce:
      return std::make_unique<SoftmaxCELayer>();
  }
  raise(errc::malformed, "unknown layer kind in checkpoint");
}

ModelGraph decode_model(const std::vector<std::uint8_t>& payload) {
  Reader r{payload};
  ModelGraph model;
  model.set_seed(r.u64());
  const std::uint32_t layers = r.u32();
  for (std::uint32_t i = 0; i < layers; ++i) {
    const auto kind = static_cast<LayerKind>(r.u32());
    const std::uint32_t ncfg = r.u32();
    std::vector<std::int64_t> cfg(ncfg);
    for (auto& c : cfg) c = r.i64();
    auto layer = make_layer(kind, cfg);
    const std::uint64_t nparams = r.u64();
    require(nparams == layer->param_count(), errc::malformed,
            "parameter count mismatch in checkpoint layer");
    auto params = layer->params();
    for (std::uint64_t p = 0; p < nparams; ++p) params[p] = r.f64();
    model.add(std::move(layer));
  }
  return model;
}

std::vector<std::uint8_t> encode_bank(const FilterBank& bank) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(bank.filters.rows));
  put_u32(out, static_cast<std::uint32_t>(bank.filters.cols));
  put_f64(out, bank.sample_rate_hz);
  put_u32(out, static_cast<std::uint32_t>(bank.meta.epochs_trained));
  put_f64(out, bank.meta.final_loss);
  put_u64(out, bank.meta.seed);
  for (const double v : bank.filters.v) put_f64(out, v);
  return out;
}

FilterBank decode_bank(const std::vector<std::uint8_t>& payload) {
  Reader r{payload};
  FilterBank bank;
  const int rows = static_cast<int>(r.u32());
  const int cols = static_cast<int>(r.u32());
  bank.sample_rate_hz = r.f64();
  bank.meta.epochs_trained = static_cast<int>(r.u32());
  bank.meta.final_loss = r.f64();
  bank.meta.seed = r.u64();
  bank.filters = Matrix(rows, cols);
  for (auto& v : bank.filters.v) v = r.f64();
  return bank;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections;
  if (ckpt.model) sections.emplace_back("model", encode_model(*ckpt.model));
  if (ckpt.filterbank) sections.emplace_back("filterbank", encode_bank(*ckpt.filterbank));
  if (!ckpt.meta.empty()) {
    std::vector<std::uint8_t> payload;
    put_u32(payload, static_cast<std::uint32_t>(ckpt.meta.size()));
    for (const auto& [k, v] : ckpt.meta) {
      put_str(payload, k);
      put_str(payload, v);
    }
    sections.emplace_back("meta", std::move(payload));
  }

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    put_str(out, name);
    put_u64(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 8) == 0, errc::malformed,
          "not a checkpoint file");
  Reader r{bytes, 8};
  const std::uint32_t sections = r.u32();
  Checkpoint ckpt;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::string name = r.str();
    const std::uint64_t len = r.u64();
    r.need(len);
    std::vector<std::uint8_t> payload(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                                      bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + len));
    r.pos += len;
    if (name == "model") ckpt.model = decode_model(payload);
    else if (name == "filterbank") ckpt.filterbank = decode_bank(payload);
    else if (name == "meta") {
      Reader mr{payload};
      const std::uint32_t count = mr.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::string key = mr.str();
        ckpt.meta[key] = mr.str();
      }
    }
    // unknown sections are preserved-forward: ignored on read
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_binary_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_binary_file(path));
}

}  // namespace somn
