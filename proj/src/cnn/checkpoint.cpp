#include "mammo/cnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "mammo/errors.hpp"
#include "mammo/pnm_io.hpp"

namespace mammo::cnn {
namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
      bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
      emit(bits, 8);
    } else {
      bits = static_cast<std::uint64_t>(v);
      emit(bits, sizeof(T));
    }
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;

 private:
  void emit(std::uint64_t bits, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t uint(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw LengthError("checkpoint truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_checkpoint(Network& model) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  const auto& cfg = model.config();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.input_size));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.num_classes));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.feature_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.layers.size()));
  for (const auto& l : cfg.layers) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(l.kind));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.channels));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.kernel));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.stride));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.padding));
  }
  const auto params = model.parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value->rank()));
    for (auto e : p.value->shape()) w.put<std::uint64_t>(e);
    for (double v : p.value->values()) w.put<double>(v);
  }
  return std::move(w.out);
}

Network load_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw FormatError("not a mammo CNN checkpoint (bad magic)");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  NetworkConfig cfg;
  cfg.input_size = r.u32();
  cfg.num_classes = r.u32();
  cfg.feature_dim = r.u32();
  const auto layer_count = r.u32();
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec l;
    const auto kind = r.uint(1);
    if (kind < 1 || kind > 5) throw FormatError("checkpoint: unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.channels = r.u32();
    l.kernel = r.u32();
    l.stride = r.u32();
    l.padding = r.u32();
    cfg.layers.push_back(l);
  }
  Network model(cfg, 0);
  auto params = model.parameters();
  const auto count = r.u32();
  if (count != params.size()) throw FormatError("checkpoint: tensor count does not match architecture");
  for (auto& p : params) {
    const std::string name = r.str(r.u32());
    if (name != p.name) throw FormatError("checkpoint: expected tensor " + p.name + ", found " + name);
    Shape shape(r.u32());
    for (auto& e : shape) e = r.uint(8);
    if (shape != p.value->shape()) throw FormatError("checkpoint: shape mismatch for " + name);
    for (auto& v : p.value->values()) v = r.f64();
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return model;
}

void save_checkpoint_file(Network& model, const std::filesystem::path& path) {
  write_file(path, save_checkpoint(model));
}

Network load_checkpoint_file(const std::filesystem::path& path) { return load_checkpoint(read_file(path)); }

}  // namespace mammo::cnn
