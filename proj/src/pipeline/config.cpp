#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "mammo/errors.hpp"
#include "mammo/pipeline.hpp"

namespace mammo {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw ArgumentError("config " + std::string(key) + ": '" + std::string(value) + "' is not " + std::string(what));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(PipelineConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class Member>
Field number(Member member) {
  return {[member](PipelineConfig& c, std::string_view k, std::string_view v) {
            using T = std::remove_reference_t<decltype(member(c))>;
            if constexpr (std::is_floating_point_v<T>) member(c) = to_double(k, v);
            else member(c) = static_cast<T>(to_uint(k, v));
          },
          [member](const PipelineConfig& c) {
            auto& m = member(const_cast<PipelineConfig&>(c));
            using T = std::remove_reference_t<decltype(m)>;
            if constexpr (std::is_floating_point_v<T>) return fmt(m);
            else return std::to_string(m);
          }};
}

// bm3d.* keys start from the noise-level defaults the first time one is set.
template <class Member>
Field bm3d_number(Member member) {
  return {[member](PipelineConfig& c, std::string_view k, std::string_view v) {
            if (!c.bm3d) c.bm3d = Bm3dProfile::for_sigma(c.noise_sigma);
            using T = std::remove_reference_t<decltype(member(*c.bm3d))>;
            if constexpr (std::is_floating_point_v<T>) member(*c.bm3d) = to_double(k, v);
            else member(*c.bm3d) = static_cast<T>(to_uint(k, v));
          },
          [member](const PipelineConfig& c) {
            Bm3dProfile p = c.bm3d_profile();
            auto m = member(p);
            if constexpr (std::is_floating_point_v<decltype(m)>) return fmt(m);
            else return std::to_string(m);
          }};
}

Field path(std::filesystem::path PipelineConfig::*member) {
  return {[member](PipelineConfig& c, std::string_view, std::string_view v) { c.*member = std::filesystem::path(v); },
          [member](const PipelineConfig& c) { return (c.*member).string(); }};
}

#define NUM(expr) number([](PipelineConfig& c) -> auto& { return expr; })
#define BM3D(field) bm3d_number([](Bm3dProfile& p) -> auto& { return p.field; })

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"pipeline.seed", NUM(c.seed)},
      {"pipeline.work_size", NUM(c.work_size)},
      {"pipeline.load_max_side", NUM(c.load_max_side)},
      {"paths.data_dir", path(&PipelineConfig::data_dir)},
      {"paths.info", path(&PipelineConfig::info_path)},
      {"paths.output_dir", path(&PipelineConfig::output_dir)},
      {"denoise.sigma", NUM(c.noise_sigma)},
      {"bm3d.k_hard", BM3D(k_hard)},
      {"bm3d.k_wie", BM3D(k_wie)},
      {"bm3d.n_hard", BM3D(n_hard)},
      {"bm3d.n_wie", BM3D(n_wie)},
      {"bm3d.lambda_3d", BM3D(lambda_3d)},
      {"bm3d.tau_hard", BM3D(tau_hard)},
      {"bm3d.tau_wie", BM3D(tau_wie)},
      {"bm3d.search_radius", BM3D(search_radius)},
      {"bm3d.step", BM3D(step)},
      {"enhance.median_window", NUM(c.enhance.median_window)},
      {"enhance.r1", NUM(c.enhance.r1)},
      {"enhance.r2", NUM(c.enhance.r2)},
      {"enhance.pectoral_tolerance", NUM(c.enhance.pectoral_tolerance)},
      {"enhance.pectoral_area_cap", NUM(c.enhance.pectoral_area_cap)},
      {"sfcm.clusters", NUM(c.sfcm.clusters)},
      {"sfcm.fuzziness", NUM(c.sfcm.fuzziness)},
      {"sfcm.p", NUM(c.sfcm.membership_exp)},
      {"sfcm.q", NUM(c.sfcm.spatial_exp)},
      {"sfcm.window_radius", NUM(c.sfcm.window_radius)},
      {"sfcm.tol", NUM(c.sfcm.tol)},
      {"sfcm.max_iter", NUM(c.sfcm.max_iter)},
      {"levelset.epsilon", NUM(c.levelset.epsilon)},
      {"levelset.b0", NUM(c.levelset.b0)},
      {"levelset.tau", NUM(c.levelset.tau)},
      {"levelset.mu", NUM(c.levelset.mu)},
      {"levelset.lambda", NUM(c.levelset.lambda)},
      {"levelset.nu", NUM(c.levelset.nu)},
      {"levelset.iterations", NUM(c.levelset.iterations)},
      {"levelset.smoothing_sigma", NUM(c.levelset.smoothing_sigma)},
      {"levelset.grad_floor", NUM(c.levelset.grad_floor)},
      {"levelset.early_stop_frac", NUM(c.levelset.early_stop_frac)},
      {"levelset.early_stop_patience", NUM(c.levelset.early_stop_patience)},
      {"network.profile",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) {
          if (v != "desk" && v != "full") bad_value(k, v, "'desk' or 'full'");
          c.network_profile = std::string(v);
        },
        [](const PipelineConfig& c) { return c.network_profile; }}},
      {"train.learning_rate", NUM(c.train.learning_rate)},
      {"train.epochs", NUM(c.train.epochs)},
      {"train.batch_size", NUM(c.train.batch_size)},
      {"train.momentum", NUM(c.train.momentum)},
      {"train.test_fraction", NUM(c.train.test_fraction)},
      {"train.augmentation",
       {[](PipelineConfig& c, std::string_view k, std::string_view v) { c.train.augmentation = to_bool(k, v); },
        [](const PipelineConfig& c) { return std::string(c.train.augmentation ? "true" : "false"); }}},
  };
  return table;
}

#undef NUM
#undef BM3D

}  // namespace

Bm3dProfile PipelineConfig::bm3d_profile() const { return bm3d ? *bm3d : Bm3dProfile::for_sigma(noise_sigma); }

cnn::NetworkConfig PipelineConfig::network() const {
  return network_profile == "full" ? cnn::NetworkConfig::full() : cnn::NetworkConfig::desk();
}

void PipelineConfig::finalize() {
  sfcm.seed = seed;
  train.seed = seed;
  if (!(noise_sigma > 0.0)) throw ArgumentError("denoise.sigma must be > 0");
  bm3d_profile().validate();
  enhance.validate();
  sfcm.validate();
  levelset.validate();
  train.validate();
  network().validate();
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ArgumentError("unknown config key '" + std::string(key) + "'");
  it->second.set(config, key, trim(value));
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'section.key = value'", line_no);
    try {
      set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  apply_config_text(c, text);
  return c;
}

std::string config_to_text(const PipelineConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace mammo
