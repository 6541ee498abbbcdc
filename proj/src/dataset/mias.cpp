#include "mammo/mias.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mammo/errors.hpp"
#include "mammo/imgproc.hpp"
#include "mammo/pnm_io.hpp"

namespace mammo::mias {
namespace {

std::optional<std::size_t> parse_uint(std::string_view s) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Abnormality> parse_abnormality(std::string_view s) {
  static const std::pair<std::string_view, Abnormality> codes[] = {
      {"CALC", Abnormality::Calc}, {"CIRC", Abnormality::Circ}, {"SPIC", Abnormality::Spic},
      {"MISC", Abnormality::Misc}, {"ARCH", Abnormality::Arch}, {"ASYM", Abnormality::Asym},
      {"NORM", Abnormality::Norm}};
  for (const auto& [code, a] : codes)
    if (s == code) return a;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Abnormality a) noexcept {
  switch (a) {
    case Abnormality::Calc: return "CALC";
    case Abnormality::Circ: return "CIRC";
    case Abnormality::Spic: return "SPIC";
    case Abnormality::Misc: return "MISC";
    case Abnormality::Arch: return "ARCH";
    case Abnormality::Asym: return "ASYM";
    case Abnormality::Norm: return "NORM";
  }
  return "?";
}

std::vector<Record> parse_info(std::string_view text) {
  std::vector<Record> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() < 3) throw ParseError("expected at least id, tissue and abnormality", line_no);

    Record r;
    r.id = tok[0];
    if (tok[1] == "F") r.tissue = Tissue::Fatty;
    else if (tok[1] == "G") r.tissue = Tissue::Glandular;
    else if (tok[1] == "D") r.tissue = Tissue::Dense;
    else throw ParseError("unknown tissue code '" + tok[1] + "'", line_no);

    const auto abn = parse_abnormality(tok[2]);
    if (!abn) throw ParseError("unknown abnormality code '" + tok[2] + "'", line_no);
    r.abnormality = *abn;

    if (r.abnormality == Abnormality::Norm) {
      if (tok.size() > 3) throw ParseError("NORM record carries severity or geometry", line_no);
      out.push_back(std::move(r));
      continue;
    }
    if (tok.size() > 3) {
      if (tok[3] == "B") r.severity = Severity::Benign;
      else if (tok[3] == "M") r.severity = Severity::Malignant;
      else throw ParseError("unknown severity '" + tok[3] + "'", line_no);
    }
    // Some published lines omit or annotate the geometry; keep it only when
    // all three fields are integers.
    if (tok.size() >= 7) {
      const auto x = parse_uint(tok[4]), y = parse_uint(tok[5]), rad = parse_uint(tok[6]);
      if (x && y && rad) {
        if (*x >= 1024 || *y >= 1024) throw ParseError("lesion center outside 1024x1024", line_no);
        r.x = x;
        r.y = y;
        r.radius = rad;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

LoadResult load_dataset(const std::filesystem::path& image_dir, const std::filesystem::path& info_path,
                        const LoadOptions& options) {
  std::ifstream f(info_path);
  if (!f) throw IoError("cannot open MIAS info file: " + info_path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto records = parse_info(ss.str());

  LoadResult out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto it = index.find(r.id);
    if (it == index.end()) {
      const auto path = image_dir / (r.id + ".pgm");
      if (!std::filesystem::exists(path)) throw IoError("missing image for " + r.id + ": " + path.string());
      GrayImage img = read_pgm_file(path);
      if (options.max_side > 0 && std::max(img.width(), img.height()) > options.max_side) {
        const double s = static_cast<double>(options.max_side) / static_cast<double>(std::max(img.width(), img.height()));
        img = resize_bilinear(img, std::max<std::size_t>(1, static_cast<std::size_t>(img.width() * s)),
                              std::max<std::size_t>(1, static_cast<std::size_t>(img.height() * s)));
      }
      index.emplace(r.id, out.items.size());
      out.items.push_back({std::move(img), r.abnormal() ? Label::Abnormal : Label::Normal, {r}});
    } else {
      auto& item = out.items[it->second];
      item.records.push_back(r);
      if (r.abnormal()) item.label = Label::Abnormal;
    }
  }
  const auto abnormal = static_cast<std::size_t>(std::count_if(
      out.items.begin(), out.items.end(), [](const LabeledImage& i) { return i.label == Label::Abnormal; }));
  if (out.items.size() != kExpectedImages) {
    out.warnings.push_back("expected " + std::to_string(kExpectedImages) + " images, found " +
                           std::to_string(out.items.size()));
  }
  if (abnormal != kExpectedAbnormal) {
    out.warnings.push_back("expected " + std::to_string(kExpectedAbnormal) + " abnormal images, found " +
                           std::to_string(abnormal));
  }
  return out;
}

BinaryMask ground_truth_mask(const Record& record, std::size_t width, std::size_t height) {
  return ground_truth_mask(std::span<const Record>(&record, 1), width, height);
}

BinaryMask ground_truth_mask(std::span<const Record> records, std::size_t width, std::size_t height) {
  BinaryMask mask(width, height);
  bool any = false;
  for (const auto& r : records) {
    if (!r.abnormal()) throw ArgumentError("ground_truth_mask: NORM record " + r.id + " has no lesion");
    if (!r.has_geometry()) continue;
    any = true;
    const auto cx = static_cast<double>(*r.x);
    const double cy = static_cast<double>(height) - static_cast<double>(*r.y);
    const auto rad = static_cast<double>(*r.radius);
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor(cy - rad));
    const auto r1 = static_cast<std::ptrdiff_t>(std::ceil(cy + rad));
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor(cx - rad));
    const auto c1 = static_cast<std::ptrdiff_t>(std::ceil(cx + rad));
    for (std::ptrdiff_t row = std::max<std::ptrdiff_t>(r0, 0);
         row <= std::min<std::ptrdiff_t>(r1, static_cast<std::ptrdiff_t>(height) - 1); ++row) {
      for (std::ptrdiff_t col = std::max<std::ptrdiff_t>(c0, 0);
           col <= std::min<std::ptrdiff_t>(c1, static_cast<std::ptrdiff_t>(width) - 1); ++col) {
        const double dx = static_cast<double>(col) - cx, dy = static_cast<double>(row) - cy;
        if (dx * dx + dy * dy <= rad * rad) mask.set(static_cast<std::size_t>(row), static_cast<std::size_t>(col), true);
      }
    }
  }
  if (!any) throw ArgumentError("ground_truth_mask: no record with lesion geometry");
  return mask;
}

}  // namespace mammo::mias
