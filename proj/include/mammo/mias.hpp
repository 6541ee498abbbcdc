#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/image.hpp"

namespace mammo::mias {

enum class Tissue { Fatty, Glandular, Dense };
enum class Abnormality { Calc, Circ, Spic, Misc, Arch, Asym, Norm };
enum class Severity { Benign, Malignant };

std::string_view to_string(Abnormality a) noexcept;

/// One line of the MIAS annotation file. Coordinates are as published
/// (origin bottom-left).
struct Record {
  std::string id;
  Tissue tissue = Tissue::Fatty;
  Abnormality abnormality = Abnormality::Norm;
  std::optional<Severity> severity;
  std::optional<std::size_t> x;
  std::optional<std::size_t> y;
  std::optional<std::size_t> radius;

  bool has_geometry() const noexcept { return x && y && radius; }
  bool abnormal() const noexcept { return abnormality != Abnormality::Norm; }
};

/// Whitespace-separated "id tissue abnormality [severity [x y radius]]" lines;
/// blank lines and lines starting with '#' are skipped.
std::vector<Record> parse_info(std::string_view text);

enum class Label { Normal = 0, Abnormal = 1 };

struct LabeledImage {
  GrayImage image;
  Label label = Label::Normal;
  std::vector<Record> records;  // every annotation for this id (multi-lesion images repeat ids)
};

struct LoadOptions {
  /// Downsample so the longer side is at most this many pixels (0 = keep).
  std::size_t max_side = 0;
};

struct LoadResult {
  std::vector<LabeledImage> items;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kExpectedImages = 322;
inline constexpr std::size_t kExpectedAbnormal = 119;

/// Pairs every distinct record id with <image_dir>/<id>.pgm.
LoadResult load_dataset(const std::filesystem::path& image_dir, const std::filesystem::path& info_path,
                        const LoadOptions& options = {});

/// Filled circle at column x, row height - y; clipped to the image.
BinaryMask ground_truth_mask(const Record& record, std::size_t width, std::size_t height);
/// Union of the circles of every record with geometry.
BinaryMask ground_truth_mask(std::span<const Record> records, std::size_t width, std::size_t height);

}  // namespace mammo::mias
