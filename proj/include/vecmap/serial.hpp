#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vecmap/geometry.hpp"

namespace vecmap {

/// A map element plus a confidence score, as emitted by inference.
struct ScoredElement {
  MapElement element;
  double score{1.0};
};

// ---------------------------------------------------------------------------
// Line-delimited element records
// ---------------------------------------------------------------------------
// One JSON object per line. The first line is a header carrying the format
// name and version; readers reject unknown major versions. Element records
// have fields {class_id, closed, points:[[x,y],...]} in metres, plus an
// optional "score" for predictions.

inline constexpr int kElementsFormatMajor = 1;
inline constexpr int kElementsFormatMinor = 0;

void write_elements(const std::filesystem::path& path,
                    const std::vector<MapElement>& elements);
void write_scored_elements(const std::filesystem::path& path,
                           const std::vector<ScoredElement>& elements);

std::vector<MapElement> read_elements(const std::filesystem::path& path);
std::vector<ScoredElement> read_scored_elements(
    const std::filesystem::path& path);

std::string element_to_json_line(const MapElement& e,
                                 std::optional<double> score = std::nullopt);

// ---------------------------------------------------------------------------
// NPY arrays
// ---------------------------------------------------------------------------
// Minimal NPY v1.0 reader/writer for the dtypes the dataset uses.

struct NpyArray {
  std::vector<std::size_t> shape;
  std::string dtype;  // "<f4", "<f8" or "|u1"
  std::vector<std::uint8_t> raw;

  std::size_t element_count() const;
  const float* as_f32() const;
  const double* as_f64() const;
  const std::uint8_t* as_u8() const;
};

void write_npy_f32(const std::filesystem::path& path,
                   const std::vector<std::size_t>& shape,
                   const float* data);
void write_npy_u8(const std::filesystem::path& path,
                  const std::vector<std::size_t>& shape,
                  const std::uint8_t* data);
NpyArray read_npy(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit. Stable across platforms; used for config and manifest
/// fingerprints.
std::uint64_t fnv1a(const std::string& data);
std::string fnv1a_hex(const std::string& data);

}  // namespace vecmap
