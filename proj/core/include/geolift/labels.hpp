#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace geolift {

// Integer codes are stable; rasters store them directly.
enum class SemanticLabel : std::uint8_t {
  kBuilding = 0,
  kPlants = 1,
  kPavement = 2,
  kSky = 3,
  kUnknown = 4,
};
inline constexpr int kNumSemanticLabels = 5;

enum class NormalBin : std::uint8_t {
  kGround = 0,
  kCeiling = 1,
  kWall = 2,
  kNone = 3,
};
inline constexpr int kNumNormalBins = 4;

std::string_view to_string(SemanticLabel label);
std::string_view to_string(NormalBin bin);
std::optional<SemanticLabel> parse_semantic_label(std::string_view name);

constexpr int code(SemanticLabel l) { return static_cast<int>(l); }
constexpr int code(NormalBin b) { return static_cast<int>(b); }

}  // namespace geolift
