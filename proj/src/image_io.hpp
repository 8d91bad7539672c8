#pragma once

#include "jointsparse/core.hpp"

#include <array>
#include <filesystem>

namespace jointsparse::app {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar image with values in [0,1]; plane c is row-major height x width.
struct Image {
  Index width = 0;
  Index height = 0;
  std::vector<Vector<double>> planes;

  Index channels() const { return static_cast<Index>(planes.size()); }
  static Image blank(Index width, Index height, Index channels);
};

/// Reads binary 8-bit PPM (P6, three planes) or PGM (P5, one plane).
Image read_pnm(const std::filesystem::path& path);

/// Writes P6 for three planes and P5 for one; values are clamped to [0,1]
/// and rounded to 8 bits.
void write_pnm(const std::filesystem::path& path, const Image& img);

/// NTSC YIQ from RGB and back; the inverse is the exact matrix inverse.
std::array<Vector<double>, 3> rgb_to_yiq(const Image& rgb);
Image yiq_to_rgb(const std::array<Vector<double>, 3>& yiq, Index width, Index height);

}  // namespace jointsparse::app
