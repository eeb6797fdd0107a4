#pragma once

#include <array>
#include <string>

#include "chronosurv/grid.hpp"

namespace chronosurv {

// Volume file format: one newline-terminated JSON header
// {"dims":[nx,ny,nz],"spacing_mm":[..],"kind":"hu"} followed by the raw
// little-endian float32 payload in x-fastest order. The collage cache uses
// the same convention with kind "collage" and dims [12,400,512]
// (channel, row, col; col-fastest).
struct VolumeHeader {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing_mm{0.0, 0.0, 0.0};
  std::string kind;
};

void write_volume(const std::string& path, const Grid3& grid,
                  const std::array<double, 3>& spacing_mm, const std::string& kind);
Grid3 read_volume(const std::string& path, VolumeHeader* header = nullptr);

void write_tensor(const std::string& path, const Tensor3& t, const std::string& kind);
Tensor3 read_tensor(const std::string& path, VolumeHeader* header = nullptr);

}  // namespace chronosurv
