#pragma once

#include <cstddef>
#include <vector>

namespace chronosurv {

// 3D scalar grid in x-fastest order (matching the on-disk volume layout).
// Stored as float: volumes are float32 on disk and only projections do math
// on them, always accumulating in double.
struct Grid3 {
  int nx = 0, ny = 0, nz = 0;
  std::vector<float> v;

  Grid3() = default;
  Grid3(int nx_, int ny_, int nz_, float fill = 0.0f)
      : nx(nx_), ny(ny_), nz(nz_), v(static_cast<std::size_t>(nx_) * ny_ * nz_, fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * z);
  }
  float& at(int x, int y, int z) { return v[index(x, y, z)]; }
  float at(int x, int y, int z) const { return v[index(x, y, z)]; }

  bool same_shape(const Grid3& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
};

// Row-major 2D image of doubles.
struct Image2D {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Image2D() = default;
  Image2D(int rows_, int cols_, double fill = 0.0)
      : rows(rows_), cols(cols_), v(static_cast<std::size_t>(rows_) * cols_, fill) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// Channel-major (c, h, w) tensor; the model's working representation.
struct Tensor3 {
  int ch = 0, rows = 0, cols = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int ch_, int rows_, int cols_, double fill = 0.0)
      : ch(ch_), rows(rows_), cols(cols_), v(static_cast<std::size_t>(ch_) * rows_ * cols_, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t size() const { return v.size(); }
  double& at(int c, int r, int w) { return v[(static_cast<std::size_t>(c) * rows + r) * cols + w]; }
  double at(int c, int r, int w) const { return v[(static_cast<std::size_t>(c) * rows + r) * cols + w]; }
};

}  // namespace chronosurv
