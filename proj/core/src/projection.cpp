#include "chronosurv/projection.hpp"

#include <algorithm>
#include <limits>

#include "chronosurv/errors.hpp"

namespace chronosurv {

void validate(const VolumeSet& vs) {
  if (!vs.hu.same_shape(vs.suv) || !vs.hu.same_shape(vs.tumor_mask))
    throw InvalidInputError("VolumeSet: hu/suv/mask dimensions differ");
  if (vs.hu.size() == 0) throw InvalidInputError("VolumeSet: empty volume");
  for (float s : vs.suv.v)
    if (s < 0.0f) throw InvalidInputError("VolumeSet: suv must be >= 0");
  for (float m : vs.tumor_mask.v)
    if (m != 0.0f && m != 1.0f) throw InvalidInputError("VolumeSet: tumor_mask must be binary");
}

TissueMasks tissue_partition(const Grid3& hu) {
  TissueMasks m{Grid3(hu.nx, hu.ny, hu.nz), Grid3(hu.nx, hu.ny, hu.nz),
                Grid3(hu.nx, hu.ny, hu.nz), Grid3(hu.nx, hu.ny, hu.nz)};
  for (std::size_t i = 0; i < hu.size(); ++i) {
    const float v = hu.v[i];
    if (v >= 200.0f) m.bone.v[i] = 1.0f;
    else if (v >= -29.0f && v <= 150.0f) m.lean.v[i] = 1.0f;
    else if (v >= -190.0f && v <= -30.0f) m.adipose.v[i] = 1.0f;
    else if (v < -190.0f) m.air.v[i] = 1.0f;
    // (150, 200) and (-30, -29): no class.
  }
  return m;
}

namespace {

// Shared ray walk: coronal rays run over y at fixed (x, z) giving a (nz, nx)
// image; sagittal rays run over x at fixed (y, z) giving (nz, ny).
template <typename Accum>
Image2D project(const Grid3& vol, ProjectionAxis axis, Accum&& accum) {
  const int rows = vol.nz;
  const int cols = (axis == ProjectionAxis::coronal) ? vol.nx : vol.ny;
  Image2D out(rows, cols);
  for (int z = 0; z < vol.nz; ++z) {
    for (int c = 0; c < cols; ++c) {
      const int ray_len = (axis == ProjectionAxis::coronal) ? vol.ny : vol.nx;
      double acc_value = 0.0;
      bool any = false;
      long count = 0;
      for (int k = 0; k < ray_len; ++k) {
        const int x = (axis == ProjectionAxis::coronal) ? c : k;
        const int y = (axis == ProjectionAxis::coronal) ? k : c;
        accum(vol.at(x, y, z), x, y, z, acc_value, any, count);
      }
      if (count > 0) acc_value /= static_cast<double>(count);
      out.at(z, c) = any || count > 0 ? acc_value : 0.0;
    }
  }
  return out;
}

}  // namespace

Image2D mip(const Grid3& vol, ProjectionAxis axis) {
  if (vol.size() == 0) throw InvalidInputError("mip: empty volume");
  return project(vol, axis,
                 [](float v, int, int, int, double& acc, bool& any, long&) {
                   const double d = static_cast<double>(v);
                   if (!any || d > acc) acc = d;
                   any = true;
                 });
}

Image2D mip_masked(const Grid3& vol, const Grid3& mask, ProjectionAxis axis) {
  if (vol.size() == 0) throw InvalidInputError("mip_masked: empty volume");
  if (!vol.same_shape(mask)) throw InvalidInputError("mip_masked: mask shape differs");
  return project(vol, axis,
                 [&mask](float v, int x, int y, int z, double& acc, bool& any, long&) {
                   if (mask.at(x, y, z) == 0.0f) return;
                   const double d = static_cast<double>(v);
                   if (!any || d > acc) acc = d;
                   any = true;
                 });
}

Image2D aip(const Grid3& vol, const Grid3* mask, ProjectionAxis axis) {
  if (vol.size() == 0) throw InvalidInputError("aip: empty volume");
  if (mask != nullptr && !vol.same_shape(*mask)) throw InvalidInputError("aip: mask shape differs");
  return project(vol, axis,
                 [mask](float v, int x, int y, int z, double& acc, bool&, long& count) {
                   if (mask != nullptr && mask->at(x, y, z) == 0.0f) return;
                   acc += static_cast<double>(v);
                   ++count;
                 });
}

Image2D fit_canvas(const Image2D& img, int target_rows, int target_cols) {
  Image2D out(target_rows, target_cols);
  // Source window (crop) and destination offset (pad), center-aligned with
  // the extra unit going to the bottom/right.
  const int copy_rows = std::min(img.rows, target_rows);
  const int copy_cols = std::min(img.cols, target_cols);
  const int src_r0 = img.rows > target_rows ? (img.rows - target_rows) / 2 : 0;
  const int src_c0 = img.cols > target_cols ? (img.cols - target_cols) / 2 : 0;
  const int dst_r0 = img.rows < target_rows ? (target_rows - img.rows) / 2 : 0;
  const int dst_c0 = img.cols < target_cols ? (target_cols - img.cols) / 2 : 0;
  for (int r = 0; r < copy_rows; ++r)
    for (int c = 0; c < copy_cols; ++c)
      out.at(dst_r0 + r, dst_c0 + c) = img.at(src_r0 + r, src_c0 + c);
  return out;
}

const char* collage_channel_name(int channel) {
  static constexpr const char* names[kCollageChannels] = {
      "pet_mip_orig", "pet_mip_bone", "pet_mip_lean", "pet_mip_adipose", "pet_mip_air",
      "ct_aip_orig",  "ct_aip_bone",  "ct_aip_lean",  "ct_aip_adipose",  "ct_aip_air",
      "seg_mip",      "seg_aip"};
  return names[channel];
}

namespace {

void paste_channel(Tensor3& t, int channel, const Image2D& coronal, const Image2D& sagittal) {
  const Image2D co = fit_canvas(coronal);
  const Image2D sa = fit_canvas(sagittal);
  for (int r = 0; r < kCanvasRows; ++r) {
    for (int c = 0; c < kCanvasCols; ++c) {
      t.at(channel, r, c) = co.at(r, c);
      t.at(channel, r, kCanvasCols + c) = sa.at(r, c);
    }
  }
}

}  // namespace

ProjectionCollage build_collage(const VolumeSet& vs) {
  validate(vs);
  const TissueMasks tissues = tissue_partition(vs.hu);
  const Grid3* tissue_of[4] = {&tissues.bone, &tissues.lean, &tissues.adipose, &tissues.air};

  ProjectionCollage collage;
  collage.channels = Tensor3(kCollageChannels, kCollageRows, kCollageCols);
  Tensor3& t = collage.channels;

  const auto both = [](auto&& f) {
    return std::pair{f(ProjectionAxis::coronal), f(ProjectionAxis::sagittal)};
  };

  {
    auto [co, sa] = both([&](ProjectionAxis a) { return mip(vs.suv, a); });
    paste_channel(t, kPetMipOrig, co, sa);
  }
  for (int k = 0; k < 4; ++k) {
    auto [co, sa] = both([&](ProjectionAxis a) { return mip_masked(vs.suv, *tissue_of[k], a); });
    paste_channel(t, kPetMipBone + k, co, sa);
  }
  {
    auto [co, sa] = both([&](ProjectionAxis a) { return aip(vs.hu, nullptr, a); });
    paste_channel(t, kCtAipOrig, co, sa);
  }
  for (int k = 0; k < 4; ++k) {
    auto [co, sa] = both([&](ProjectionAxis a) { return aip(vs.hu, tissue_of[k], a); });
    paste_channel(t, kCtAipBone + k, co, sa);
  }
  {
    auto [co, sa] = both([&](ProjectionAxis a) { return mip_masked(vs.suv, vs.tumor_mask, a); });
    paste_channel(t, kSegMip, co, sa);
  }
  {
    auto [co, sa] = both([&](ProjectionAxis a) { return aip(vs.suv, &vs.tumor_mask, a); });
    paste_channel(t, kSegAip, co, sa);
  }
  return collage;
}

}  // namespace chronosurv
