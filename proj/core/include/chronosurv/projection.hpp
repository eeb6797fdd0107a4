#pragma once

#include <array>
#include <optional>
#include <string>

#include "chronosurv/grid.hpp"

namespace chronosurv {

// Co-registered HU / SUV / tumor-mask volumes with physical voxel spacing.
struct VolumeSet {
  Grid3 hu;
  Grid3 suv;         // >= 0 everywhere
  Grid3 tumor_mask;  // values in {0, 1}
  std::array<double, 3> spacing_mm{2.04, 2.04, 3.00};
};

void validate(const VolumeSet& vs);

// Per-voxel HU classes. The intervals come straight from the thresholds:
// bone i >= 200, lean -29 <= i <= 150, adipose -190 <= i <= -30, air
// i < -190. Voxels falling in the gaps (150, 200) and (-30, -29) belong to
// no class; they are left unassigned rather than folded into a neighbor.
struct TissueMasks {
  Grid3 bone, lean, adipose, air;
};

TissueMasks tissue_partition(const Grid3& hu);

enum class ProjectionAxis { coronal, sagittal };

// Maximum intensity projection. Coronal collapses y (image = z rows, x cols);
// sagittal collapses x (image = z rows, y cols).
Image2D mip(const Grid3& vol, ProjectionAxis axis);

// Masked MIP: max over voxels with mask != 0; 0 where the ray hits no mask
// voxel. Used for the tissue-wise PET channels.
Image2D mip_masked(const Grid3& vol, const Grid3& mask, ProjectionAxis axis);

// Average intensity projection; with a mask, the mean over masked voxels
// only, 0 where the masked ray is empty.
Image2D aip(const Grid3& vol, const Grid3* mask, ProjectionAxis axis);

inline constexpr int kCanvasRows = 400;
inline constexpr int kCanvasCols = 256;
inline constexpr int kCollageChannels = 12;
inline constexpr int kCollageRows = 400;
inline constexpr int kCollageCols = 512;

// Center-crops dimensions larger than target and symmetrically zero-pads
// dimensions smaller; odd remainders put the extra row/col at the
// bottom/right.
Image2D fit_canvas(const Image2D& img, int target_rows = kCanvasRows, int target_cols = kCanvasCols);

// The 12-channel 400x512 model input: each channel is the coronal projection
// (left 400x256 half) next to the sagittal projection (right half).
struct ProjectionCollage {
  Tensor3 channels;  // 12 x 400 x 512
};

// Fixed channel order of the collage.
enum CollageChannel : int {
  kPetMipOrig = 0,
  kPetMipBone = 1,
  kPetMipLean = 2,
  kPetMipAdipose = 3,
  kPetMipAir = 4,
  kCtAipOrig = 5,
  kCtAipBone = 6,
  kCtAipLean = 7,
  kCtAipAdipose = 8,
  kCtAipAir = 9,
  kSegMip = 10,
  kSegAip = 11,
};

const char* collage_channel_name(int channel);

ProjectionCollage build_collage(const VolumeSet& vs);

}  // namespace chronosurv
