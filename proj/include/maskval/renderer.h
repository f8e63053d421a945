#pragma once

// CPU z-buffer rasterizer for single posed meshes.
//
// A pixel is covered when its center lies inside the projected triangle,
// with the top-left rule deciding exact edge hits. Depth is camera-space z,
// interpolated perspective-correctly. There is no backface culling, and
// triangles crossing the near plane are clipped before projection.
//
// The field-of-view visibility ratio is measured on a padded canvas: the
// same intrinsics on a (pad * width) x (pad * height) canvas with the
// original image window in its center. visibility = object pixels inside the
// window / object pixels on the whole canvas.

#include <cstdint>
#include <vector>

#include "maskval/geometry.h"
#include "maskval/image.h"

namespace maskval {

inline constexpr double kNearPlane = 1e-4;
inline constexpr int kDefaultPadFactor = 3;

struct RenderResult {
  DepthMap depth;
  double visibility = 0.0;
  // Object pixels reach the outer border of the padded canvas, so the
  // visibility ratio is an upper bound.
  bool truncated = false;
  std::int64_t window_pixels = 0;
  std::int64_t canvas_pixels = 0;
};

// Owns the padded z-buffer. Not thread-safe; use one instance per thread.
class Renderer {
 public:
  explicit Renderer(int pad_factor = kDefaultPadFactor);

  int pad_factor() const { return pad_factor_; }

  // An object that is entirely behind the camera or outside the canvas
  // yields an all-zero depth map and visibility 0.
  RenderResult Render(const Pose& pose, const TriangleMesh& mesh,
                      const CameraIntrinsics& k);

 private:
  struct ScreenVertex {
    double u, v, z;
  };

  void RasterizeTriangle(const ScreenVertex& a, const ScreenVertex& b,
                         const ScreenVertex& c);

  int pad_factor_;
  // Canvas in image pixel coordinates: columns [x0_, x0_ + cw_), rows
  // [y0_, y0_ + ch_).
  int x0_ = 0, y0_ = 0, cw_ = 0, ch_ = 0;
  std::vector<double> zbuffer_;
  // Bounding box of written canvas cells, in canvas indices.
  int dirty_min_x_ = 0, dirty_min_y_ = 0, dirty_max_x_ = -1, dirty_max_y_ = -1;
};

// One-shot convenience wrapper around Renderer.
RenderResult RenderDepth(const Pose& pose, const TriangleMesh& mesh,
                         const CameraIntrinsics& k,
                         int pad_factor = kDefaultPadFactor);

// 1 where depth > 0.
BinaryMask MaskFromDepth(const DepthMap& depth);

}  // namespace maskval
