#include "maskval/renderer.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace maskval {
namespace {

// Twice the signed area of (a, b, p); positive when p is on the interior side
// of a -> b for a positively wound triangle.
template <typename V>
double Edge(const V& a, const V& b, double pu, double pv) {
  // Evaluate in a fixed vertex order so a shared edge yields exactly opposite
  // values in both triangles and no pixel center falls through the crack.
  if (b.u < a.u || (b.u == a.u && b.v < a.v)) {
    return -((a.u - b.u) * (pv - b.v) - (a.v - b.v) * (pu - b.u));
  }
  return (b.u - a.u) * (pv - a.v) - (b.v - a.v) * (pu - a.u);
}

// Edge a -> b with interior on its positive side. With +y pointing down, a
// left edge runs upward and a top edge is horizontal running right.
template <typename V>
bool IsTopLeft(const V& a, const V& b) {
  const double du = b.u - a.u;
  const double dv = b.v - a.v;
  return dv < 0.0 || (dv == 0.0 && du > 0.0);
}

bool Covers(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

int ClampToInt(double x, int lo, int hi) {
  if (!(x > lo)) return lo;
  if (!(x < hi)) return hi;
  return static_cast<int>(x);
}

}  // namespace

Renderer::Renderer(int pad_factor) : pad_factor_(pad_factor) {
  if (pad_factor < 1) throw std::invalid_argument("pad_factor must be >= 1");
}

RenderResult Renderer::Render(const Pose& pose, const TriangleMesh& mesh,
                              const CameraIntrinsics& k) {
  k.Validate();
  mesh.Validate();

  x0_ = -((pad_factor_ - 1) * k.width) / 2;
  y0_ = -((pad_factor_ - 1) * k.height) / 2;
  cw_ = pad_factor_ * k.width;
  ch_ = pad_factor_ * k.height;
  const std::size_t cells = static_cast<std::size_t>(cw_) * ch_;
  if (zbuffer_.size() != cells) zbuffer_.assign(cells, 0.0);
  dirty_min_x_ = cw_;
  dirty_min_y_ = ch_;
  dirty_max_x_ = -1;
  dirty_max_y_ = -1;

  std::vector<Vec3> cam;
  cam.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) cam.push_back(pose.Apply(v));

  auto to_screen = [&k](const Vec3& p) {
    return ScreenVertex{k.fx * p.x() / p.z() + k.cx,
                        k.fy * p.y() / p.z() + k.cy, p.z()};
  };

  for (const auto& tri : mesh.triangles) {
    const std::array<Vec3, 3> in = {cam[tri[0]], cam[tri[1]], cam[tri[2]]};
    if (in[0].z() > kNearPlane && in[1].z() > kNearPlane &&
        in[2].z() > kNearPlane) {
      RasterizeTriangle(to_screen(in[0]), to_screen(in[1]), to_screen(in[2]));
      continue;
    }
    // Sutherland-Hodgman against z >= near: at most four output vertices.
    std::array<Vec3, 4> poly;
    int n = 0;
    for (int i = 0; i < 3; ++i) {
      const Vec3& cur = in[i];
      const Vec3& nxt = in[(i + 1) % 3];
      const bool cur_in = cur.z() >= kNearPlane;
      const bool nxt_in = nxt.z() >= kNearPlane;
      if (cur_in) poly[n++] = cur;
      if (cur_in != nxt_in) {
        const double t = (kNearPlane - cur.z()) / (nxt.z() - cur.z());
        Vec3 hit = cur + t * (nxt - cur);
        hit.z() = kNearPlane;
        poly[n++] = hit;
      }
    }
    if (n < 3) continue;
    const ScreenVertex s0 = to_screen(poly[0]);
    for (int i = 1; i + 1 < n; ++i) {
      RasterizeTriangle(s0, to_screen(poly[i]), to_screen(poly[i + 1]));
    }
  }

  RenderResult result;
  result.depth = DepthMap(k.width, k.height, 0.0);
  for (int cy = dirty_min_y_; cy <= dirty_max_y_; ++cy) {
    double* row = zbuffer_.data() + static_cast<std::size_t>(cy) * cw_;
    const int img_y = cy + y0_;
    for (int cx = dirty_min_x_; cx <= dirty_max_x_; ++cx) {
      const double z = row[cx];
      if (z <= 0.0) continue;
      ++result.canvas_pixels;
      if (cx == 0 || cy == 0 || cx == cw_ - 1 || cy == ch_ - 1) {
        result.truncated = true;
      }
      const int img_x = cx + x0_;
      if (img_x >= 0 && img_x < k.width && img_y >= 0 && img_y < k.height) {
        ++result.window_pixels;
        result.depth.at(img_x, img_y) = z;
      }
      row[cx] = 0.0;
    }
  }
  if (result.canvas_pixels > 0) {
    result.visibility = static_cast<double>(result.window_pixels) /
                        static_cast<double>(result.canvas_pixels);
  }
  return result;
}

void Renderer::RasterizeTriangle(const ScreenVertex& a, const ScreenVertex& b_in,
                                 const ScreenVertex& c_in) {
  ScreenVertex b = b_in;
  ScreenVertex c = c_in;
  double area = Edge(a, b, c.u, c.v);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(b, c);
    area = -area;
  }

  const double min_u = std::min({a.u, b.u, c.u});
  const double max_u = std::max({a.u, b.u, c.u});
  const double min_v = std::min({a.v, b.v, c.v});
  const double max_v = std::max({a.v, b.v, c.v});
  // Pixel n has center n + 0.5; keep candidates whose center can be inside.
  const int px_lo = ClampToInt(std::ceil(min_u - 0.5), x0_, x0_ + cw_);
  const int px_hi = ClampToInt(std::floor(max_u - 0.5), x0_ - 1, x0_ + cw_ - 1);
  const int py_lo = ClampToInt(std::ceil(min_v - 0.5), y0_, y0_ + ch_);
  const int py_hi = ClampToInt(std::floor(max_v - 0.5), y0_ - 1, y0_ + ch_ - 1);
  if (px_lo > px_hi || py_lo > py_hi) return;

  const bool tl_bc = IsTopLeft(b, c);
  const bool tl_ca = IsTopLeft(c, a);
  const bool tl_ab = IsTopLeft(a, b);
  const double inv_za = 1.0 / a.z;
  const double inv_zb = 1.0 / b.z;
  const double inv_zc = 1.0 / c.z;

  for (int py = py_lo; py <= py_hi; ++py) {
    const double pv = py + 0.5;
    const int cy = py - y0_;
    double* row = zbuffer_.data() + static_cast<std::size_t>(cy) * cw_;
    for (int px = px_lo; px <= px_hi; ++px) {
      const double pu = px + 0.5;
      const double wa = Edge(b, c, pu, pv);
      if (!Covers(wa, tl_bc)) continue;
      const double wb = Edge(c, a, pu, pv);
      if (!Covers(wb, tl_ca)) continue;
      const double wc = Edge(a, b, pu, pv);
      if (!Covers(wc, tl_ab)) continue;
      // 1/z is affine in screen space for a planar triangle.
      const double inv_z = (wa * inv_za + wb * inv_zb + wc * inv_zc) / area;
      const double z = 1.0 / inv_z;
      const int cx = px - x0_;
      double& cell = row[cx];
      if (cell == 0.0 || z < cell) {
        cell = z;
        dirty_min_x_ = std::min(dirty_min_x_, cx);
        dirty_max_x_ = std::max(dirty_max_x_, cx);
        dirty_min_y_ = std::min(dirty_min_y_, cy);
        dirty_max_y_ = std::max(dirty_max_y_, cy);
      }
    }
  }
}

RenderResult RenderDepth(const Pose& pose, const TriangleMesh& mesh,
                         const CameraIntrinsics& k, int pad_factor) {
  Renderer renderer(pad_factor);
  return renderer.Render(pose, mesh, k);
}

BinaryMask MaskFromDepth(const DepthMap& depth) {
  BinaryMask mask(depth.width(), depth.height(), 0);
  auto& out = mask.data();
  const auto& in = depth.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? 1 : 0;
  return mask;
}

}  // namespace maskval
