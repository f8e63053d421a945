#include "maskval/geometry.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace maskval {
namespace {

void CheckRotation(const Mat3& r) {
  const double ortho = OrthonormalityError(r);
  const double det = r.determinant();
  if (!(ortho < kRotationTolerance) ||
      !(std::abs(det - 1.0) <= kRotationTolerance)) {
    throw std::invalid_argument(
        "not a rotation matrix: ||R^T R - I|| = " + std::to_string(ortho) +
        ", det = " + std::to_string(det));
  }
}

}  // namespace

Pose::Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  CheckRotation(rotation_);
  if (!translation_.allFinite()) {
    throw std::invalid_argument("translation is not finite");
  }
}

Pose Pose::FromQuaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  if (q.norm() == 0.0) throw std::invalid_argument("zero quaternion");
  return Pose(q.normalized().toRotationMatrix(), t);
}

Pose Pose::FromAxisAngle(const Vec3& axis, double angle_rad, const Vec3& t) {
  const double n = axis.norm();
  if (n == 0.0) {
    if (angle_rad != 0.0) throw std::invalid_argument("zero rotation axis");
    return Pose(Mat3::Identity(), t);
  }
  return Pose(Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix(), t);
}

Pose Pose::FromApproximateRotation(const Mat3& rotation,
                                   const Vec3& translation) {
  if (!rotation.allFinite()) {
    throw std::invalid_argument("rotation is not finite");
  }
  const double ortho = OrthonormalityError(rotation);
  const double det = rotation.determinant();
  if (ortho < kRotationTolerance &&
      std::abs(det - 1.0) <= kRotationTolerance) {
    return Pose(rotation, translation);
  }
  if (ortho < kRotationRepairLimit && det > 0.0) {
    return Pose(NearestRotation(rotation), translation);
  }
  throw std::invalid_argument("rotation deviates from SO(3) by " +
                              std::to_string(ortho) + " (det " +
                              std::to_string(det) + ")");
}

Pose Pose::Inverse() const {
  Pose inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

double OrthonormalityError(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity()).norm();
}

Mat3 NearestRotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) ||
      !std::isfinite(fy)) {
    throw std::invalid_argument("focal lengths must be positive");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw std::invalid_argument("principal point must be finite");
  }
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image size must be at least 1x1");
  }
}

Projection Project(const CameraIntrinsics& k, const Vec3& point_cam) {
  Projection p;
  p.z = point_cam.z();
  if (p.z <= 0.0) {
    p.behind_camera = true;
    return p;
  }
  p.u = k.fx * point_cam.x() / p.z + k.cx;
  p.v = k.fy * point_cam.y() / p.z + k.cy;
  return p;
}

Vec3 BackProject(const CameraIntrinsics& k, double u, double v, double z) {
  return Vec3((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
}

void TriangleMesh::Validate() const {
  if (triangles.empty()) throw std::invalid_argument("mesh has no triangles");
  for (const auto& tri : triangles) {
    for (auto idx : tri) {
      if (idx >= vertices.size()) {
        throw std::invalid_argument("triangle index " + std::to_string(idx) +
                                    " out of range (" +
                                    std::to_string(vertices.size()) +
                                    " vertices)");
      }
    }
  }
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw std::invalid_argument("non-finite vertex");
  }
}

double TriangleMesh::SurfaceArea() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    area += 0.5 * (vertices[t[1]] - vertices[t[0]])
                      .cross(vertices[t[2]] - vertices[t[0]])
                      .norm();
  }
  return area;
}

void ModelPoints::Validate() const {
  if (points.empty()) throw std::invalid_argument("empty model point set");
  for (const auto& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("non-finite model point");
  }
}

ModelPoints TransformPoints(const Pose& pose, const ModelPoints& points) {
  ModelPoints out;
  out.points.reserve(points.points.size());
  for (const auto& p : points.points) out.points.push_back(pose.Apply(p));
  return out;
}

ModelPoints SampleModelPoints(const TriangleMesh& mesh, std::size_t n,
                              std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample count must be positive");
  mesh.Validate();
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                       .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                       .norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw std::invalid_argument("mesh has zero area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelPoints out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& t = mesh.triangles[it - cumulative.begin()];
    // Square-root warp gives a uniform density over the triangle.
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    out.points.push_back((1.0 - r1) * mesh.vertices[t[0]] +
                         r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                         r1 * r2 * mesh.vertices[t[2]]);
  }
  return out;
}

ModelPoints VertexPoints(const TriangleMesh& mesh) {
  ModelPoints out;
  out.points = mesh.vertices;
  return out;
}

double BoundingRadius(const TriangleMesh& mesh) {
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, v.norm());
  return r;
}

}  // namespace maskval
