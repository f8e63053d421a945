#pragma once

// Rigid transforms, pinhole projection and model-point utilities.
//
// Camera convention used everywhere in this library: +z forward, +x right,
// +y down. Pixel (0,0) is the top-left pixel and pixel centers sit at
// integer + 0.5.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace maskval {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Tolerance on ||R^T R - I||_F and |det R - 1| for a valid rotation.
inline constexpr double kRotationTolerance = 1e-6;
// Rotations deviating by less than this are re-orthonormalized on ingestion.
inline constexpr double kRotationRepairLimit = 1e-3;

// Rotation + translation (meters) of an object in the camera frame.
class Pose {
 public:
  // Identity.
  Pose();
  // Throws std::invalid_argument if `rotation` is not within
  // kRotationTolerance of SO(3).
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose FromQuaternion(const Eigen::Quaterniond& q, const Vec3& t);
  // `axis` need not be normalized; a zero axis requires a zero angle.
  static Pose FromAxisAngle(const Vec3& axis, double angle_rad, const Vec3& t);
  // Accepts slightly non-orthonormal input (as found in rounded files):
  // deviations below kRotationRepairLimit are projected back onto SO(3),
  // anything larger throws std::invalid_argument.
  static Pose FromApproximateRotation(const Mat3& rotation,
                                      const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 Apply(const Vec3& x) const { return rotation_ * x + translation_; }
  Pose Inverse() const;

  // (this * other) applies `other` first.
  Pose operator*(const Pose& other) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Frobenius norm of R^T R - I.
double OrthonormalityError(const Mat3& rotation);
// Nearest rotation matrix in the Frobenius sense (SVD polar factor).
Mat3 NearestRotation(const Mat3& m);

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws std::invalid_argument on non-positive focal lengths or sizes.
  void Validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  bool behind_camera = false;
};

// u = fx x / z + cx, v = fy y / z + cy. Points with z <= 0 are flagged
// behind_camera and u, v are left at zero.
Projection Project(const CameraIntrinsics& k, const Vec3& point_cam);
// Inverse of Project for a known depth.
Vec3 BackProject(const CameraIntrinsics& k, double u, double v, double z);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  // Throws std::invalid_argument on out-of-range indices or no triangles.
  void Validate() const;
  double SurfaceArea() const;
};

struct ModelPoints {
  std::vector<Vec3> points;

  // Throws std::invalid_argument if empty or non-finite.
  void Validate() const;
};

ModelPoints TransformPoints(const Pose& pose, const ModelPoints& points);

// Area-uniform samples on the mesh surface, deterministic for `seed`.
// Throws std::invalid_argument if n == 0 or the mesh has zero area.
ModelPoints SampleModelPoints(const TriangleMesh& mesh, std::size_t n,
                              std::uint64_t seed);

// Mesh vertices as a point cloud. For any pair of rigid transforms the
// point-wise displacement norm is convex, so its maximum over the surface is
// attained at a vertex.
ModelPoints VertexPoints(const TriangleMesh& mesh);

// Radius of the smallest origin-centered sphere containing all vertices.
double BoundingRadius(const TriangleMesh& mesh);

}  // namespace maskval
