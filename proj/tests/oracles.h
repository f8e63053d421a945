#pragma once

// Slow reference implementations and random generators shared by the unit
// and acceptance tests. Nothing here calls into the library beyond its value
// types, so the library can be checked against it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "maskval/geometry.h"
#include "maskval/image.h"

namespace maskval::testing {

// Rodrigues' formula, written out term by term.
inline Mat3 AxisAngleMatrix(Vec3 axis, double angle) {
  axis.normalize();
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

inline Vec3 RandomUnitVector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

inline Pose RandomPose(std::mt19937_64& rng, double max_translation = 1.0) {
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  std::uniform_real_distribution<double> t(-max_translation, max_translation);
  return Pose(AxisAngleMatrix(RandomUnitVector(rng), angle(rng)),
              Vec3(t(rng), t(rng), t(rng)));
}

inline std::vector<Vec3> RandomPoints(std::mt19937_64& rng, std::size_t n,
                                      double scale = 0.1) {
  std::uniform_real_distribution<double> c(-scale, scale);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(c(rng), c(rng), c(rng));
  return pts;
}

// Triangle soup of up to `max_triangles` random triangles inside a ball of
// radius `radius`.
inline TriangleMesh RandomMesh(std::mt19937_64& rng, int max_triangles,
                               double radius) {
  std::uniform_int_distribution<int> count(1, max_triangles);
  std::uniform_real_distribution<double> c(-radius, radius);
  std::uniform_real_distribution<double> spread(0.2, 1.0);
  TriangleMesh mesh;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const Vec3 center(c(rng), c(rng), c(rng));
    const double s = spread(rng) * radius;
    const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
    for (int k = 0; k < 3; ++k) {
      Vec3 offset(c(rng), c(rng), c(rng));
      mesh.vertices.push_back(center + offset * (s / radius));
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  return mesh;
}

struct RayCast {
  DepthMap depth;
  BinaryMask mask;
};

// Per pixel center, intersect the viewing ray with every triangle
// (Moller-Trumbore) and keep the nearest hit in front of the camera.
inline RayCast RayCastDepth(const Pose& pose, const TriangleMesh& mesh,
                            const CameraIntrinsics& k) {
  RayCast out{DepthMap(k.width, k.height), BinaryMask(k.width, k.height)};
  std::vector<Vec3> cam;
  for (const auto& v : mesh.vertices) {
    cam.push_back(pose.rotation() * v + pose.translation());
  }
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 dir((x + 0.5 - k.cx) / k.fx, (y + 0.5 - k.cy) / k.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : mesh.triangles) {
        const Vec3& a = cam[t[0]];
        const Vec3 e1 = cam[t[1]] - a;
        const Vec3 e2 = cam[t[2]] - a;
        const Vec3 p = dir.cross(e2);
        const double det = e1.dot(p);
        if (std::abs(det) < 1e-15) continue;
        const Vec3 s = -a;
        const double bu = s.dot(p) / det;
        if (bu < 0.0 || bu > 1.0) continue;
        const Vec3 q = s.cross(e1);
        const double bv = dir.dot(q) / det;
        if (bv < 0.0 || bu + bv > 1.0) continue;
        const double z = e2.dot(q) / det;  // dir.z == 1, so ray t equals z
        if (z > 1e-4 && z < best) best = z;
      }
      if (std::isfinite(best)) {
        out.depth.at(x, y) = best;
        out.mask.at(x, y) = 1;
      }
    }
  }
  return out;
}

inline BinaryMask RandomMask(std::mt19937_64& rng, int w, int h, double p) {
  std::bernoulli_distribution on(p);
  BinaryMask m(w, h);
  for (auto& v : m.data()) v = on(rng) ? 1 : 0;
  return m;
}

// Exact intersection and union sizes by visiting every pixel.
inline std::pair<std::int64_t, std::int64_t> CountOverlap(const BinaryMask& a,
                                                          const BinaryMask& b) {
  std::int64_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y) != 0;
      const bool pb = b.at(x, y) != 0;
      inter += (pa && pb) ? 1 : 0;
      uni += (pa || pb) ? 1 : 0;
    }
  }
  return {inter, uni};
}

inline double DirectMdd(const Pose& a, const Pose& b,
                        const std::vector<Vec3>& pts) {
  double worst = 0.0;
  for (const auto& x : pts) {
    const Vec3 pa = a.rotation() * x + a.translation();
    const Vec3 pb = b.rotation() * x + b.translation();
    const double dx = pa.x() - pb.x(), dy = pa.y() - pb.y(),
                 dz = pa.z() - pb.z();
    worst = std::max(worst, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return worst;
}

inline double DirectAdd(const Pose& a, const Pose& b,
                        const std::vector<Vec3>& pts) {
  double sum = 0.0;
  for (const auto& x : pts) {
    const Vec3 pa = a.rotation() * x + a.translation();
    const Vec3 pb = b.rotation() * x + b.translation();
    const double dx = pa.x() - pb.x(), dy = pa.y() - pb.y(),
                 dz = pa.z() - pb.z();
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum / static_cast<double>(pts.size());
}

// Spearman correlation by explicit ranking: sort, assign tie-averaged ranks
// by scanning equal runs, then the Pearson coefficient of the ranks.
inline std::optional<double> BruteSpearman(
    const std::vector<std::pair<double, double>>& pairs) {
  const std::size_t n = pairs.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
  };
  std::vector<double> a, b;
  for (const auto& [x, y] : pairs) {
    a.push_back(x);
    b.push_back(y);
  }
  const auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

// One estimate after association: its uncertainty, its error (unset when it
// has no ground truth partner) and the partner index.
struct OracleEstimate {
  double u = 0.0;
  std::optional<double> error;
  int gt = -1;
};

struct OracleImage {
  std::vector<OracleEstimate> estimates;
  std::vector<double> gt_visible;
};

struct OracleScores {
  std::optional<double> ap, ar, aru;
};

// Per-image ratios averaged over images, computed from scratch for the
// threshold u_t.
inline OracleScores OracleEvaluate(const std::vector<OracleImage>& images,
                                   double e_t, double theta_v, double u_t) {
  double ap = 0, ar = 0, aru = 0;
  int nap = 0, nar = 0, naru = 0;
  for (const auto& img : images) {
    int tp = 0, fp = 0, tp_all = 0;
    std::vector<int> found(img.gt_visible.size(), 0);
    for (const auto& e : img.estimates) {
      const bool good = e.error.has_value() && *e.error <= e_t;
      if (good) tp_all += 1;
      if (!(e.u <= u_t)) continue;
      if (good) {
        tp += 1;
        found[e.gt] = 1;
      } else {
        fp += 1;
      }
    }
    int fn = 0;
    for (std::size_t j = 0; j < found.size(); ++j) {
      if (!found[j] && img.gt_visible[j] >= theta_v) fn += 1;
    }
    if (tp + fp > 0) {
      ap += static_cast<double>(tp) / (tp + fp);
      nap += 1;
    } else if (img.gt_visible.empty()) {
      ap += 1.0;
      nap += 1;
    }
    if (tp + fn > 0) {
      ar += static_cast<double>(tp) / (tp + fn);
      nar += 1;
    }
    if (tp_all > 0) {
      aru += static_cast<double>(tp) / tp_all;
      naru += 1;
    }
  }
  OracleScores s;
  if (nap) s.ap = ap / nap;
  if (nar) s.ar = ar / nar;
  if (naru) s.aru = aru / naru;
  return s;
}

struct OracleThreshold {
  bool feasible = false;
  double u_t = 0.0;
  OracleScores scores;
};

// Tries every candidate threshold and keeps the largest that reaches the
// target; an unset AP is treated as reaching it.
inline OracleThreshold OracleThresholdScan(
    const std::vector<OracleImage>& images, double e_t, double ap_target,
    double theta_v) {
  std::vector<double> candidates{0.0};
  for (const auto& img : images) {
    for (const auto& e : img.estimates) candidates.push_back(e.u);
  }
  OracleThreshold best;
  for (double c : candidates) {
    const OracleScores s = OracleEvaluate(images, e_t, theta_v, c);
    const bool ok = !s.ap || *s.ap >= ap_target;
    if (ok && (!best.feasible || c > best.u_t)) {
      best.feasible = true;
      best.u_t = c;
      best.scores = s;
    }
  }
  return best;
}

}  // namespace maskval::testing
