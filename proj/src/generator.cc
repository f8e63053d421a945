#include "maskval/generator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "maskval/metrics.h"
#include "maskval/renderer.h"

namespace maskval {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vec3 RandomUnitVector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Mat3 RandomRotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    if (q.norm() > 1e-12) return q.normalized().toRotationMatrix();
  }
}

// Pixels set in `mask` padded by `pad`, clamped to the image.
struct Box {
  int x0, y0, x1, y1;  // inclusive
  bool empty() const { return x1 < x0; }
};

Box OnesBox(const BinaryMask& mask, int pad) {
  Box b{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  if (b.empty()) return b;
  b.x0 = std::max(0, b.x0 - pad);
  b.y0 = std::max(0, b.y0 - pad);
  b.x1 = std::min(mask.width() - 1, b.x1 + pad);
  b.y1 = std::min(mask.height() - 1, b.y1 + pad);
  return b;
}

// Morphology with a disk; `dilate` selects max vs min. Pixels outside the
// image count as background.
BinaryMask Morph(const BinaryMask& mask, int radius, bool dilate) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
    }
  }
  BinaryMask out(mask.width(), mask.height(), 0);
  const Box b = OnesBox(mask, dilate ? radius : 0);
  if (b.empty()) return out;
  for (int y = b.y0; y <= b.y1; ++y) {
    for (int x = b.x0; x <= b.x1; ++x) {
      bool any = false, all = true;
      for (const auto& [dx, dy] : offsets) {
        const int sx = x + dx, sy = y + dy;
        const bool on = sx >= 0 && sy >= 0 && sx < mask.width() &&
                        sy < mask.height() && mask.at(sx, sy);
        any |= on;
        all &= on;
      }
      out.at(x, y) = (dilate ? any : all) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

void PerturbationSpec::Validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be >= 0");
    }
  };
  nonneg(translation_sigma, "translation_sigma");
  nonneg(rotation_sigma_deg, "rotation_sigma");
  nonneg(outlier_translation, "outlier_translation");
  nonneg(noise_scale_spread, "noise_scale_spread");
  if (mask_radius < 0) throw std::invalid_argument("mask_radius must be >= 0");
  if (!(outlier_probability >= 0.0 && outlier_probability <= 1.0)) {
    throw std::invalid_argument("outlier_probability must lie in [0, 1]");
  }
  if (!(mask_dropout >= 0.0 && mask_dropout <= 1.0)) {
    throw std::invalid_argument("mask_dropout must lie in [0, 1]");
  }
}

PerturbationSpec PerturbationSpec::Scaled(double factor) const {
  PerturbationSpec s = *this;
  s.translation_sigma *= factor;
  s.rotation_sigma_deg *= factor;
  return s;
}

void GeneratorConfig::Validate() const {
  if (n_images < 1) throw std::invalid_argument("n_images must be >= 1");
  if (min_objects < 1 || max_objects < min_objects) {
    throw std::invalid_argument("need 1 <= min_objects <= max_objects");
  }
  if (!(min_depth > kNearPlane) || !(max_depth >= min_depth)) {
    throw std::invalid_argument("need 0 < min_depth <= max_depth");
  }
  if (max_placement_attempts < 1) {
    throw std::invalid_argument("max_placement_attempts must be >= 1");
  }
  primary.Validate();
  if (secondary) secondary->Validate();
}

std::uint64_t ImageSeed(std::uint64_t seed, std::uint64_t index,
                        std::uint64_t stream) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ index) ^ stream);
}

Pose PerturbPose(const Pose& gt, const PerturbationSpec& spec,
                 std::mt19937_64& rng) {
  double scale = 1.0;
  if (spec.noise_scale_spread > 0.0) {
    std::normal_distribution<double> log_scale(0.0, spec.noise_scale_spread);
    scale = std::exp(log_scale(rng));
  }
  Mat3 rotation = gt.rotation();
  if (spec.rotation_sigma_deg > 0.0) {
    std::normal_distribution<double> angle(0.0,
                                           spec.rotation_sigma_deg * scale);
    const double rad = std::abs(angle(rng)) * kPi / 180.0;
    const Vec3 axis = RandomUnitVector(rng);
    rotation = Eigen::AngleAxisd(rad, axis).toRotationMatrix() * rotation;
  }
  Vec3 translation = gt.translation();
  if (spec.translation_sigma > 0.0) {
    std::normal_distribution<double> offset(0.0,
                                            spec.translation_sigma * scale);
    translation += Vec3(offset(rng), offset(rng), offset(rng));
  }
  if (spec.outlier_probability > 0.0) {
    std::bernoulli_distribution outlier(spec.outlier_probability);
    if (outlier(rng)) {
      translation += spec.outlier_translation * RandomUnitVector(rng);
    }
  }
  return Pose::FromApproximateRotation(rotation, translation);
}

BinaryMask Erode(const BinaryMask& mask, int radius) {
  return Morph(mask, radius, false);
}

BinaryMask Dilate(const BinaryMask& mask, int radius) {
  return Morph(mask, radius, true);
}

BinaryMask DegradeMask(const BinaryMask& mask, const PerturbationSpec& spec,
                       std::mt19937_64& rng) {
  BinaryMask out = mask;
  if (spec.mask_radius > 0) {
    std::uniform_int_distribution<int> radius(0, spec.mask_radius);
    std::bernoulli_distribution grow(0.5);
    const int r = radius(rng);
    out = grow(rng) ? Dilate(out, r) : Erode(out, r);
  }
  if (spec.mask_dropout > 0.0) {
    std::bernoulli_distribution drop(spec.mask_dropout);
    for (auto& v : out.data()) {
      if (v && drop(rng)) v = 0;
    }
  }
  return out;
}

SceneRecord GenerateScene(const std::map<std::string, TriangleMesh>& models,
                          const CameraIntrinsics& k,
                          const GeneratorConfig& config, std::uint64_t index) {
  config.Validate();
  k.Validate();
  if (models.empty()) throw std::invalid_argument("no models to place");

  std::mt19937_64 scene_rng(ImageSeed(config.seed, index, 0));
  std::mt19937_64 mask_rng(ImageSeed(config.seed, index, 1));
  std::mt19937_64 primary_rng(ImageSeed(config.seed, index, 2));
  std::mt19937_64 secondary_rng(ImageSeed(config.seed, index, 3));

  std::vector<std::string> classes;
  for (const auto& [name, mesh] : models) classes.push_back(name);

  SceneRecord scene;
  char id[32];
  std::snprintf(id, sizeof(id), "%06llu",
                static_cast<unsigned long long>(index));
  scene.image_id = id;
  scene.camera = k;

  std::uniform_int_distribution<int> count_dist(config.min_objects,
                                                config.max_objects);
  std::uniform_int_distribution<std::size_t> class_dist(0, classes.size() - 1);
  std::uniform_real_distribution<double> depth_dist(config.min_depth,
                                                    config.max_depth);
  std::uniform_real_distribution<double> u_dist(0.0, k.width);
  std::uniform_real_distribution<double> v_dist(0.0, k.height);

  const int n_objects = count_dist(scene_rng);
  struct Placed {
    std::string cls;
    Pose pose;
    double radius;
  };
  std::vector<Placed> placed;
  for (int obj = 0; obj < n_objects; ++obj) {
    const std::string& cls = classes[class_dist(scene_rng)];
    const double radius = BoundingRadius(models.at(cls));
    bool ok = false;
    for (int attempt = 0; attempt < config.max_placement_attempts; ++attempt) {
      const Mat3 rot = RandomRotation(scene_rng);
      const double z = depth_dist(scene_rng);
      const Vec3 t = BackProject(k, u_dist(scene_rng), v_dist(scene_rng), z);
      const bool clear = std::all_of(
          placed.begin(), placed.end(), [&](const Placed& p) {
            return (p.pose.translation() - t).norm() > p.radius + radius;
          });
      if (clear) {
        placed.push_back({cls, Pose(rot, t), radius});
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::runtime_error("could not place object " +
                               std::to_string(obj) + " of image " +
                               std::to_string(index) + " without overlap");
    }
  }

  // Visible surfaces: each pixel belongs to the nearest object.
  Renderer renderer;
  std::vector<DepthMap> depths;
  std::vector<std::int64_t> canvas_pixels;
  for (const auto& p : placed) {
    RenderResult r = renderer.Render(p.pose, models.at(p.cls), k);
    canvas_pixels.push_back(r.canvas_pixels);
    depths.push_back(std::move(r.depth));
  }
  std::vector<BinaryMask> visible(placed.size(),
                                  BinaryMask(k.width, k.height, 0));
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      std::size_t owner = placed.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < placed.size(); ++i) {
        const double d = depths[i].at(x, y);
        if (d > 0.0 && d < best) {
          best = d;
          owner = i;
        }
      }
      if (owner < placed.size()) visible[owner].at(x, y) = 1;
    }
  }

  auto& primary = scene.estimates[kPrimaryStream];
  std::vector<PoseEstimate>* secondary = nullptr;
  if (config.secondary) secondary = &scene.estimates[kSecondaryStream];

  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    const auto instance = static_cast<std::int64_t>(i);
    const std::int64_t visible_pixels = visible[i].Count();
    GroundTruthObject gt;
    gt.pose = p.pose;
    gt.class_name = p.cls;
    gt.instance_id = instance;
    gt.visible_fraction =
        canvas_pixels[i] > 0
            ? static_cast<double>(visible_pixels) / canvas_pixels[i]
            : 0.0;
    scene.ground_truth.push_back(gt);
    if (visible_pixels == 0) continue;

    BinaryMask seg = DegradeMask(visible[i], config.primary, mask_rng);
    if (seg.Count() > 0) {
      scene.segmentation.push_back({std::move(seg), p.cls, instance});
    }

    const ModelPoints vertices = VertexPoints(models.at(p.cls));
    auto make_estimate = [&](const PerturbationSpec& spec,
                             std::mt19937_64& rng) {
      PoseEstimate e;
      e.pose = PerturbPose(p.pose, spec, rng);
      e.class_name = p.cls;
      e.instance_id = instance;
      e.true_mdd = Mdd(e.pose, p.pose, vertices);
      return e;
    };
    primary.push_back(make_estimate(config.primary, primary_rng));
    if (secondary) {
      secondary->push_back(make_estimate(*config.secondary, secondary_rng));
    }
  }
  return scene;
}

std::vector<SceneRecord> GenerateBenchmark(
    const std::map<std::string, TriangleMesh>& models,
    const CameraIntrinsics& k, const GeneratorConfig& config) {
  config.Validate();
  std::vector<SceneRecord> scenes;
  scenes.reserve(config.n_images);
  for (int i = 0; i < config.n_images; ++i) {
    scenes.push_back(GenerateScene(models, k, config, i));
  }
  return scenes;
}

TriangleMesh MakeBox(const Vec3& size, const Vec3& center) {
  TriangleMesh mesh;
  const Vec3 h = 0.5 * size;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back(center.x() + ((i & 1) ? h.x() : -h.x()),
                               center.y() + ((i & 2) ? h.y() : -h.y()),
                               center.z() + ((i & 4) ? h.z() : -h.z()));
  }
  mesh.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},
                    {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},
                    {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return mesh;
}

TriangleMesh MergeMeshes(const std::vector<TriangleMesh>& parts) {
  TriangleMesh out;
  for (const auto& part : parts) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(),
                        part.vertices.end());
    for (const auto& t : part.triangles) {
      out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
  }
  return out;
}

std::map<std::string, TriangleMesh> BuiltinModels() {
  auto recenter = [](TriangleMesh mesh) {
    Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
    for (const auto& v : mesh.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const Vec3 c = 0.5 * (lo + hi);
    for (auto& v : mesh.vertices) v -= c;
    return mesh;
  };
  std::map<std::string, TriangleMesh> models;
  models["antenna"] = recenter(MergeMeshes({
      MakeBox(Vec3(0.012, 0.012, 0.11), Vec3(0.0, 0.0, 0.015)),
      MakeBox(Vec3(0.04, 0.026, 0.008), Vec3(0.008, 0.0, -0.044)),
  }));
  models["handle"] = recenter(MergeMeshes({
      MakeBox(Vec3(0.11, 0.018, 0.016), Vec3(0.0, 0.0, 0.022)),
      MakeBox(Vec3(0.016, 0.018, 0.03), Vec3(-0.047, 0.0, 0.0)),
      MakeBox(Vec3(0.016, 0.018, 0.03), Vec3(0.047, 0.0, 0.0)),
  }));
  return models;
}

CameraIntrinsics DefaultCamera() {
  CameraIntrinsics k;
  k.fx = 600.0;
  k.fy = 600.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

}  // namespace maskval
