#pragma once

// Synthetic desk-scale benchmark: random non-overlapping object placements,
// visible-surface segmentation masks and perturbed pose-estimate streams with
// known errors.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "maskval/geometry.h"
#include "maskval/image.h"
#include "maskval/scene_io.h"

namespace maskval {

struct PerturbationSpec {
  // Per-axis standard deviation of the translation error, meters.
  double translation_sigma = 0.0;
  // Standard deviation of the rotation angle about a random axis, degrees.
  double rotation_sigma_deg = 0.0;
  double outlier_probability = 0.0;
  // Offset along a random direction added to outliers, meters.
  double outlier_translation = 0.0;
  // Segmentation masks are eroded or dilated by a radius drawn from
  // [0, mask_radius] pixels.
  int mask_radius = 0;
  double mask_dropout = 0.0;
  // Log-normal spread of a per-object multiplier on both sigmas; 0 disables.
  double noise_scale_spread = 0.0;

  // Throws std::invalid_argument on negative values or probabilities outside
  // [0, 1].
  void Validate() const;
  PerturbationSpec Scaled(double factor) const;
};

struct GeneratorConfig {
  int n_images = 1;
  int min_objects = 1;
  int max_objects = 4;
  double min_depth = 0.45;
  double max_depth = 0.9;
  PerturbationSpec primary;
  // When set, a second estimate stream is produced with this spec.
  std::optional<PerturbationSpec> secondary;
  std::uint64_t seed = 0;
  int max_placement_attempts = 500;

  void Validate() const;
};

// Seed for image `index`: the run seed and the index mixed through
// SplitMix64, so any single image can be regenerated on its own.
std::uint64_t ImageSeed(std::uint64_t seed, std::uint64_t index,
                        std::uint64_t stream = 0);

// Throws std::runtime_error if objects cannot be placed without overlap.
SceneRecord GenerateScene(const std::map<std::string, TriangleMesh>& models,
                          const CameraIntrinsics& k,
                          const GeneratorConfig& config, std::uint64_t index);

std::vector<SceneRecord> GenerateBenchmark(
    const std::map<std::string, TriangleMesh>& models,
    const CameraIntrinsics& k, const GeneratorConfig& config);

// Applies the estimate error model of `spec` to a ground-truth pose.
Pose PerturbPose(const Pose& gt, const PerturbationSpec& spec,
                 std::mt19937_64& rng);

// Erosion or dilation with a disk of the given radius.
BinaryMask Erode(const BinaryMask& mask, int radius);
BinaryMask Dilate(const BinaryMask& mask, int radius);
BinaryMask DegradeMask(const BinaryMask& mask, const PerturbationSpec& spec,
                       std::mt19937_64& rng);

// Axis-aligned box centered at the origin.
TriangleMesh MakeBox(const Vec3& size, const Vec3& center = Vec3::Zero());
TriangleMesh MergeMeshes(const std::vector<TriangleMesh>& parts);

// Two asymmetric desk-scale parts: "antenna" (a rod on a base plate) and
// "handle" (a bar on two feet).
std::map<std::string, TriangleMesh> BuiltinModels();

CameraIntrinsics DefaultCamera();

}  // namespace maskval
