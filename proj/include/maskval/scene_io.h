#pragma once

// One JSON document per scene. Masks are stored as run-length encodings over
// the row-major pixel sequence: alternating run lengths of 0s and 1s,
// starting with a (possibly empty) run of 0s. Rotations are row-major 3x3
// matrices, translations are in meters.
//
// {
//   "image_id": "000000",
//   "camera": {"fx": .., "fy": .., "cx": .., "cy": .., "width": .., "height": ..},
//   "ground_truth": [{"class": "..", "instance_id": 0, "rotation": [9],
//                     "translation": [3], "visible_fraction": 0.97}],
//   "segmentation": [{"class": "..", "instance_id": 0, "rle": [..]}],
//   "estimates": {
//     "primary": [{"class": "..", "instance_id": 0, "rotation": [9],
//                  "translation": [3], "true_mdd": 0.004,
//                  "maskval": {"c": .., "v": .., "u": .., "matched_mask": 0,
//                              "truncated": false, "unmatched": false,
//                              "empty_render": false},
//                  "ensemble_add": {"add": .., "u": ..}}],
//     "secondary": [...]
//   }
// }

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskval/ensemble.h"
#include "maskval/geometry.h"
#include "maskval/image.h"
#include "maskval/mask_val.h"
#include "maskval/metrics.h"

namespace maskval {

inline constexpr char kPrimaryStream[] = "primary";
inline constexpr char kSecondaryStream[] = "secondary";

// Schema or validation failure; `path` is a JSON path such as
// "$.ground_truth[2].rotation".
class SceneFormatError : public std::runtime_error {
 public:
  SceneFormatError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SegmentationEntry {
  BinaryMask mask;
  std::string class_name;
  std::optional<std::int64_t> instance_id;
};

struct PoseEstimate {
  Pose pose;
  std::string class_name;
  std::optional<std::int64_t> instance_id;
  // Generator annotation: MDD to the ground truth it was derived from.
  std::optional<double> true_mdd;
  std::optional<EstimateUncertainty> maskval;
  std::optional<EnsembleResult> ensemble_add;
};

struct SceneRecord {
  std::string image_id;
  CameraIntrinsics camera;
  std::vector<GroundTruthObject> ground_truth;
  std::vector<SegmentationEntry> segmentation;
  std::map<std::string, std::vector<PoseEstimate>> estimates;

  // Throws SceneFormatError: masks must match the camera size and instance
  // ids must be unique within each list.
  void Validate() const;
  const std::vector<PoseEstimate>* Stream(const std::string& name) const;
};

std::vector<std::uint32_t> EncodeRle(const BinaryMask& mask);
// Throws std::invalid_argument if the runs do not cover width * height.
BinaryMask DecodeRle(const std::vector<std::uint32_t>& runs, int width,
                     int height);

nlohmann::json SceneToJson(const SceneRecord& scene);
// Throws SceneFormatError.
SceneRecord SceneFromJson(const nlohmann::json& doc);

std::string FormatScene(const SceneRecord& scene);
// Throws SceneFormatError (including for JSON syntax errors).
SceneRecord ParseScene(const std::string& text);

void SaveScene(const std::filesystem::path& path, const SceneRecord& scene);
SceneRecord LoadScene(const std::filesystem::path& path);

}  // namespace maskval
