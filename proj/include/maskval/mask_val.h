#pragma once

// Render-and-compare uncertainty for 6D pose estimates.
//
// Every estimate is rendered under its pose; the silhouette is compared with
// the instance segmentation masks of the same class by mask IOU. The IOU of
// the associated mask is the certainty c, and the uncertainty is
//
//   u = 1 - c * v   if v <  alpha
//   u = 1 - c       if v >= alpha
//
// where v is the field-of-view visibility ratio of the render.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskval/geometry.h"
#include "maskval/image.h"
#include "maskval/renderer.h"

namespace maskval {

// N x K matrix of IOUs between N rendered poses and K segmentation masks.
class IouMatrix {
 public:
  IouMatrix() = default;
  IouMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t i, std::size_t k) { return values_[i * cols_ + k]; }
  double at(std::size_t i, std::size_t k) const {
    return values_[i * cols_ + k];
  }

  static IouMatrix FromRows(const std::vector<std::vector<double>>& rows);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Exact pixel counts behind one IOU value.
struct IouCounts {
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;
};

IouCounts MaskIouCounts(const BinaryMask& a, const BinaryMask& b);
// |a AND b| / |a OR b|, 0 when the union is empty. Throws
// std::invalid_argument on a dimension mismatch.
double MaskIou(const BinaryMask& a, const BinaryMask& b);
IouMatrix ComputeIouMatrix(const std::vector<BinaryMask>& rendered,
                           const std::vector<BinaryMask>& segmentations);

inline constexpr double kDefaultMinMatchIou = 0.01;

struct Assignment {
  // Per row (pose): matched column (mask), if any.
  std::vector<std::optional<std::size_t>> mask_for_pose;
  // Per row: the matched IOU, 0 for unmatched rows.
  std::vector<double> certainty;
};

// Repeatedly takes the largest remaining entry (ties: lowest row, then lowest
// column) and removes its row and column, until the largest remaining entry
// drops below `min_match_iou`.
Assignment MatchGreedy(const IouMatrix& iou,
                       double min_match_iou = kDefaultMinMatchIou);

// Certainties for a two-stage estimator, where pose i was produced from mask
// i. Throws std::invalid_argument unless the matrix is square.
std::vector<double> CertaintyTwoStage(const IouMatrix& iou);

double Uncertainty(double certainty, double visibility, double alpha);

enum class AssociationMode { kGreedy, kTwoStage };

struct MaskValConfig {
  double alpha = 0.8;
  int pad_factor = kDefaultPadFactor;
  double min_match_iou = kDefaultMinMatchIou;
  AssociationMode association_mode = AssociationMode::kGreedy;

  void Validate() const;
};

std::string ToString(AssociationMode mode);
// Accepts "greedy" and "two_stage".
AssociationMode ParseAssociationMode(const std::string& text);

struct EstimateInput {
  Pose pose;
  std::string class_name;
  // Used by the two-stage mode to find the mask the pose was built from.
  std::optional<std::int64_t> instance_id;
};

struct SegmentationInput {
  BinaryMask mask;
  std::string class_name;
  std::optional<std::int64_t> instance_id;
};

struct EstimateUncertainty {
  double certainty = 0.0;
  double visibility = 0.0;
  double uncertainty = 1.0;
  std::optional<std::size_t> matched_mask;
  bool truncated = false;
  bool unmatched = true;
  // The pose rendered to zero pixels.
  bool empty_render = false;
};

struct UncertaintyReport {
  std::vector<EstimateUncertainty> estimates;
};

// Throws std::invalid_argument naming the class when a model is missing, or
// when a mask does not match the camera size.
UncertaintyReport QuantifyScene(
    const std::vector<EstimateInput>& estimates,
    const std::vector<SegmentationInput>& segmentations,
    const std::map<std::string, TriangleMesh>& models,
    const CameraIntrinsics& k, const MaskValConfig& config,
    Renderer* renderer = nullptr);

}  // namespace maskval
