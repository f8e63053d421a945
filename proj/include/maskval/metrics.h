#pragma once

// Evaluation of uncertainty-filtered pose sets.
//
// Estimates are associated one-to-one with ground truth objects of the same
// class (explicit instance ids first, then greedy smallest MDD). The
// association is fixed per image; an uncertainty threshold u_T only removes
// estimates from it. Per image:
//   TP: kept estimate with MDD <= e_t
//   FP: kept estimate with MDD > e_t, or without a ground truth partner
//   FN: ground truth with visible_fraction >= theta_v and no TP
// Dataset scores average the per-image ratios TP/(TP+FP), TP/(TP+FN) and
// TP_filtered/TP_unfiltered.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maskval/geometry.h"

namespace maskval {

inline constexpr double kDefaultVisibilityThreshold = 0.85;
inline constexpr double kDefaultApTarget = 0.99;
inline constexpr double kDefaultMaxErrorThreshold = 0.03;
inline constexpr int kDefaultGridPoints = 61;

struct GroundTruthObject {
  Pose pose;
  std::string class_name;
  double visible_fraction = 1.0;
  std::optional<std::int64_t> instance_id;
};

struct ScoredEstimate {
  Pose pose;
  std::string class_name;
  double uncertainty = 0.0;
  std::optional<std::int64_t> instance_id;
};

// Max over model points of ||p_est x - p_gt x||.
double Mdd(const Pose& p_est, const Pose& p_gt, const ModelPoints& model);

struct AssociatedEstimate {
  double uncertainty = 0.0;
  std::optional<std::size_t> gt;
  // MDD to the associated ground truth; unset without a partner.
  std::optional<double> error;
};

struct AssociatedImage {
  std::vector<AssociatedEstimate> estimates;
  std::vector<double> gt_visible_fraction;
};

// Throws std::invalid_argument when a class has no model.
AssociatedImage AssociateImage(
    const std::vector<ScoredEstimate>& estimates,
    const std::vector<GroundTruthObject>& gts,
    const std::map<std::string, ModelPoints>& models);

struct ImageCounts {
  std::int64_t tp_filtered = 0;
  std::int64_t fp_filtered = 0;
  std::int64_t fn = 0;
  std::int64_t tp_unfiltered = 0;
  std::int64_t num_gt = 0;

  bool operator==(const ImageCounts&) const = default;
};

ImageCounts ClassifyAssociated(const AssociatedImage& image, double e_t,
                               double theta_v, double u_t);

ImageCounts ClassifyImage(const std::vector<ScoredEstimate>& estimates,
                          const std::vector<GroundTruthObject>& gts,
                          const std::map<std::string, ModelPoints>& models,
                          double e_t, double theta_v, double u_t);

// Unset when no image contributes a term: an AP term is skipped when the
// image has no kept estimates but does have ground truth (it counts as 1
// with no ground truth either), AR terms with TP+FN = 0 and ARU terms with
// TP_unfiltered = 0 are skipped.
struct Scores {
  std::optional<double> ap;
  std::optional<double> ar;
  std::optional<double> aru;
};

// Throws std::invalid_argument on an empty image list.
Scores DatasetScores(std::span<const ImageCounts> images);

struct ThresholdResult {
  bool feasible = false;
  double u_t = 0.0;
  Scores scores;
};

// Largest u_T in {0} U {observed uncertainties} whose dataset AP reaches
// `ap_target`. A vacuous AP (no contributing image) counts as reaching it.
// Throws std::invalid_argument on an empty image list or a target outside
// (0, 1].
ThresholdResult ThresholdForTarget(std::span<const AssociatedImage> images,
                                   double e_t, double ap_target,
                                   double theta_v = kDefaultVisibilityThreshold);

// Evenly spaced points over [lo, hi], endpoints included.
std::vector<double> UniformGrid(double lo, double hi, int points);

struct CurvePoint {
  double e_t = 0.0;
  std::optional<double> u_t;  // unset: no threshold reaches the AP target
  Scores scores;              // at u_t
  std::optional<double> ar_star;
};

struct EvalCurves {
  std::vector<CurvePoint> points;
  // Area under AR (infeasible points count as AR = 0), as a percentage of
  // the e_t range.
  std::optional<double> auc_ar;
  std::optional<double> auc_ar_star;
  std::optional<double> spearman_rho;
  std::size_t spearman_pairs = 0;
  std::size_t infeasible_points = 0;
};

// Throws std::invalid_argument unless the grid is ascending with at least
// two points.
EvalCurves SweepCurves(std::span<const AssociatedImage> images,
                       std::span<const double> e_t_grid, double ap_target,
                       double theta_v = kDefaultVisibilityThreshold);

// Trapezoidal area under `values` over `grid`, divided by the grid range and
// scaled to percent.
double AucPercent(std::span<const double> grid, std::span<const double> values);

// Rank correlation with average ranks for ties. Unset when either variable
// is constant. Throws std::invalid_argument with fewer than two pairs.
std::optional<double> Spearman(std::span<const std::pair<double, double>> pairs);

// (uncertainty, MDD) of every estimate with a ground truth partner.
std::vector<std::pair<double, double>> UncertaintyErrorPairs(
    std::span<const AssociatedImage> images);

}  // namespace maskval
