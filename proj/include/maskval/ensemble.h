#pragma once

// Ensemble-ADD baseline: the uncertainty of a pose is the normalized mean
// point distance (ADD) between it and a second estimator's pose for the same
// object.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskval/geometry.h"

namespace maskval {

struct AddNormalization {
  double d_min = 0.0;
  double d_max = 0.05;

  // Throws std::invalid_argument unless 0 <= d_min < d_max.
  void Validate() const;
};

// Mean over model points of ||p1 x - p2 x||.
double AddDisagreement(const Pose& p1, const Pose& p2,
                       const ModelPoints& model);

// clamp((d - d_min) / (d_max - d_min), 0, 1).
double NormalizeAdd(double d, const AddNormalization& norm);

struct StreamPose {
  Pose pose;
  std::string class_name;
  std::optional<std::int64_t> instance_id;
};

// For every primary pose, the index of its partner in `secondary`. Poses
// carrying the same instance id and class are paired first; the rest are
// paired within their class by repeatedly taking the smallest remaining ADD.
std::vector<std::optional<std::size_t>> AssociateStreams(
    const std::vector<StreamPose>& primary,
    const std::vector<StreamPose>& secondary,
    const std::map<std::string, ModelPoints>& models);

struct EnsembleResult {
  // Raw ADD disagreement; absent when no secondary pose exists.
  std::optional<double> disagreement;
  double uncertainty = 1.0;
};

// Index-aligned: secondary[i] is the second estimate for primary[i]. A
// missing secondary pose gives u = 1.
std::vector<EnsembleResult> EnsembleQuantify(
    const std::vector<StreamPose>& primary,
    const std::vector<std::optional<Pose>>& secondary,
    const std::map<std::string, ModelPoints>& models,
    const AddNormalization& norm);

// Associates and quantifies in one step.
std::vector<EnsembleResult> EnsembleQuantifyStreams(
    const std::vector<StreamPose>& primary,
    const std::vector<StreamPose>& secondary,
    const std::map<std::string, ModelPoints>& models,
    const AddNormalization& norm);

// Smallest ADD disagreement over a collection of associated stream pairs,
// for use as d_min. Returns nullopt when no pair exists.
std::optional<double> CalibrateMinDisagreement(
    const std::vector<std::pair<std::vector<StreamPose>,
                                std::vector<StreamPose>>>& scenes,
    const std::map<std::string, ModelPoints>& models);

}  // namespace maskval
