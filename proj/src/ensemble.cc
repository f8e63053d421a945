#include "maskval/ensemble.h"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace maskval {
namespace {

const ModelPoints& ModelFor(const std::map<std::string, ModelPoints>& models,
                            const std::string& cls) {
  auto it = models.find(cls);
  if (it == models.end()) {
    throw std::invalid_argument("no model for class '" + cls + "'");
  }
  return it->second;
}

}  // namespace

void AddNormalization::Validate() const {
  if (!(d_min >= 0.0 && d_min < d_max)) {
    throw std::invalid_argument("ADD normalization needs 0 <= d_min < d_max");
  }
}

double AddDisagreement(const Pose& p1, const Pose& p2,
                       const ModelPoints& model) {
  model.Validate();
  double sum = 0.0;
  for (const auto& x : model.points) sum += (p1.Apply(x) - p2.Apply(x)).norm();
  return sum / static_cast<double>(model.points.size());
}

double NormalizeAdd(double d, const AddNormalization& norm) {
  norm.Validate();
  return std::clamp((d - norm.d_min) / (norm.d_max - norm.d_min), 0.0, 1.0);
}

std::vector<std::optional<std::size_t>> AssociateStreams(
    const std::vector<StreamPose>& primary,
    const std::vector<StreamPose>& secondary,
    const std::map<std::string, ModelPoints>& models) {
  std::vector<std::optional<std::size_t>> partner(primary.size());
  std::vector<bool> used(secondary.size(), false);

  for (std::size_t i = 0; i < primary.size(); ++i) {
    if (!primary[i].instance_id) continue;
    for (std::size_t j = 0; j < secondary.size(); ++j) {
      if (!used[j] && secondary[j].instance_id == primary[i].instance_id &&
          secondary[j].class_name == primary[i].class_name) {
        partner[i] = j;
        used[j] = true;
        break;
      }
    }
  }

  struct Candidate {
    double add;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < primary.size(); ++i) {
    if (partner[i]) continue;
    for (std::size_t j = 0; j < secondary.size(); ++j) {
      if (used[j] || secondary[j].class_name != primary[i].class_name) continue;
      candidates.push_back(
          {AddDisagreement(primary[i].pose, secondary[j].pose,
                           ModelFor(models, primary[i].class_name)),
           i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(a.add, a.i, a.j) < std::tie(b.add, b.i, b.j);
            });
  for (const auto& c : candidates) {
    if (partner[c.i] || used[c.j]) continue;
    partner[c.i] = c.j;
    used[c.j] = true;
  }
  return partner;
}

std::vector<EnsembleResult> EnsembleQuantify(
    const std::vector<StreamPose>& primary,
    const std::vector<std::optional<Pose>>& secondary,
    const std::map<std::string, ModelPoints>& models,
    const AddNormalization& norm) {
  norm.Validate();
  if (secondary.size() != primary.size()) {
    throw std::invalid_argument("secondary list must align with primary list");
  }
  std::vector<EnsembleResult> out(primary.size());
  for (std::size_t i = 0; i < primary.size(); ++i) {
    const ModelPoints& model = ModelFor(models, primary[i].class_name);
    if (!secondary[i]) continue;
    const double d = AddDisagreement(primary[i].pose, *secondary[i], model);
    out[i].disagreement = d;
    out[i].uncertainty = NormalizeAdd(d, norm);
  }
  return out;
}

std::vector<EnsembleResult> EnsembleQuantifyStreams(
    const std::vector<StreamPose>& primary,
    const std::vector<StreamPose>& secondary,
    const std::map<std::string, ModelPoints>& models,
    const AddNormalization& norm) {
  const auto partner = AssociateStreams(primary, secondary, models);
  std::vector<std::optional<Pose>> aligned(primary.size());
  for (std::size_t i = 0; i < primary.size(); ++i) {
    if (partner[i]) aligned[i] = secondary[*partner[i]].pose;
  }
  return EnsembleQuantify(primary, aligned, models, norm);
}

std::optional<double> CalibrateMinDisagreement(
    const std::vector<std::pair<std::vector<StreamPose>,
                                std::vector<StreamPose>>>& scenes,
    const std::map<std::string, ModelPoints>& models) {
  std::optional<double> best;
  for (const auto& [primary, secondary] : scenes) {
    const auto partner = AssociateStreams(primary, secondary, models);
    for (std::size_t i = 0; i < primary.size(); ++i) {
      if (!partner[i]) continue;
      const double d =
          AddDisagreement(primary[i].pose, secondary[*partner[i]].pose,
                          ModelFor(models, primary[i].class_name));
      if (!best || d < *best) best = d;
    }
  }
  return best;
}

}  // namespace maskval
