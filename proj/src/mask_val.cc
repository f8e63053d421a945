#include "maskval/mask_val.h"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace maskval {

IouMatrix IouMatrix::FromRows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  IouMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw std::invalid_argument("ragged IOU matrix rows");
    }
    for (std::size_t k = 0; k < cols; ++k) m.at(i, k) = rows[i][k];
  }
  return m;
}

IouCounts MaskIouCounts(const BinaryMask& a, const BinaryMask& b) {
  if (!a.SameShape(b)) {
    throw std::invalid_argument(
        "mask size mismatch: " + std::to_string(a.width()) + "x" +
        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
        std::to_string(b.height()));
  }
  IouCounts counts;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    counts.intersection += da[i] & db[i];
    counts.union_ += da[i] | db[i];
  }
  return counts;
}

double MaskIou(const BinaryMask& a, const BinaryMask& b) {
  const IouCounts c = MaskIouCounts(a, b);
  if (c.union_ == 0) return 0.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

IouMatrix ComputeIouMatrix(const std::vector<BinaryMask>& rendered,
                           const std::vector<BinaryMask>& segmentations) {
  IouMatrix m(rendered.size(), segmentations.size());
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    for (std::size_t k = 0; k < segmentations.size(); ++k) {
      m.at(i, k) = MaskIou(rendered[i], segmentations[k]);
    }
  }
  return m;
}

Assignment MatchGreedy(const IouMatrix& iou, double min_match_iou) {
  struct Entry {
    double value;
    std::size_t row, col;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < iou.rows(); ++i) {
    for (std::size_t k = 0; k < iou.cols(); ++k) {
      if (iou.at(i, k) >= min_match_iou) entries.push_back({iou.at(i, k), i, k});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(b.value, a.row, a.col) < std::tie(a.value, b.row, b.col);
  });

  Assignment out;
  out.mask_for_pose.assign(iou.rows(), std::nullopt);
  out.certainty.assign(iou.rows(), 0.0);
  std::vector<bool> col_used(iou.cols(), false);
  std::size_t assigned = 0;
  const std::size_t limit = std::min(iou.rows(), iou.cols());
  for (const Entry& e : entries) {
    if (assigned == limit) break;
    if (out.mask_for_pose[e.row] || col_used[e.col]) continue;
    out.mask_for_pose[e.row] = e.col;
    out.certainty[e.row] = e.value;
    col_used[e.col] = true;
    ++assigned;
  }
  return out;
}

std::vector<double> CertaintyTwoStage(const IouMatrix& iou) {
  if (iou.rows() != iou.cols()) {
    throw std::invalid_argument(
        "two-stage certainty needs one mask per pose, got " +
        std::to_string(iou.rows()) + " poses and " +
        std::to_string(iou.cols()) + " masks");
  }
  std::vector<double> c(iou.rows());
  for (std::size_t i = 0; i < iou.rows(); ++i) c[i] = iou.at(i, i);
  return c;
}

double Uncertainty(double certainty, double visibility, double alpha) {
  if (visibility < alpha) return 1.0 - certainty * visibility;
  return 1.0 - certainty;
}

void MaskValConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  if (pad_factor < 1) throw std::invalid_argument("pad_factor must be >= 1");
  if (!(min_match_iou >= 0.0 && min_match_iou <= 1.0)) {
    throw std::invalid_argument("min_match_iou must lie in [0, 1]");
  }
}

std::string ToString(AssociationMode mode) {
  return mode == AssociationMode::kGreedy ? "greedy" : "two_stage";
}

AssociationMode ParseAssociationMode(const std::string& text) {
  if (text == "greedy") return AssociationMode::kGreedy;
  if (text == "two_stage") return AssociationMode::kTwoStage;
  throw std::invalid_argument("unknown association mode '" + text +
                              "' (expected greedy or two_stage)");
}

UncertaintyReport QuantifyScene(
    const std::vector<EstimateInput>& estimates,
    const std::vector<SegmentationInput>& segmentations,
    const std::map<std::string, TriangleMesh>& models,
    const CameraIntrinsics& k, const MaskValConfig& config,
    Renderer* renderer) {
  config.Validate();
  k.Validate();
  for (const auto& e : estimates) {
    if (!models.contains(e.class_name)) {
      throw std::invalid_argument("no model for class '" + e.class_name + "'");
    }
  }
  for (const auto& s : segmentations) {
    if (s.mask.width() != k.width || s.mask.height() != k.height) {
      throw std::invalid_argument("segmentation mask of class '" +
                                  s.class_name +
                                  "' does not match the camera size");
    }
  }

  Renderer local(config.pad_factor);
  if (renderer == nullptr || renderer->pad_factor() != config.pad_factor) {
    renderer = &local;
  }

  UncertaintyReport report;
  report.estimates.resize(estimates.size());
  std::vector<BinaryMask> rendered(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    RenderResult r =
        renderer->Render(estimates[i].pose, models.at(estimates[i].class_name), k);
    auto& out = report.estimates[i];
    out.visibility = r.visibility;
    out.truncated = r.truncated;
    out.empty_render = r.canvas_pixels == 0;
    rendered[i] = MaskFromDepth(r.depth);
  }

  auto assign = [&](std::size_t i, std::size_t mask_index, double iou) {
    auto& out = report.estimates[i];
    out.matched_mask = mask_index;
    out.unmatched = false;
    out.certainty = iou;
  };

  if (config.association_mode == AssociationMode::kGreedy) {
    std::map<std::string, std::pair<std::vector<std::size_t>,
                                    std::vector<std::size_t>>>
        by_class;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      if (!report.estimates[i].empty_render) {
        by_class[estimates[i].class_name].first.push_back(i);
      }
    }
    for (std::size_t s = 0; s < segmentations.size(); ++s) {
      auto it = by_class.find(segmentations[s].class_name);
      if (it != by_class.end()) it->second.second.push_back(s);
    }
    for (const auto& [cls, members] : by_class) {
      const auto& [pose_ids, mask_ids] = members;
      IouMatrix iou(pose_ids.size(), mask_ids.size());
      for (std::size_t r = 0; r < pose_ids.size(); ++r) {
        for (std::size_t c = 0; c < mask_ids.size(); ++c) {
          iou.at(r, c) =
              MaskIou(rendered[pose_ids[r]], segmentations[mask_ids[c]].mask);
        }
      }
      const Assignment a = MatchGreedy(iou, config.min_match_iou);
      for (std::size_t r = 0; r < pose_ids.size(); ++r) {
        if (a.mask_for_pose[r]) {
          assign(pose_ids[r], mask_ids[*a.mask_for_pose[r]], a.certainty[r]);
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      if (report.estimates[i].empty_render || !estimates[i].instance_id) {
        continue;
      }
      for (std::size_t s = 0; s < segmentations.size(); ++s) {
        const auto& seg = segmentations[s];
        if (seg.instance_id == estimates[i].instance_id &&
            seg.class_name == estimates[i].class_name) {
          assign(i, s, MaskIou(rendered[i], seg.mask));
          break;
        }
      }
    }
  }

  for (auto& out : report.estimates) {
    out.uncertainty = out.unmatched
                          ? 1.0
                          : Uncertainty(out.certainty, out.visibility,
                                        config.alpha);
  }
  return report;
}

}  // namespace maskval
