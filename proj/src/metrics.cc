#include "maskval/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
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

// Per-image running state while the threshold rises.
struct ImageTally {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

// 1-based ranks, ties get the mean of the ranks they span.
std::vector<double> AverageRanks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) rank[order[m]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double Mdd(const Pose& p_est, const Pose& p_gt, const ModelPoints& model) {
  model.Validate();
  double worst = 0.0;
  for (const auto& x : model.points) {
    worst = std::max(worst, (p_est.Apply(x) - p_gt.Apply(x)).norm());
  }
  return worst;
}

AssociatedImage AssociateImage(
    const std::vector<ScoredEstimate>& estimates,
    const std::vector<GroundTruthObject>& gts,
    const std::map<std::string, ModelPoints>& models) {
  AssociatedImage out;
  out.estimates.resize(estimates.size());
  out.gt_visible_fraction.reserve(gts.size());
  for (const auto& g : gts) out.gt_visible_fraction.push_back(g.visible_fraction);
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out.estimates[i].uncertainty = estimates[i].uncertainty;
  }

  std::vector<bool> gt_used(gts.size(), false);
  auto link = [&](std::size_t i, std::size_t j, double error) {
    out.estimates[i].gt = j;
    out.estimates[i].error = error;
    gt_used[j] = true;
  };

  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i].instance_id) continue;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (!gt_used[j] && gts[j].instance_id == estimates[i].instance_id &&
          gts[j].class_name == estimates[i].class_name) {
        link(i, j,
             Mdd(estimates[i].pose, gts[j].pose,
                 ModelFor(models, estimates[i].class_name)));
        break;
      }
    }
  }

  struct Candidate {
    double mdd;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (out.estimates[i].gt) continue;
    const ModelPoints& model = ModelFor(models, estimates[i].class_name);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gt_used[j] || gts[j].class_name != estimates[i].class_name) continue;
      candidates.push_back({Mdd(estimates[i].pose, gts[j].pose, model), i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(a.mdd, a.i, a.j) < std::tie(b.mdd, b.i, b.j);
            });
  for (const auto& c : candidates) {
    if (out.estimates[c.i].gt || gt_used[c.j]) continue;
    link(c.i, c.j, c.mdd);
  }
  return out;
}

ImageCounts ClassifyAssociated(const AssociatedImage& image, double e_t,
                               double theta_v, double u_t) {
  ImageCounts counts;
  counts.num_gt = static_cast<std::int64_t>(image.gt_visible_fraction.size());
  std::vector<bool> gt_has_tp(image.gt_visible_fraction.size(), false);
  for (const auto& e : image.estimates) {
    const bool valid = e.error && *e.error <= e_t;
    if (valid) ++counts.tp_unfiltered;
    if (e.uncertainty > u_t) continue;
    if (valid) {
      ++counts.tp_filtered;
      gt_has_tp[*e.gt] = true;
    } else {
      ++counts.fp_filtered;
    }
  }
  for (std::size_t j = 0; j < gt_has_tp.size(); ++j) {
    if (!gt_has_tp[j] && image.gt_visible_fraction[j] >= theta_v) ++counts.fn;
  }
  return counts;
}

ImageCounts ClassifyImage(const std::vector<ScoredEstimate>& estimates,
                          const std::vector<GroundTruthObject>& gts,
                          const std::map<std::string, ModelPoints>& models,
                          double e_t, double theta_v, double u_t) {
  return ClassifyAssociated(AssociateImage(estimates, gts, models), e_t,
                            theta_v, u_t);
}

Scores DatasetScores(std::span<const ImageCounts> images) {
  if (images.empty()) throw std::invalid_argument("no images to score");
  double ap_sum = 0.0, ar_sum = 0.0, aru_sum = 0.0;
  std::size_t ap_n = 0, ar_n = 0, aru_n = 0;
  for (const auto& c : images) {
    const std::int64_t kept = c.tp_filtered + c.fp_filtered;
    if (kept > 0) {
      ap_sum += static_cast<double>(c.tp_filtered) / static_cast<double>(kept);
      ++ap_n;
    } else if (c.num_gt == 0) {
      ap_sum += 1.0;
      ++ap_n;
    }
    if (c.tp_filtered + c.fn > 0) {
      ar_sum += static_cast<double>(c.tp_filtered) /
                static_cast<double>(c.tp_filtered + c.fn);
      ++ar_n;
    }
    if (c.tp_unfiltered > 0) {
      aru_sum += static_cast<double>(c.tp_filtered) /
                 static_cast<double>(c.tp_unfiltered);
      ++aru_n;
    }
  }
  Scores s;
  if (ap_n > 0) s.ap = ap_sum / static_cast<double>(ap_n);
  if (ar_n > 0) s.ar = ar_sum / static_cast<double>(ar_n);
  if (aru_n > 0) s.aru = aru_sum / static_cast<double>(aru_n);
  return s;
}

ThresholdResult ThresholdForTarget(std::span<const AssociatedImage> images,
                                   double e_t, double ap_target,
                                   double theta_v) {
  if (images.empty()) throw std::invalid_argument("no images to threshold");
  if (!(ap_target > 0.0 && ap_target <= 1.0)) {
    throw std::invalid_argument("ap_target must lie in (0, 1]");
  }

  // Everything starts rejected; raising u_T admits estimates in order.
  struct Admission {
    double u;
    std::size_t image;
    std::size_t estimate;
  };
  std::vector<Admission> order;
  std::vector<ImageCounts> counts(images.size());
  std::vector<std::vector<bool>> gt_has_tp(images.size());
  for (std::size_t n = 0; n < images.size(); ++n) {
    counts[n] = ClassifyAssociated(images[n], e_t, theta_v,
                                   -std::numeric_limits<double>::infinity());
    gt_has_tp[n].assign(images[n].gt_visible_fraction.size(), false);
    for (std::size_t i = 0; i < images[n].estimates.size(); ++i) {
      order.push_back({images[n].estimates[i].uncertainty, n, i});
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Admission& a, const Admission& b) { return a.u < b.u; });

  ThresholdResult best;
  auto evaluate = [&](double u_t) {
    const Scores s = DatasetScores(counts);
    if (!s.ap || *s.ap >= ap_target) {
      best.feasible = true;
      best.u_t = u_t;
      best.scores = s;
    }
  };

  std::size_t next = 0;
  auto admit_through = [&](double u_t) {
    while (next < order.size() && order[next].u <= u_t) {
      const Admission& a = order[next++];
      const AssociatedImage& img = images[a.image];
      const AssociatedEstimate& e = img.estimates[a.estimate];
      ImageCounts& c = counts[a.image];
      if (e.error && *e.error <= e_t) {
        ++c.tp_filtered;
        const std::size_t j = *e.gt;
        if (!gt_has_tp[a.image][j]) {
          gt_has_tp[a.image][j] = true;
          if (img.gt_visible_fraction[j] >= theta_v) --c.fn;
        }
      } else {
        ++c.fp_filtered;
      }
    }
  };

  admit_through(0.0);
  evaluate(0.0);
  while (next < order.size()) {
    const double u_t = order[next].u;
    admit_through(u_t);
    if (u_t > 0.0) evaluate(u_t);
  }
  return best;
}

std::vector<double> UniformGrid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) {
    throw std::invalid_argument("grid needs hi > lo and at least 2 points");
  }
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  grid.back() = hi;
  return grid;
}

EvalCurves SweepCurves(std::span<const AssociatedImage> images,
                       std::span<const double> e_t_grid, double ap_target,
                       double theta_v) {
  if (e_t_grid.size() < 2 ||
      !std::is_sorted(e_t_grid.begin(), e_t_grid.end()) ||
      e_t_grid.front() == e_t_grid.back()) {
    throw std::invalid_argument("e_t grid must be ascending with >= 2 points");
  }
  EvalCurves curves;
  std::vector<double> ar_values, ar_star_values;
  std::vector<ImageCounts> unfiltered(images.size());
  for (double e_t : e_t_grid) {
    CurvePoint p;
    p.e_t = e_t;
    const ThresholdResult t = ThresholdForTarget(images, e_t, ap_target, theta_v);
    if (t.feasible) {
      p.u_t = t.u_t;
      p.scores = t.scores;
    } else {
      ++curves.infeasible_points;
      p.scores.ar = 0.0;
      p.scores.aru = 0.0;
    }
    for (std::size_t n = 0; n < images.size(); ++n) {
      unfiltered[n] = ClassifyAssociated(images[n], e_t, theta_v, 1.0);
    }
    p.ar_star = DatasetScores(unfiltered).ar;
    ar_values.push_back(p.scores.ar.value_or(0.0));
    ar_star_values.push_back(p.ar_star.value_or(0.0));
    curves.points.push_back(p);
  }
  curves.auc_ar = AucPercent(e_t_grid, ar_values);
  curves.auc_ar_star = AucPercent(e_t_grid, ar_star_values);

  const auto pairs = UncertaintyErrorPairs(images);
  curves.spearman_pairs = pairs.size();
  if (pairs.size() >= 2) curves.spearman_rho = Spearman(pairs);
  return curves;
}

double AucPercent(std::span<const double> grid,
                  std::span<const double> values) {
  if (grid.size() < 2 || grid.size() != values.size()) {
    throw std::invalid_argument("AUC needs >= 2 aligned grid points");
  }
  const double range = grid.back() - grid.front();
  if (!(range > 0.0)) throw std::invalid_argument("AUC grid has zero range");
  double area = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    area += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  }
  return 100.0 * area / range;
}

std::optional<double> Spearman(
    std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) {
    throw std::invalid_argument("Spearman correlation needs >= 2 pairs");
  }
  std::vector<double> xs, ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    xs.push_back(x);
    ys.push_back(y);
  }
  const std::vector<double> rx = AverageRanks(xs);
  const std::vector<double> ry = AverageRanks(ys);
  const double n = static_cast<double>(pairs.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::pair<double, double>> UncertaintyErrorPairs(
    std::span<const AssociatedImage> images) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& img : images) {
    for (const auto& e : img.estimates) {
      if (e.error) pairs.emplace_back(e.uncertainty, *e.error);
    }
  }
  return pairs;
}

}  // namespace maskval
