#include "vecmap/train/assign.hpp"

#include <cmath>
#include <limits>

namespace vecmap {

std::vector<std::vector<int64_t>> gt_orderings(int num_points, bool closed) {
  std::vector<std::vector<int64_t>> out;
  if (!closed) {
    std::vector<int64_t> fwd(num_points), rev(num_points);
    for (int i = 0; i < num_points; ++i) {
      fwd[i] = i;
      rev[i] = num_points - 1 - i;
    }
    out.push_back(std::move(fwd));
    out.push_back(std::move(rev));
    return out;
  }
  for (int dir : {1, -1}) {
    for (int shift = 0; shift < num_points; ++shift) {
      std::vector<int64_t> ord(num_points);
      for (int i = 0; i < num_points; ++i) {
        int idx = (shift + dir * i) % num_points;
        if (idx < 0) idx += num_points;
        ord[i] = idx;
      }
      out.push_back(std::move(ord));
    }
  }
  return out;
}

torch::Tensor stack_orderings(const GtElement& gt) {
  const int P = static_cast<int>(gt.points.size(0));
  auto orderings = gt_orderings(P, gt.closed);
  std::vector<torch::Tensor> stacked;
  stacked.reserve(orderings.size());
  for (const auto& ord : orderings) {
    stacked.push_back(gt.points.index_select(
        0, torch::tensor(ord, torch::kInt64)));
  }
  return torch::stack(stacked);  // O x P x 2
}

namespace {

// Focal terms with a uniform alpha: -alpha * (1 - p_t)^gamma * log(p_t).
// With gamma = 0 and alpha = 1 this is exactly binary cross-entropy.
double focal_pos(double p, double alpha, double gamma) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}
double focal_neg(double p, double alpha, double gamma) {
  return focal_pos(1.0 - p, alpha, gamma);
}

}  // namespace

PairCost match_cost(const torch::Tensor& class_logits_row,
                    const torch::Tensor& polyline_row, const GtElement& gt,
                    const LossWeights& w) {
  torch::NoGradGuard no_grad;
  const double logit =
      class_logits_row[gt.class_id].to(torch::kFloat64).item<double>();
  const double p = 1.0 / (1.0 + std::exp(-logit));
  // choosing this class versus leaving it background
  const double cls_cost = focal_pos(p, w.focal_alpha, w.focal_gamma) -
                          focal_neg(p, w.focal_alpha, w.focal_gamma);

  auto poly = polyline_row.to(torch::kFloat64).reshape({1, -1, 2});
  auto gts = stack_orderings(gt).to(torch::kFloat64);  // O x P x 2
  auto pts_costs = (poly - gts).abs().mean({1, 2});    // O
  auto best = pts_costs.min(0);

  PairCost out;
  out.ordering = static_cast<int>(std::get<1>(best).item<int64_t>());
  out.cost = w.lambda_cls * cls_cost +
             w.lambda_pts * std::get<0>(best).item<double>();
  return out;
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n_rows = static_cast<int>(cost.size());
  if (n_rows == 0) return {};
  const int n_cols = static_cast<int>(cost[0].size());
  if (n_cols == 0) return {};
  if (n_cols > n_rows) {
    throw std::invalid_argument(
        "assignment needs at least as many rows as columns (more ground "
        "truths than prediction slots)");
  }
  for (const auto& row : cost) {
    for (double c : row) {
      if (!std::isfinite(c)) {
        throw std::invalid_argument("assignment cost must be finite");
      }
    }
  }

  // shortest augmenting path with potentials; the scarce side (columns)
  // drives the augmentation, 1-based internally
  const int n = n_cols, m = n_rows;
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[j - 1][i0 - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_for_col(n_cols, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_for_col[p[j] - 1] = j - 1;
  }
  return row_for_col;
}

MatchResult match_view(const Prediction& pred, const ViewTargets& targets,
                       const LossWeights& w) {
  MatchResult result;
  if (targets.empty()) return result;
  const int n_pred = static_cast<int>(pred.class_logits.size(0));
  const int n_gt = static_cast<int>(targets.size());
  if (n_gt > n_pred) {
    throw std::invalid_argument(
        "view has " + std::to_string(n_gt) +
        " ground-truth elements but only " + std::to_string(n_pred) +
        " query instances; raise model.num_instances");
  }

  torch::NoGradGuard no_grad;
  std::vector<std::vector<double>> cost(n_pred, std::vector<double>(n_gt));
  std::vector<std::vector<int>> ordering(n_pred, std::vector<int>(n_gt));
  for (int i = 0; i < n_pred; ++i) {
    for (int j = 0; j < n_gt; ++j) {
      PairCost pc = match_cost(pred.class_logits[i], pred.polyline[i],
                               targets[j], w);
      cost[i][j] = pc.cost;
      ordering[i][j] = pc.ordering;
    }
  }
  auto assignment = hungarian(cost);
  for (int j = 0; j < n_gt; ++j) {
    result.pairs.push_back({assignment[j], j, ordering[assignment[j]][j]});
  }
  return result;
}

}  // namespace vecmap
