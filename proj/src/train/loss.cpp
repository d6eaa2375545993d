#include "vecmap/train/loss.hpp"

namespace vecmap {

namespace {

// -alpha * (1 - p_t)^gamma * log(p_t), written against the logits so the
// log term stays stable: log(p) = -softplus(-x), log(1-p) = -softplus(x).
torch::Tensor focal_terms(const torch::Tensor& logits,
                          const torch::Tensor& targets, double alpha,
                          double gamma) {
  auto p = torch::sigmoid(logits);
  auto p_t = targets * p + (1.0 - targets) * (1.0 - p);
  auto log_p_t = targets * (-torch::softplus(-logits)) +
                 (1.0 - targets) * (-torch::softplus(logits));
  return -alpha * torch::pow(1.0 - p_t, gamma) * log_p_t;
}

}  // namespace

torch::Tensor focal_loss(const torch::Tensor& class_logits,
                         const MatchResult& match, const ViewTargets& targets,
                         double alpha, double gamma) {
  auto one_hot = torch::zeros_like(class_logits);
  for (const MatchedPair& pair : match.pairs) {
    one_hot[pair.pred][targets[pair.gt].class_id] = 1.0;
  }
  return focal_terms(class_logits, one_hot, alpha, gamma)
      .sum(1)
      .mean();
}

torch::Tensor pts_loss(const torch::Tensor& polyline, const MatchResult& match,
                       const ViewTargets& targets) {
  if (match.pairs.empty()) {
    return torch::zeros({}, polyline.options());
  }
  auto total = torch::zeros({}, polyline.options());
  for (const MatchedPair& pair : match.pairs) {
    const GtElement& gt = targets[pair.gt];
    auto ord = gt_orderings(static_cast<int>(gt.points.size(0)), gt.closed);
    auto gt_pts = gt.points.index_select(
        0, torch::tensor(ord[pair.ordering], torch::kInt64));
    total = total + (polyline[pair.pred] - gt_pts).abs().mean();
  }
  return total / static_cast<double>(match.pairs.size());
}

torch::Tensor dir_loss(const torch::Tensor& polyline, const MatchResult& match,
                       const ViewTargets& targets) {
  if (match.pairs.empty()) {
    return torch::zeros({}, polyline.options());
  }
  constexpr double kNormEps = 1e-8;
  auto total = torch::zeros({}, polyline.options());
  for (const MatchedPair& pair : match.pairs) {
    const GtElement& gt = targets[pair.gt];
    const auto P = gt.points.size(0);
    auto ord = gt_orderings(static_cast<int>(P), gt.closed);
    auto gt_pts = gt.points.index_select(
        0, torch::tensor(ord[pair.ordering], torch::kInt64));
    auto pred_pts = polyline[pair.pred];

    torch::Tensor pred_edges, gt_edges;
    if (gt.closed) {
      auto roll = [](const torch::Tensor& t) {
        return torch::cat({t.narrow(0, 1, t.size(0) - 1), t.narrow(0, 0, 1)});
      };
      pred_edges = roll(pred_pts) - pred_pts;  // P edges with wrap
      gt_edges = roll(gt_pts) - gt_pts;
    } else {
      pred_edges = pred_pts.narrow(0, 1, P - 1) - pred_pts.narrow(0, 0, P - 1);
      gt_edges = gt_pts.narrow(0, 1, P - 1) - gt_pts.narrow(0, 0, P - 1);
    }
    auto dot = (pred_edges * gt_edges).sum(1);
    auto denom = pred_edges.norm(2, 1) * gt_edges.norm(2, 1);
    auto cos = dot / denom.clamp_min(kNormEps);
    auto term = torch::where(denom > kNormEps, 1.0 - cos,
                             torch::zeros_like(cos));
    total = total + term.mean();
  }
  return total / static_cast<double>(match.pairs.size());
}

LossBreakdown total_loss(
    const std::vector<std::vector<Prediction>>& per_view_layers,
    const std::vector<ViewTargets>& per_view_targets, const LossWeights& w) {
  TORCH_CHECK(per_view_layers.size() == per_view_targets.size(),
              "one target set per decoded view");
  TORCH_CHECK(!per_view_layers.empty(), "need at least one view");
  const auto S = per_view_layers.size();
  const auto L = per_view_layers[0].size();
  TORCH_CHECK(L >= 1, "need at least one decoder layer");

  auto opts = per_view_layers[0][0].polyline.options();
  auto total = torch::zeros({}, opts);
  LossBreakdown out;
  for (std::size_t s = 0; s < S; ++s) {
    TORCH_CHECK(per_view_layers[s].size() == L,
                "all views must have the same layer count");
    for (std::size_t l = 0; l < L; ++l) {
      const Prediction& pred = per_view_layers[s][l];
      MatchResult match = match_view(pred, per_view_targets[s], w);
      auto cls = focal_loss(pred.class_logits, match, per_view_targets[s],
                            w.focal_alpha, w.focal_gamma);
      auto pts = pts_loss(pred.polyline, match, per_view_targets[s]);
      auto dir = dir_loss(pred.polyline, match, per_view_targets[s]);
      total = total + w.lambda_cls * cls + w.lambda_pts * pts +
              w.lambda_dir * dir;
      out.cls += cls.item<double>();
      out.pts += pts.item<double>();
      out.dir += dir.item<double>();
    }
  }
  const double norm = 1.0 / static_cast<double>(S * L);
  out.total = total * norm;
  out.cls *= norm;
  out.pts *= norm;
  out.dir *= norm;
  out.total_value = out.total.item<double>();
  return out;
}

}  // namespace vecmap
