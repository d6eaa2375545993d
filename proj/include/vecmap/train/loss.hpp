#pragma once

#include <torch/torch.h>

#include <vector>

#include "vecmap/train/assign.hpp"

namespace vecmap {

/// Focal classification loss with a uniform alpha: matched instances are
/// supervised toward their class, everything else toward background. Sum
/// over classes, mean over instances.
torch::Tensor focal_loss(const torch::Tensor& class_logits,
                         const MatchResult& match, const ViewTargets& targets,
                         double alpha, double gamma);

/// Mean absolute point error over matched pairs, using the ordering chosen
/// during matching.
torch::Tensor pts_loss(const torch::Tensor& polyline, const MatchResult& match,
                       const ViewTargets& targets);

/// Mean (1 - cosine similarity) of consecutive edge vectors over matched
/// pairs; closed elements include the wrap edge, zero-length edges
/// contribute zero.
torch::Tensor dir_loss(const torch::Tensor& polyline, const MatchResult& match,
                       const ViewTargets& targets);

struct LossBreakdown {
  torch::Tensor total;  // scalar, connected to the graph
  double cls{0.0};      // per-term (1/(S*L)) sums, unweighted
  double pts{0.0};
  double dir{0.0};
  double total_value{0.0};
};

/// Deep-supervised training objective: matching is run independently per
/// (layer, view); the three weighted terms are averaged over all S views
/// and L layers.
LossBreakdown total_loss(
    const std::vector<std::vector<Prediction>>& per_view_layers,
    const std::vector<ViewTargets>& per_view_targets, const LossWeights& w);

}  // namespace vecmap
