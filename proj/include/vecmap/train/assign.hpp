#pragma once

#include <torch/torch.h>

#include <vector>

#include "vecmap/config.hpp"
#include "vecmap/model/decoder.hpp"

namespace vecmap {

/// One ground-truth element prepared for training: P resampled points in
/// normalized [0,1]^2 coordinates.
struct GtElement {
  torch::Tensor points;  // P x 2
  int class_id{0};
  bool closed{false};
};
using ViewTargets = std::vector<GtElement>;

/// Equivalent point orderings of a ground-truth polyline: forward and
/// reversed for open elements, all cyclic shifts in both directions for
/// closed ones (2P orderings).
std::vector<std::vector<int64_t>> gt_orderings(int num_points, bool closed);

/// Stacked O x P x 2 tensor of the element's points under every ordering.
torch::Tensor stack_orderings(const GtElement& gt);

struct LossWeights {
  double lambda_cls{3.0};
  double lambda_pts{4.0};
  double lambda_dir{0.05};
  double focal_alpha{0.25};
  double focal_gamma{2.0};
};

struct PairCost {
  double cost{0.0};
  int ordering{0};  // index into gt_orderings
};

/// Matching cost between one prediction row and one ground truth:
/// focal-style classification cost plus the ordering-minimized mean L1
/// point distance, using the same lambda weights as the loss.
PairCost match_cost(const torch::Tensor& class_logits_row,
                    const torch::Tensor& polyline_row, const GtElement& gt,
                    const LossWeights& w);

/// Minimum-total-cost one-to-one assignment covering all columns of an
/// n_rows x n_cols matrix with n_rows >= n_cols. Returns the row assigned
/// to each column. Rejects n_cols > n_rows.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

struct MatchedPair {
  int pred{0};
  int gt{0};
  int ordering{0};
};

struct MatchResult {
  std::vector<MatchedPair> pairs;  // one per ground truth
};

/// Hungarian matching of one layer's predictions against one view's
/// targets. Cost evaluation runs without autograd.
MatchResult match_view(const Prediction& pred, const ViewTargets& targets,
                       const LossWeights& w);

}  // namespace vecmap
