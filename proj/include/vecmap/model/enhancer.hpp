#pragma once

#include <torch/torch.h>

#include "vecmap/config.hpp"
#include "vecmap/model/backbone.hpp"

namespace vecmap {

enum class EnhanceMask { kCrossView, kTemporal };

/// Spatial-temporal enhancement over perspective-view features: layers
/// alternate cross-view attention (frames sharing a timestamp) and temporal
/// attention (frames sharing a camera, within the window radius). Spatial
/// tokens inside one frame always attend each other fully; the masks gate
/// frame pairs only.
struct STEnhancerImpl : torch::nn::Module {
  explicit STEnhancerImpl(const ModelConfig& cfg);

  /// feats: S x C x H' x W'; returns the same shape. enh_layers == 0 is the
  /// identity.
  torch::Tensor forward(torch::Tensor feats, const torch::Tensor& view_ids,
                        const torch::Tensor& time_ids);

  /// Applies a single block with the given mask kind (for unit probes).
  torch::Tensor attend(std::size_t block_index, EnhanceMask kind,
                       torch::Tensor feats, const torch::Tensor& view_ids,
                       const torch::Tensor& time_ids);

  /// S x S boolean frame-pair adjacency for one mask kind.
  static torch::Tensor frame_mask(EnhanceMask kind,
                                  const torch::Tensor& view_ids,
                                  const torch::Tensor& time_ids, int window);

  /// Mask kind used by layer i (cross-view first, then temporal).
  static EnhanceMask mask_for_layer(std::size_t i) {
    return i % 2 == 0 ? EnhanceMask::kCrossView : EnhanceMask::kTemporal;
  }

  ModelConfig cfg;
  torch::nn::ModuleList blocks;

 private:
  torch::Tensor run_block(EncoderBlockImpl& block, EnhanceMask kind,
                          torch::Tensor feats, const torch::Tensor& view_ids,
                          const torch::Tensor& time_ids);
};
TORCH_MODULE(STEnhancer);

}  // namespace vecmap
