#pragma once

#include <torch/torch.h>

#include <vector>

#include "vecmap/config.hpp"

namespace vecmap {

/// Pre-norm multi-head self-attention with an optional additive mask
/// (0 where attention is allowed, -inf where it is not).
struct SelfAttentionImpl : torch::nn::Module {
  SelfAttentionImpl(int dim, int heads);
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& mask = {});

  torch::nn::Linear qkv{nullptr};
  torch::nn::Linear proj{nullptr};
  int heads;
};
TORCH_MODULE(SelfAttention);

/// Transformer encoder block: pre-norm attention and feed-forward, both
/// with residual connections.
struct EncoderBlockImpl : torch::nn::Module {
  EncoderBlockImpl(int dim, int heads, int ffn_mult = 4);
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& mask = {});

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  SelfAttention attn{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(EncoderBlock);

struct BackboneOutput {
  torch::Tensor features;    // S x C x H' x W'
  torch::Tensor cam_tokens;  // S x C
};

/// Geometry-token feature extractor: linear patch embedding with a learned
/// camera token per frame, alternating frame/global attention, and residual
/// convolutional fusion of intermediate tap layers.
struct GeometryBackboneImpl : torch::nn::Module {
  explicit GeometryBackboneImpl(const ModelConfig& cfg);

  /// frames: S x C_in x H x W (float); view_ids, time_ids: int64 S.
  BackboneOutput forward(const torch::Tensor& frames,
                         const torch::Tensor& view_ids,
                         const torch::Tensor& time_ids);

  /// Token grid S x (1 + N_patch) x C; slot 0 is the camera token.
  torch::Tensor patchify(const torch::Tensor& frames,
                         const torch::Tensor& view_ids,
                         const torch::Tensor& time_ids);

  /// Runs the alternating stack; element d is the grid after layer d+1
  /// (even layers 0,2,... attend within frames, odd ones globally).
  std::vector<torch::Tensor> alternating_attention(torch::Tensor grid);

  /// Fuses the configured tap layers into one feature map, deepest first.
  torch::Tensor pyramid_fuse(const std::vector<torch::Tensor>& states);

  ModelConfig cfg;
  int grid_h{0}, grid_w{0};
  torch::nn::Conv2d patch_embed{nullptr};
  torch::nn::Embedding camera_embed{nullptr};  // 6 canonical slots + unknown
  torch::nn::Embedding time_embed{nullptr};
  torch::Tensor pos_embed;  // N_patch x C
  torch::nn::ModuleList blocks;
  torch::nn::ModuleList tap_projs;
  torch::nn::ModuleList fuse_blocks;  // residual conv blocks, one per merge
};
TORCH_MODULE(GeometryBackbone);

/// Residual 3x3 convolution block used by the pyramid fusion. The second
/// convolution is zero-initialized so the block starts as the identity.
struct ResidualConvImpl : torch::nn::Module {
  explicit ResidualConvImpl(int channels);
  torch::Tensor forward(torch::Tensor x);
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(ResidualConv);

}  // namespace vecmap
