#pragma once

#include <torch/torch.h>

#include <vector>

#include "vecmap/config.hpp"
#include "vecmap/model/backbone.hpp"

namespace vecmap {

/// Bilinear interpolation over a C x H x W feature map at normalized [0,1]^2
/// locations (any trailing shape ... x 2), border-clamped outside the grid
/// and differentiable in both features and locations. Location (0,0) is the
/// centre of the top-left cell, (1,1) the bottom-right.
torch::Tensor bilinear_sample(const torch::Tensor& feat,
                              const torch::Tensor& locations);

struct Prediction {
  torch::Tensor class_logits;  // N x num_classes
  torch::Tensor polyline;      // N x P x 2 in (0,1)
};

/// Per-layer internals recorded during decoding, for invariant checks.
struct DecodeTrace {
  std::vector<torch::Tensor> attn_weights;  // (N*P) x heads x K, post-softmax
  std::vector<torch::Tensor> temperatures;  // heads
  std::vector<torch::Tensor> references;    // r^0 .. r^L, (N*P) x 2
};

/// Camera-aware deformable decoder: hierarchical instance+point queries,
/// camera-conditioned reference initialization, per-head camera temperature,
/// deformable feature sampling and iterative reference refinement, with
/// classification and polyline heads after every layer.
struct MapDecoderImpl : torch::nn::Module {
  explicit MapDecoderImpl(const ModelConfig& cfg);

  /// feat: C x H' x W' (one view), cam_token: C. Returns one Prediction per
  /// layer, shallow to deep, for deep supervision.
  std::vector<Prediction> decode_view(const torch::Tensor& feat,
                                      const torch::Tensor& cam_token,
                                      DecodeTrace* trace = nullptr);

  // --- individual stages, exposed for unit probes ---

  torch::Tensor project_camera_token(const torch::Tensor& t);  // c_s
  torch::Tensor combined_queries();  // (N*P) x C

  torch::Tensor init_references(const torch::Tensor& q,
                                const torch::Tensor& c);

  struct DeformParams {
    torch::Tensor offsets;  // (N*P) x heads x K x 2
    torch::Tensor logits;   // (N*P) x heads x K
  };
  DeformParams deform_params(std::size_t layer, const torch::Tensor& q,
                             const torch::Tensor& c);

  torch::Tensor camera_temperature(std::size_t layer,
                                   const torch::Tensor& c);  // heads

  /// softmax(logits / tau) over the K sampling locations.
  static torch::Tensor scale_attention(const torch::Tensor& logits,
                                       const torch::Tensor& tau);

  torch::Tensor refine_references(std::size_t layer, const torch::Tensor& q,
                                  const torch::Tensor& c,
                                  const torch::Tensor& refs);

  /// Camera embedding used throughout one view's decode; zeros when camera
  /// conditioning is disabled.
  torch::Tensor camera_context(const torch::Tensor& cam_token);

  ModelConfig cfg;
  torch::Tensor instance_embed;  // N x C
  torch::Tensor point_embed;     // P x C
  torch::nn::Linear cam_proj{nullptr};
  torch::nn::Sequential ref_init{nullptr};
  torch::nn::ModuleList self_norms, self_attns;
  torch::nn::ModuleList cross_norms;
  torch::nn::ModuleList offset_heads, weight_heads, temp_heads;
  torch::nn::ModuleList value_projs, out_projs;
  torch::nn::ModuleList ffn_norms, ffn1, ffn2;
  torch::nn::ModuleList refine_mlps;
  torch::nn::ModuleList cls_heads, pt_heads;
};
TORCH_MODULE(MapDecoder);

}  // namespace vecmap
