#include "vecmap/model/enhancer.hpp"

#include <limits>

namespace vecmap {

STEnhancerImpl::STEnhancerImpl(const ModelConfig& config) : cfg(config) {
  TORCH_CHECK(cfg.enh_layers >= 0, "enh_layers must be >= 0");
  TORCH_CHECK(cfg.enh_window >= 1, "enh_window must be >= 1");
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < cfg.enh_layers; ++i) {
    blocks->push_back(EncoderBlock(cfg.dim, cfg.enh_heads));
  }
}

torch::Tensor STEnhancerImpl::frame_mask(EnhanceMask kind,
                                         const torch::Tensor& view_ids,
                                         const torch::Tensor& time_ids,
                                         int window) {
  if (kind == EnhanceMask::kCrossView) {
    return time_ids.unsqueeze(0) == time_ids.unsqueeze(1);
  }
  auto same_view = view_ids.unsqueeze(0) == view_ids.unsqueeze(1);
  auto gap = (time_ids.unsqueeze(0) - time_ids.unsqueeze(1)).abs();
  return same_view & (gap < window);
}

torch::Tensor STEnhancerImpl::run_block(EncoderBlockImpl& block,
                                        EnhanceMask kind, torch::Tensor feats,
                                        const torch::Tensor& view_ids,
                                        const torch::Tensor& time_ids) {
  const auto S = feats.size(0), C = feats.size(1);
  const auto Hp = feats.size(2), Wp = feats.size(3);
  const auto N = Hp * Wp;
  auto tokens = feats.flatten(2).transpose(1, 2).reshape({1, S * N, C});

  auto allowed = frame_mask(kind, view_ids, time_ids, cfg.enh_window)
                     .repeat_interleave(N, 0)
                     .repeat_interleave(N, 1);
  auto mask = torch::where(
      allowed, torch::zeros({1}, feats.options()),
      torch::full({1}, -std::numeric_limits<double>::infinity(),
                  feats.options()));

  tokens = block.forward(tokens, mask);
  return tokens.reshape({S, N, C}).transpose(1, 2).reshape({S, C, Hp, Wp});
}

torch::Tensor STEnhancerImpl::attend(std::size_t block_index, EnhanceMask kind,
                                     torch::Tensor feats,
                                     const torch::Tensor& view_ids,
                                     const torch::Tensor& time_ids) {
  TORCH_CHECK(block_index < blocks->size(), "block index out of range");
  auto& block = *blocks[block_index]->as<EncoderBlockImpl>();
  return run_block(block, kind, std::move(feats), view_ids, time_ids);
}

torch::Tensor STEnhancerImpl::forward(torch::Tensor feats,
                                      const torch::Tensor& view_ids,
                                      const torch::Tensor& time_ids) {
  for (std::size_t i = 0; i < blocks->size(); ++i) {
    auto& block = *blocks[i]->as<EncoderBlockImpl>();
    feats = run_block(block, mask_for_layer(i), feats, view_ids, time_ids);
  }
  return feats;
}

}  // namespace vecmap
