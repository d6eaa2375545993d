#include "vecmap/model/backbone.hpp"

#include <cmath>

namespace vecmap {

SelfAttentionImpl::SelfAttentionImpl(int dim, int n_heads) : heads(n_heads) {
  TORCH_CHECK(dim % n_heads == 0, "dim must be divisible by heads");
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
}

torch::Tensor SelfAttentionImpl::forward(torch::Tensor x,
                                         const torch::Tensor& mask) {
  const auto B = x.size(0), T = x.size(1), C = x.size(2);
  const auto dh = C / heads;
  auto parts = qkv(x).chunk(3, /*dim=*/2);
  auto shape_heads = [&](torch::Tensor t) {
    return t.view({B, T, heads, dh}).transpose(1, 2);  // B x H x T x dh
  };
  auto q = shape_heads(parts[0]);
  auto k = shape_heads(parts[1]);
  auto v = shape_heads(parts[2]);

  auto scores = torch::matmul(q, k.transpose(-2, -1)) /
                std::sqrt(static_cast<double>(dh));
  if (mask.defined()) scores = scores + mask;  // broadcast over B, H
  auto attn = torch::softmax(scores, -1);
  auto out = torch::matmul(attn, v);  // B x H x T x dh
  out = out.transpose(1, 2).reshape({B, T, C});
  return proj(out);
}

EncoderBlockImpl::EncoderBlockImpl(int dim, int heads, int ffn_mult) {
  norm1 = register_module(
      "norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2 = register_module(
      "norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", SelfAttention(dim, heads));
  fc1 = register_module("fc1", torch::nn::Linear(dim, ffn_mult * dim));
  fc2 = register_module("fc2", torch::nn::Linear(ffn_mult * dim, dim));
}

torch::Tensor EncoderBlockImpl::forward(torch::Tensor x,
                                        const torch::Tensor& mask) {
  x = x + attn(norm1(x), mask);
  x = x + fc2(torch::gelu(fc1(norm2(x))));
  return x;
}

ResidualConvImpl::ResidualConvImpl(int channels) {
  conv1 = register_module(
      "conv1", torch::nn::Conv2d(
                   torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
  conv2 = register_module(
      "conv2", torch::nn::Conv2d(
                   torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
  torch::NoGradGuard no_grad;
  conv2->weight.zero_();
  conv2->bias.zero_();
}

torch::Tensor ResidualConvImpl::forward(torch::Tensor x) {
  return x + conv2(torch::gelu(conv1(x)));
}

GeometryBackboneImpl::GeometryBackboneImpl(const ModelConfig& config)
    : cfg(config) {
  TORCH_CHECK(cfg.depth >= 2 && cfg.depth % 2 == 0,
              "backbone depth must be even and >= 2");
  TORCH_CHECK(!cfg.taps.empty(), "need at least one tap layer");
  for (int t : cfg.taps) {
    TORCH_CHECK(t >= 1 && t <= cfg.depth, "tap layer out of range");
  }
  TORCH_CHECK(cfg.image_h % cfg.patch == 0 && cfg.image_w % cfg.patch == 0,
              "image size must be divisible by the patch size; pad inputs");
  grid_h = cfg.image_h / cfg.patch;
  grid_w = cfg.image_w / cfg.patch;

  patch_embed = register_module(
      "patch_embed",
      torch::nn::Conv2d(
          torch::nn::Conv2dOptions(cfg.in_channels, cfg.dim, cfg.patch)
              .stride(cfg.patch)));
  camera_embed =
      register_module("camera_embed", torch::nn::Embedding(7, cfg.dim));
  time_embed = register_module("time_embed",
                               torch::nn::Embedding(cfg.max_time, cfg.dim));
  pos_embed = register_parameter(
      "pos_embed", 0.02 * torch::randn({grid_h * grid_w, cfg.dim}));

  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int d = 0; d < cfg.depth; ++d) {
    blocks->push_back(EncoderBlock(cfg.dim, cfg.heads));
  }
  tap_projs = register_module("tap_projs", torch::nn::ModuleList());
  fuse_blocks = register_module("fuse_blocks", torch::nn::ModuleList());
  for (std::size_t i = 0; i < cfg.taps.size(); ++i) {
    tap_projs->push_back(torch::nn::Linear(cfg.dim, cfg.dim));
    if (i + 1 < cfg.taps.size()) {
      fuse_blocks->push_back(ResidualConv(cfg.dim));
    }
  }
}

torch::Tensor GeometryBackboneImpl::patchify(const torch::Tensor& frames,
                                             const torch::Tensor& view_ids,
                                             const torch::Tensor& time_ids) {
  TORCH_CHECK(frames.dim() == 4, "frames must be S x C x H x W");
  TORCH_CHECK(frames.size(2) == cfg.image_h && frames.size(3) == cfg.image_w,
              "frame size ", frames.size(2), "x", frames.size(3),
              " does not match the configured ", cfg.image_h, "x",
              cfg.image_w, "; pad inputs to a multiple of the patch size");
  auto patches = patch_embed(frames);                // S x C x H' x W'
  auto tokens = patches.flatten(2).transpose(1, 2);  // S x N x C
  tokens = tokens + pos_embed.unsqueeze(0);

  // unseen rigs fall back to the shared "unknown" slot 6
  auto slots = torch::where((view_ids >= 0) & (view_ids < 6), view_ids,
                            torch::full_like(view_ids, 6));
  auto cam = camera_embed(slots).unsqueeze(1);  // S x 1 x C
  auto grid = torch::cat({cam, tokens}, 1);     // S x (1+N) x C

  TORCH_CHECK(time_ids.min().item<int64_t>() >= 0 &&
                  time_ids.max().item<int64_t>() < cfg.max_time,
              "time id outside the embedding table");
  grid = grid + time_embed(time_ids).unsqueeze(1);
  return grid;
}

std::vector<torch::Tensor> GeometryBackboneImpl::alternating_attention(
    torch::Tensor grid) {
  const auto S = grid.size(0);
  const auto T = grid.size(1);
  const auto C = grid.size(2);
  std::vector<torch::Tensor> states;
  states.reserve(blocks->size());
  for (std::size_t d = 0; d < blocks->size(); ++d) {
    auto& block = *blocks[d]->as<EncoderBlockImpl>();
    if (d % 2 == 0) {
      grid = block.forward(grid);  // frame attention: frames are the batch
    } else {
      auto flat = grid.reshape({1, S * T, C});
      grid = block.forward(flat).reshape({S, T, C});
    }
    states.push_back(grid);
  }
  return states;
}

torch::Tensor GeometryBackboneImpl::pyramid_fuse(
    const std::vector<torch::Tensor>& states) {
  TORCH_CHECK(states.size() == static_cast<std::size_t>(cfg.depth),
              "expected one state per layer");
  std::vector<torch::Tensor> taps;
  for (std::size_t i = 0; i < cfg.taps.size(); ++i) {
    auto state = states[cfg.taps[i] - 1];
    auto spatial = state.narrow(1, 1, state.size(1) - 1);  // drop camera token
    auto& proj = *tap_projs[i]->as<torch::nn::LinearImpl>();
    auto t = proj.forward(spatial);  // S x N x C
    taps.push_back(
        t.transpose(1, 2).reshape({state.size(0), cfg.dim, grid_h, grid_w}));
  }
  auto acc = taps.back();
  for (std::size_t i = taps.size() - 1; i-- > 0;) {
    auto& fuse = *fuse_blocks[i]->as<ResidualConvImpl>();
    acc = taps[i] + fuse.forward(acc);
  }
  return acc;
}

BackboneOutput GeometryBackboneImpl::forward(const torch::Tensor& frames,
                                             const torch::Tensor& view_ids,
                                             const torch::Tensor& time_ids) {
  auto grid = patchify(frames, view_ids, time_ids);
  auto states = alternating_attention(grid);
  BackboneOutput out;
  out.features = pyramid_fuse(states);
  out.cam_tokens = states.back().select(1, 0);  // S x C
  return out;
}

}  // namespace vecmap
