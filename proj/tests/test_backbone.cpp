#include <torch/torch.h>

#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_GT
#undef CHECK_GE
#undef CHECK_LT
#undef CHECK_LE
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vecmap/model/backbone.hpp"
#include "vecmap/model/net.hpp"

using namespace vecmap;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.image_h = 28;
  cfg.image_w = 28;
  cfg.patch = 14;
  cfg.dim = 32;
  cfg.depth = 4;
  cfg.heads = 4;
  cfg.taps = {2, 4};
  cfg.enh_layers = 2;
  cfg.enh_heads = 4;
  cfg.num_instances = 3;
  cfg.points_per_line = 4;
  cfg.dec_layers = 2;
  cfg.dec_heads = 2;
  cfg.dec_points = 2;
  return cfg;
}

torch::Tensor ids(std::vector<int64_t> v) {
  return torch::tensor(v, torch::kInt64);
}

void zero_all(torch::nn::Module& m) {
  torch::NoGradGuard g;
  for (auto& p : m.parameters()) p.zero_();
}

}  // namespace

TEST_CASE("patchify yields one camera token plus the patch grid") {
  torch::manual_seed(0);
  GeometryBackbone bb(tiny_cfg());
  auto frames = torch::randn({3, 4, 28, 28});
  auto grid = bb->patchify(frames, ids({0, 1, 3}), ids({0, 0, 1}));
  CHECK(grid.sizes() == torch::IntArrayRef({3, 1 + 4, 32}));
}

TEST_CASE("patchify of a zero image with zero weights is zero") {
  torch::manual_seed(0);
  GeometryBackbone bb(tiny_cfg());
  zero_all(*bb);
  auto grid = bb->patchify(torch::zeros({1, 4, 28, 28}), ids({0}), ids({0}));
  CHECK(grid.abs().max().item<double>() == 0.0);
}

TEST_CASE("camera token init depends on view id, time embedding on time id") {
  torch::manual_seed(1);
  GeometryBackbone bb(tiny_cfg());
  auto frames = torch::zeros({2, 4, 28, 28});
  // same view, different timestamps
  auto grid = bb->patchify(frames, ids({2, 2}), ids({0, 1}));
  auto cam0 = grid[0][0], cam1 = grid[1][0];
  auto te = bb->time_embed->weight;
  auto diff = (cam0 - cam1) - (te[0] - te[1]);
  CHECK(diff.abs().max().item<double>() < 1e-6);

  // unknown view ids share the fallback slot
  auto g2 = bb->patchify(frames, ids({17, 42}), ids({0, 0}));
  CHECK((g2[0][0] - g2[1][0]).abs().max().item<double>() == 0.0);
}

TEST_CASE("patchify rejects indivisible resolutions with a padding hint") {
  ModelConfig cfg = tiny_cfg();
  cfg.image_h = 30;  // not divisible by 14
  CHECK_THROWS_WITH_AS(GeometryBackbone{cfg}, doctest::Contains("pad"),
                       c10::Error);

  GeometryBackbone bb(tiny_cfg());
  CHECK_THROWS_AS(
      bb->patchify(torch::zeros({1, 4, 30, 28}), ids({0}), ids({0})),
      c10::Error);
}

TEST_CASE("with one frame the frame and global layers are the same operator") {
  torch::manual_seed(2);
  GeometryBackbone bb(tiny_cfg());
  auto grid = bb->patchify(torch::randn({1, 4, 28, 28}), ids({0}), ids({0}));
  auto states = bb->alternating_attention(grid);
  // replay layer 1 (global) as if it were frame attention: S=1 so identical
  auto& block1 = *bb->blocks[1]->as<EncoderBlockImpl>();
  auto replay = block1.forward(states[0]);
  CHECK((replay - states[1]).abs().max().item<double>() < 1e-6);
}

TEST_CASE("even layers never mix frames, odd layers do") {
  torch::manual_seed(3);
  GeometryBackbone bb(tiny_cfg());
  auto frames = torch::randn({2, 4, 28, 28}).requires_grad_(true);
  auto grid = bb->patchify(frames, ids({0, 1}), ids({0, 0}));
  auto states = bb->alternating_attention(grid);

  // after the first (even, frame-attention) layer: zero cross-frame Jacobian
  auto probe_even = states[0][0].sum();
  auto grad_even = torch::autograd::grad({probe_even}, {frames}, {}, true)[0];
  CHECK(grad_even[1].abs().max().item<double>() == 0.0);
  CHECK(grad_even[0].abs().max().item<double>() > 0.0);

  // after the second (odd, global) layer: generically nonzero
  auto probe_odd = states[1][0].sum();
  auto grad_odd = torch::autograd::grad({probe_odd}, {frames}, {}, true)[0];
  CHECK(grad_odd[1].abs().max().item<double>() > 0.0);
}

TEST_CASE("pyramid_fuse with identity projection and zero conv is a reshape") {
  ModelConfig cfg = tiny_cfg();
  cfg.taps = {4};
  torch::manual_seed(4);
  GeometryBackbone bb(cfg);
  {
    torch::NoGradGuard g;
    bb->tap_projs[0]->as<torch::nn::LinearImpl>()->weight.copy_(
        torch::eye(cfg.dim));
    bb->tap_projs[0]->as<torch::nn::LinearImpl>()->bias.zero_();
  }
  auto grid = bb->patchify(torch::randn({2, 4, 28, 28}), ids({0, 1}),
                           ids({0, 0}));
  auto states = bb->alternating_attention(grid);
  auto fused = bb->pyramid_fuse(states);
  auto expect = states[3]
                    .narrow(1, 1, 4)
                    .transpose(1, 2)
                    .reshape({2, cfg.dim, 2, 2});
  CHECK((fused - expect).abs().max().item<double>() < 1e-6);
}

TEST_CASE("pyramid_fuse maps zero taps to zero at default init") {
  GeometryBackbone bb(tiny_cfg());
  {
    torch::NoGradGuard g;
    for (std::size_t i = 0; i < bb->tap_projs->size(); ++i) {
      bb->tap_projs[i]->as<torch::nn::LinearImpl>()->bias.zero_();
    }
  }
  std::vector<torch::Tensor> states(4, torch::zeros({2, 5, 32}));
  auto fused = bb->pyramid_fuse(states);
  CHECK(fused.abs().max().item<double>() == 0.0);
}

TEST_CASE("fused output keeps shape across view counts with fixed weights") {
  torch::manual_seed(5);
  GeometryBackbone bb(tiny_cfg());
  for (int S = 1; S <= 6; ++S) {
    std::vector<int64_t> vs, ts;
    for (int i = 0; i < S; ++i) {
      vs.push_back(i % 6);
      ts.push_back(i / 6);
    }
    auto out = bb->forward(torch::randn({S, 4, 28, 28}), ids(vs), ids(ts));
    CHECK(out.features.sizes() == torch::IntArrayRef({S, 32, 2, 2}));
    CHECK(out.cam_tokens.sizes() == torch::IntArrayRef({S, 32}));
  }
}

TEST_CASE("backbone is permutation equivariant over frames") {
  torch::manual_seed(6);
  GeometryBackbone bb(tiny_cfg());
  auto frames = torch::randn({4, 4, 28, 28});
  auto vs = ids({0, 1, 3, 0});
  auto ts = ids({0, 0, 1, 1});
  auto out = bb->forward(frames, vs, ts);

  auto perm = torch::tensor(std::vector<int64_t>{2, 0, 3, 1}, torch::kInt64);
  auto out_p = bb->forward(frames.index_select(0, perm),
                           vs.index_select(0, perm), ts.index_select(0, perm));
  auto expect_feat = out.features.index_select(0, perm);
  auto rel = (out_p.features - expect_feat).abs().max().item<double>() /
             (expect_feat.abs().max().item<double>() + 1e-12);
  CHECK(rel < 1e-5);
  auto expect_tok = out.cam_tokens.index_select(0, perm);
  CHECK((out_p.cam_tokens - expect_tok).abs().max().item<double>() /
            (expect_tok.abs().max().item<double>() + 1e-12) <
        1e-5);
}

TEST_CASE("backbone adapter interface is satisfied by the geometry backbone") {
  torch::manual_seed(7);
  GeometryBackbone bb(tiny_cfg());
  std::unique_ptr<BackboneAdapter> adapter =
      std::make_unique<GeometryBackboneAdapter>(bb);
  auto out = adapter->extract(torch::randn({2, 4, 28, 28}), ids({0, 3}),
                              ids({0, 0}));
  CHECK(out.features.defined());
  CHECK(out.cam_tokens.defined());
}
