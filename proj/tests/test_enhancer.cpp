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

#include "vecmap/model/enhancer.hpp"

using namespace vecmap;

namespace {

ModelConfig enh_cfg(int layers = 2, int window = 5) {
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.enh_layers = layers;
  cfg.enh_window = window;
  cfg.enh_heads = 2;
  return cfg;
}

torch::Tensor ids(std::vector<int64_t> v) {
  return torch::tensor(v, torch::kInt64);
}

torch::Tensor feats(int S, int C = 16, int H = 2, int W = 2) {
  return torch::randn({S, C, H, W});
}

// max |d out[frame i]| / d in[frame j] via autograd
double cross_grad(STEnhancer& enh, EnhanceMask kind, torch::Tensor x,
                  const torch::Tensor& vs, const torch::Tensor& ts, int i,
                  int j) {
  auto in = x.clone().requires_grad_(true);
  auto out = enh->attend(0, kind, in, vs, ts);
  auto probe = out[i].sum();
  auto grad = torch::autograd::grad({probe}, {in})[0];
  return grad[j].abs().max().item<double>();
}

}  // namespace

TEST_CASE("cross-view attention with zeroed projections is the identity") {
  torch::manual_seed(0);
  STEnhancer enh(enh_cfg());
  {
    torch::NoGradGuard g;
    auto& block = *enh->blocks[0]->as<EncoderBlockImpl>();
    block.attn->proj->weight.zero_();
    block.attn->proj->bias.zero_();
    block.fc2->weight.zero_();
    block.fc2->bias.zero_();
  }
  // all frames at distinct timestamps: each may only attend itself anyway
  auto x = feats(3);
  auto out = enh->attend(0, EnhanceMask::kCrossView, x, ids({0, 1, 2}),
                         ids({0, 1, 2}));
  CHECK((out - x).abs().max().item<double>() == 0.0);
}

TEST_CASE("cross-view mask gates frame pairs by timestamp") {
  torch::manual_seed(1);
  STEnhancer enh(enh_cfg());
  auto x = feats(3);
  auto vs = ids({0, 1, 2});
  auto ts = ids({0, 0, 1});
  // tau=1 frame must not see tau=0 frames
  CHECK(cross_grad(enh, EnhanceMask::kCrossView, x, vs, ts, 2, 0) == 0.0);
  CHECK(cross_grad(enh, EnhanceMask::kCrossView, x, vs, ts, 2, 1) == 0.0);
  // frames sharing tau=0 interact (random weights)
  CHECK(cross_grad(enh, EnhanceMask::kCrossView, x, vs, ts, 0, 1) > 0.0);
  CHECK(cross_grad(enh, EnhanceMask::kCrossView, x, vs, ts, 1, 0) > 0.0);
}

TEST_CASE("temporal mask gates by camera and window radius") {
  torch::manual_seed(2);
  STEnhancer enh(enh_cfg(/*layers=*/2, /*window=*/2));
  auto x = feats(4);
  auto vs = ids({0, 0, 0, 1});
  auto ts = ids({0, 1, 4, 1});

  // same camera, adjacent timestamps: visible
  CHECK(cross_grad(enh, EnhanceMask::kTemporal, x, vs, ts, 0, 1) > 0.0);
  // same camera but gap 3 >= window 2: hidden
  CHECK(cross_grad(enh, EnhanceMask::kTemporal, x, vs, ts, 2, 0) == 0.0);
  CHECK(cross_grad(enh, EnhanceMask::kTemporal, x, vs, ts, 2, 1) == 0.0);
  // different cameras: hidden even at equal timestamps
  CHECK(cross_grad(enh, EnhanceMask::kTemporal, x, vs, ts, 3, 1) == 0.0);

  // single camera with a window covering the whole sequence: all pairs flow
  STEnhancer wide(enh_cfg(2, 16));
  auto xs = feats(3);
  auto one = ids({0, 0, 0});
  auto seq = ids({0, 1, 2});
  CHECK(cross_grad(wide, EnhanceMask::kTemporal, xs, one, seq, 0, 2) > 0.0);
  CHECK(cross_grad(wide, EnhanceMask::kTemporal, xs, one, seq, 2, 0) > 0.0);
}

TEST_CASE("enhance with zero layers is the identity") {
  STEnhancer enh(enh_cfg(0));
  auto x = feats(2);
  auto out = enh->forward(x, ids({0, 1}), ids({0, 0}));
  CHECK((out - x).abs().max().item<double>() == 0.0);
}

TEST_CASE("enhance preserves shape and is permutation equivariant") {
  torch::manual_seed(3);
  STEnhancer enh(enh_cfg(4, 5));
  auto x = feats(4);
  auto vs = ids({0, 3, 0, 3});
  auto ts = ids({0, 0, 1, 1});
  auto out = enh->forward(x, vs, ts);
  CHECK(out.sizes() == x.sizes());

  auto perm = torch::tensor(std::vector<int64_t>{3, 1, 0, 2}, torch::kInt64);
  auto out_p = enh->forward(x.index_select(0, perm), vs.index_select(0, perm),
                            ts.index_select(0, perm));
  auto expect = out.index_select(0, perm);
  auto rel = (out_p - expect).abs().max().item<double>() /
             (expect.abs().max().item<double>() + 1e-12);
  CHECK(rel < 1e-5);
}

TEST_CASE("frames sharing neither camera nor timestamp never interact") {
  // quantified mask soundness on a layout with no bridging chain
  torch::manual_seed(4);
  STEnhancer enh(enh_cfg(4, 5));
  auto x = feats(2);
  auto vs = ids({0, 1});
  auto ts = ids({0, 1});
  auto in = x.clone().requires_grad_(true);
  auto out = enh->forward(in, vs, ts);
  auto grad = torch::autograd::grad({out[0].sum()}, {in})[0];
  CHECK(grad[1].abs().max().item<double>() == 0.0);

  // with a bridge frame (shares tau with one, nu with the other) the
  // information may flow across layers
  auto x3 = feats(3);
  auto in3 = x3.clone().requires_grad_(true);
  auto out3 = enh->forward(in3, ids({0, 0, 1}), ids({0, 1, 1}));
  auto grad3 = torch::autograd::grad({out3[0].sum()}, {in3})[0];
  CHECK(grad3[2].abs().max().item<double>() > 0.0);
}

TEST_CASE("enhance gradients match central finite differences") {
  torch::manual_seed(5);
  ModelConfig cfg = enh_cfg(2, 2);
  cfg.dim = 8;
  cfg.enh_heads = 2;
  STEnhancer enh(cfg);
  enh->to(torch::kFloat64);

  auto x = torch::randn({2, 8, 2, 2}, torch::kFloat64).requires_grad_(true);
  auto vs = ids({0, 0});
  auto ts = ids({0, 1});
  auto target = torch::randn({2, 8, 2, 2}, torch::kFloat64);
  auto loss = (enh->forward(x, vs, ts) - target).pow(2).sum();
  loss.backward();

  const double h = 1e-3;
  // probe a spread of input coordinates
  auto xg = x.grad();
  auto flat = x.detach().view(-1);
  auto gflat = xg.view(-1);
  for (int64_t idx = 0; idx < flat.size(0); idx += 7) {
    const double orig = flat[idx].item<double>();
    flat[idx] = orig + h;
    const double up =
        (enh->forward(x.detach(), vs, ts) - target).pow(2).sum().item<double>();
    flat[idx] = orig - h;
    const double dn =
        (enh->forward(x.detach(), vs, ts) - target).pow(2).sum().item<double>();
    flat[idx] = orig;
    const double fd = (up - dn) / (2 * h);
    const double an = gflat[idx].item<double>();
    const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd),
                                                     std::abs(an)});
    CHECK(rel < 1e-4);
  }

  // and a handful of parameters
  int checked = 0;
  for (auto& p : enh->parameters()) {
    if (checked >= 3) break;
    auto pf = p.view(-1);
    auto pg = p.grad().view(-1);
    const int64_t idx = pf.size(0) / 2;
    torch::NoGradGuard g;
    const double orig = pf[idx].item<double>();
    pf[idx] = orig + h;
    const double up =
        (enh->forward(x.detach(), vs, ts) - target).pow(2).sum().item<double>();
    pf[idx] = orig - h;
    const double dn =
        (enh->forward(x.detach(), vs, ts) - target).pow(2).sum().item<double>();
    pf[idx] = orig;
    const double fd = (up - dn) / (2 * h);
    const double an = pg[idx].item<double>();
    CHECK(std::abs(fd - an) /
              std::max({1e-6, std::abs(fd), std::abs(an)}) <
          1e-4);
    ++checked;
  }
}
