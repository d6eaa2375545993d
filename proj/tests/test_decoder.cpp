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

#include <cmath>

#include "vecmap/model/decoder.hpp"
#include "vecmap/model/net.hpp"

using namespace vecmap;

namespace {

ModelConfig dec_cfg() {
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.image_h = 28;
  cfg.image_w = 28;
  cfg.patch = 14;
  cfg.depth = 2;
  cfg.taps = {2};
  cfg.heads = 2;
  cfg.enh_layers = 0;
  cfg.num_instances = 3;
  cfg.points_per_line = 4;
  cfg.dec_layers = 2;
  cfg.dec_heads = 2;
  cfg.dec_points = 2;
  return cfg;
}

}  // namespace

TEST_CASE("camera token projection follows the linear map") {
  torch::manual_seed(0);
  MapDecoder dec(dec_cfg());
  {
    torch::NoGradGuard g;
    dec->cam_proj->weight.zero_();
    dec->cam_proj->bias.zero_();
  }
  CHECK(dec->project_camera_token(torch::zeros({16}))
            .abs()
            .max()
            .item<double>() == 0.0);
  {
    torch::NoGradGuard g;
    dec->cam_proj->weight.copy_(torch::eye(16));
  }
  auto t = torch::randn({16});
  CHECK((dec->project_camera_token(t) - t).abs().max().item<double>() <
        1e-7);
}

TEST_CASE("camera projection gradient matches finite differences") {
  torch::manual_seed(1);
  MapDecoder dec(dec_cfg());
  dec->to(torch::kFloat64);
  auto t = torch::randn({16}, torch::kFloat64).requires_grad_(true);
  auto target = torch::randn({16}, torch::kFloat64);
  auto loss = (dec->project_camera_token(t) - target).pow(2).sum();
  loss.backward();
  const double h = 1e-5;
  auto td = t.detach();
  for (int64_t i = 0; i < 16; i += 3) {
    const double orig = td[i].item<double>();
    td[i] = orig + h;
    const double up =
        (dec->project_camera_token(td) - target).pow(2).sum().item<double>();
    td[i] = orig - h;
    const double dn =
        (dec->project_camera_token(td) - target).pow(2).sum().item<double>();
    td[i] = orig;
    const double fd = (up - dn) / (2 * h);
    const double an = t.grad()[i].item<double>();
    CHECK(std::abs(fd - an) / std::max({1e-8, std::abs(fd), std::abs(an)}) <
          1e-4);
  }
}

TEST_CASE("reference initialization") {
  torch::manual_seed(2);
  MapDecoder dec(dec_cfg());
  auto q = dec->combined_queries();
  CHECK(q.sizes() == torch::IntArrayRef({12, 16}));

  // zeroed MLP: sigma(0) = 0.5 everywhere
  {
    torch::NoGradGuard g;
    for (auto& p : dec->ref_init->parameters()) p.zero_();
  }
  auto refs = dec->init_references(q, torch::zeros({16}));
  CHECK((refs - 0.5).abs().max().item<double>() == 0.0);

  // camera-conditioned: two different embeddings give different references
  torch::manual_seed(3);
  MapDecoder dec2(dec_cfg());
  auto q2 = dec2->combined_queries();
  auto r1 = dec2->init_references(q2, torch::randn({16}));
  auto r2 = dec2->init_references(q2, torch::randn({16}));
  CHECK((r1 - r2).abs().max().item<double>() > 1e-6);

  // bounded in (0,1) for many random inputs
  for (int trial = 0; trial < 100; ++trial) {
    auto r = dec2->init_references(torch::randn({100, 16}) * 5,
                                   torch::randn({16}) * 5);
    CHECK(r.min().item<double>() > 0.0);
    CHECK(r.max().item<double>() < 1.0);
  }
}

TEST_CASE("deform params: zero weights give zero offsets and uniform attention") {
  torch::manual_seed(4);
  MapDecoder dec(dec_cfg());
  {
    torch::NoGradGuard g;
    for (std::size_t l = 0; l < 2; ++l) {
      for (auto& p : dec->offset_heads[l]->parameters()) p.zero_();
      for (auto& p : dec->weight_heads[l]->parameters()) p.zero_();
    }
  }
  auto q = dec->combined_queries();
  auto params = dec->deform_params(0, q, torch::randn({16}));
  CHECK(params.offsets.sizes() == torch::IntArrayRef({12, 2, 2, 2}));
  CHECK(params.logits.sizes() == torch::IntArrayRef({12, 2, 2}));
  CHECK(params.offsets.abs().max().item<double>() == 0.0);
  auto w = MapDecoderImpl::scale_attention(params.logits, torch::ones({2}));
  CHECK((w - 0.5).abs().max().item<double>() < 1e-7);  // uniform over K=2
}

TEST_CASE("deform offsets react to the camera embedding") {
  torch::manual_seed(5);
  MapDecoder dec(dec_cfg());
  auto q = dec->combined_queries();
  auto a = dec->deform_params(0, q, torch::randn({16}));
  auto b = dec->deform_params(0, q, torch::randn({16}));
  CHECK((a.offsets - b.offsets).abs().max().item<double>() > 1e-6);
}

TEST_CASE("camera temperature obeys the bounded sigmoid form") {
  torch::manual_seed(6);
  MapDecoder dec(dec_cfg());
  {
    torch::NoGradGuard g;
    dec->temp_heads[0]->as<torch::nn::LinearImpl>()->weight.zero_();
    dec->temp_heads[0]->as<torch::nn::LinearImpl>()->bias.zero_();
  }
  // sigma(0) = 0.5 -> midpoint of [0.5, 2.0]
  auto tau = dec->camera_temperature(0, torch::randn({16}));
  CHECK((tau - 1.25).abs().max().item<double>() < 1e-7);

  // saturation toward tau_max
  {
    torch::NoGradGuard g;
    dec->temp_heads[0]->as<torch::nn::LinearImpl>()->bias.fill_(50.0);
  }
  tau = dec->camera_temperature(0, torch::zeros({16}));
  CHECK((tau - 2.0).abs().max().item<double>() < 1e-7);

  // bounds hold for random embeddings on an untouched head
  for (int trial = 0; trial < 200; ++trial) {
    auto t2 = dec->camera_temperature(1, torch::randn({16}) * 10);
    CHECK(t2.min().item<double>() >= 0.5);
    CHECK(t2.max().item<double>() <= 2.0);
  }
}

TEST_CASE("temperature gradient matches finite differences") {
  torch::manual_seed(7);
  MapDecoder dec(dec_cfg());
  dec->to(torch::kFloat64);
  auto c = torch::randn({16}, torch::kFloat64).requires_grad_(true);
  auto loss = dec->camera_temperature(0, c).sum();
  loss.backward();
  const double h = 1e-5;
  auto cd = c.detach();
  for (int64_t i = 0; i < 16; i += 5) {
    const double orig = cd[i].item<double>();
    cd[i] = orig + h;
    const double up = dec->camera_temperature(0, cd).sum().item<double>();
    cd[i] = orig - h;
    const double dn = dec->camera_temperature(0, cd).sum().item<double>();
    cd[i] = orig;
    const double fd = (up - dn) / (2 * h);
    const double an = c.grad()[i].item<double>();
    CHECK(std::abs(fd - an) / std::max({1e-8, std::abs(fd), std::abs(an)}) <
          1e-4);
  }
}

TEST_CASE("scale_attention closed forms") {
  // equal logits -> uniform regardless of temperature
  auto logits = torch::ones({1, 1, 4});
  for (double tau : {0.5, 1.0, 2.0}) {
    auto w = MapDecoderImpl::scale_attention(logits, torch::full({1}, tau));
    CHECK((w - 0.25).abs().max().item<double>() < 1e-7);
  }

  // logits [2, 0]: tau=1 -> (e^2/(e^2+1), 1/(e^2+1)); tau=2 -> (e/(e+1), ...)
  auto l2 = torch::tensor({{{2.0f, 0.0f}}});
  auto w1 = MapDecoderImpl::scale_attention(l2, torch::ones({1}));
  const double e2 = std::exp(2.0);
  CHECK(w1[0][0][0].item<double>() ==
        doctest::Approx(e2 / (e2 + 1)).epsilon(1e-5));
  CHECK(w1[0][0][1].item<double>() ==
        doctest::Approx(1 / (e2 + 1)).epsilon(1e-5));
  auto w2 = MapDecoderImpl::scale_attention(l2, torch::full({1}, 2.0));
  const double e1 = std::exp(1.0);
  CHECK(w2[0][0][0].item<double>() ==
        doctest::Approx(e1 / (e1 + 1)).epsilon(1e-5));
  CHECK(w2[0][0][1].item<double>() ==
        doctest::Approx(1 / (e1 + 1)).epsilon(1e-5));

  // argmax never changes under temperature scaling
  torch::manual_seed(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto l = torch::randn({5, 2, 4});
    auto base = MapDecoderImpl::scale_attention(l, torch::ones({2}));
    for (double tau : {0.5, 1.3, 2.0}) {
      auto w = MapDecoderImpl::scale_attention(l, torch::full({2}, tau));
      CHECK(torch::equal(w.argmax(-1), base.argmax(-1)));
    }
  }
}

TEST_CASE("bilinear sampling closed forms") {
  // 1 channel, 2x2 grid with values {0,1,2,3}
  auto feat = torch::tensor({{{0.0f, 1.0f}, {2.0f, 3.0f}}});
  // grid nodes
  auto at = [&](double u, double v) {
    return bilinear_sample(feat, torch::tensor({{u, v}}, torch::kFloat))
        .item<double>();
  };
  CHECK(at(0, 0) == doctest::Approx(0.0));
  CHECK(at(1, 0) == doctest::Approx(1.0));
  CHECK(at(0, 1) == doctest::Approx(2.0));
  CHECK(at(1, 1) == doctest::Approx(3.0));
  // centre of the cell
  CHECK(at(0.5, 0.5) == doctest::Approx(1.5));
  // border clamp outside the grid
  CHECK(at(-2.0, 0.0) == doctest::Approx(0.0));
  CHECK(at(3.0, 1.0) == doctest::Approx(3.0));

  // constant feature map samples to the constant anywhere
  auto cfeat = torch::full({4, 3, 3}, 2.5f);
  torch::manual_seed(9);
  auto locs = torch::rand({17, 2}) * 1.6 - 0.3;
  auto vals = bilinear_sample(cfeat, locs);
  CHECK((vals - 2.5).abs().max().item<double>() < 1e-6);
}

TEST_CASE("reference refinement is anchored at the previous references") {
  torch::manual_seed(10);
  MapDecoder dec(dec_cfg());
  auto q = dec->combined_queries();
  auto c = torch::randn({16});
  {
    torch::NoGradGuard g;
    for (auto& p : dec->refine_mlps[0]->parameters()) p.zero_();
  }
  auto refs = torch::rand({12, 2}) * 0.9 + 0.05;
  auto next = dec->refine_references(0, q, c, refs);
  CHECK((next - refs).abs().max().item<double>() < 1e-6);

  // r = 0.5 with a +10 delta lands at sigmoid(10)
  {
    torch::NoGradGuard g;
    auto& mlp = *dec->refine_mlps[0]->as<torch::nn::SequentialImpl>();
    auto params = mlp.parameters();
    params[params.size() - 1].fill_(10.0);  // output bias
  }
  auto shifted = dec->refine_references(0, q, c, torch::full({12, 2}, 0.5));
  CHECK(shifted.min().item<double>() ==
        doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-6));

  CHECK_THROWS_AS(
      dec->refine_references(0, q, c, torch::full({12, 2}, 1.5)), c10::Error);
}

TEST_CASE("decode_view emits per-layer predictions with contract shapes") {
  ModelConfig cfg = dec_cfg();
  cfg.num_instances = 50;
  cfg.points_per_line = 20;
  torch::manual_seed(11);
  MapDecoder dec(cfg);
  auto feat = torch::randn({16, 2, 2});
  auto token = torch::randn({16});
  DecodeTrace trace;
  auto preds = dec->decode_view(feat, token, &trace);
  REQUIRE(preds.size() == 2);
  for (const auto& p : preds) {
    CHECK(p.class_logits.sizes() == torch::IntArrayRef({50, 3}));
    CHECK(p.polyline.sizes() == torch::IntArrayRef({50, 20, 2}));
    CHECK(p.polyline.min().item<double>() > 0.0);
    CHECK(p.polyline.max().item<double>() < 1.0);
  }

  // trace invariants: weights sum to 1, temperatures bounded, refs in (0,1)
  REQUIRE(trace.attn_weights.size() == 2);
  for (const auto& w : trace.attn_weights) {
    auto sums = w.sum(-1);
    CHECK((sums - 1.0).abs().max().item<double>() < 1e-6);
  }
  for (const auto& t : trace.temperatures) {
    CHECK(t.min().item<double>() >= 0.5);
    CHECK(t.max().item<double>() <= 2.0);
  }
  REQUIRE(trace.references.size() == 3);  // r^0 .. r^2
  for (const auto& r : trace.references) {
    CHECK(r.min().item<double>() > 0.0);
    CHECK(r.max().item<double>() < 1.0);
  }
}

TEST_CASE("different camera tokens give different predictions") {
  torch::manual_seed(12);
  MapDecoder dec(dec_cfg());
  auto feat = torch::randn({16, 2, 2});
  auto p1 = dec->decode_view(feat, torch::randn({16}));
  auto p2 = dec->decode_view(feat, torch::randn({16}));
  CHECK((p1.back().polyline - p2.back().polyline).abs().max().item<double>() >
        1e-6);

  // with camera conditioning disabled the token no longer matters
  ModelConfig off = dec_cfg();
  off.camera_conditioning = false;
  torch::manual_seed(12);
  MapDecoder dec_off(off);
  auto q1 = dec_off->decode_view(feat, torch::randn({16}));
  auto q2 = dec_off->decode_view(feat, torch::randn({16}));
  CHECK((q1.back().polyline - q2.back().polyline).abs().max().item<double>() ==
        0.0);
}

TEST_CASE("decoding a view ignores other views' features") {
  torch::manual_seed(13);
  ModelConfig cfg = dec_cfg();
  MapNet net(cfg);
  auto frames = torch::randn({2, 4, 28, 28});
  auto vs = torch::tensor({0L, 3L});
  auto ts = torch::tensor({0L, 0L});
  auto enc = net->encode(frames, vs, ts);

  auto preds = net->decode_frame(enc, 0);
  MapNetImpl::Encoded zeroed = enc;
  zeroed.features = enc.features.clone();
  zeroed.features[1].zero_();
  auto preds_z = net->decode_frame(zeroed, 0);
  CHECK((preds.back().polyline - preds_z.back().polyline)
            .abs()
            .max()
            .item<double>() == 0.0);
  CHECK((preds.back().class_logits - preds_z.back().class_logits)
            .abs()
            .max()
            .item<double>() == 0.0);
}

TEST_CASE("prediction_to_elements denormalizes and scores") {
  Prediction p;
  p.class_logits = torch::tensor({{8.0f, -8.0f, -8.0f},
                                  {-8.0f, -8.0f, 8.0f}});
  p.polyline = torch::tensor({{{0.5f, 0.5f}, {1.0f, 0.0f}},
                              {{0.0f, 1.0f}, {0.25f, 0.75f}}});
  auto elems = prediction_to_elements(p, 30.0);
  REQUIRE(elems.size() == 2);
  CHECK(elems[0].element.class_id == MapClass::kDivider);
  CHECK(elems[1].element.class_id == MapClass::kBoundary);
  CHECK(elems[0].score > 0.99);
  CHECK(elems[0].element.points[0].x == doctest::Approx(0.0));
  CHECK(elems[0].element.points[1].x == doctest::Approx(30.0));
  CHECK(elems[1].element.points[0].y == doctest::Approx(30.0));
  CHECK(elems[1].element.points[1].x == doctest::Approx(-15.0));
}
