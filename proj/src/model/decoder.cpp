#include "vecmap/model/decoder.hpp"

namespace vecmap {

namespace {

constexpr double kRefEps = 1e-6;

torch::nn::Sequential make_mlp(int in, int hidden, int out) {
  return torch::nn::Sequential(torch::nn::Linear(in, hidden),
                               torch::nn::Functional(torch::relu),
                               torch::nn::Linear(hidden, out));
}

torch::Tensor inverse_sigmoid(const torch::Tensor& x) {
  auto c = x.clamp(kRefEps, 1.0 - kRefEps);
  return torch::log(c) - torch::log1p(-c);
}

}  // namespace

torch::Tensor bilinear_sample(const torch::Tensor& feat,
                              const torch::Tensor& locations) {
  TORCH_CHECK(feat.dim() == 3, "feat must be C x H x W");
  TORCH_CHECK(locations.size(-1) == 2, "locations must end in (u, v)");
  auto flat = locations.reshape({-1, 2});
  auto grid = (2.0 * flat - 1.0).view({1, -1, 1, 2});
  auto out = torch::nn::functional::grid_sample(
      feat.unsqueeze(0), grid,
      torch::nn::functional::GridSampleFuncOptions()
          .mode(torch::kBilinear)
          .padding_mode(torch::kBorder)
          .align_corners(true));
  // 1 x C x M x 1 -> M x C
  out = out.squeeze(3).squeeze(0).transpose(0, 1);
  auto out_shape = locations.sizes().vec();
  out_shape.back() = feat.size(0);
  return out.reshape(out_shape);
}

MapDecoderImpl::MapDecoderImpl(const ModelConfig& config) : cfg(config) {
  TORCH_CHECK(cfg.dec_layers >= 1, "dec_layers must be >= 1");
  TORCH_CHECK(cfg.tau_min > 0 && cfg.tau_min < cfg.tau_max,
              "need 0 < tau_min < tau_max");
  const int C = cfg.dim;
  instance_embed = register_parameter(
      "instance_embed", 0.02 * torch::randn({cfg.num_instances, C}));
  point_embed = register_parameter(
      "point_embed", 0.02 * torch::randn({cfg.points_per_line, C}));
  cam_proj = register_module("cam_proj", torch::nn::Linear(C, C));
  ref_init = register_module("ref_init", make_mlp(2 * C, C, 2));

  self_norms = register_module("self_norms", torch::nn::ModuleList());
  self_attns = register_module("self_attns", torch::nn::ModuleList());
  cross_norms = register_module("cross_norms", torch::nn::ModuleList());
  offset_heads = register_module("offset_heads", torch::nn::ModuleList());
  weight_heads = register_module("weight_heads", torch::nn::ModuleList());
  temp_heads = register_module("temp_heads", torch::nn::ModuleList());
  value_projs = register_module("value_projs", torch::nn::ModuleList());
  out_projs = register_module("out_projs", torch::nn::ModuleList());
  ffn_norms = register_module("ffn_norms", torch::nn::ModuleList());
  ffn1 = register_module("ffn1", torch::nn::ModuleList());
  ffn2 = register_module("ffn2", torch::nn::ModuleList());
  refine_mlps = register_module("refine_mlps", torch::nn::ModuleList());
  cls_heads = register_module("cls_heads", torch::nn::ModuleList());
  pt_heads = register_module("pt_heads", torch::nn::ModuleList());

  const int hk = cfg.dec_heads * cfg.dec_points;
  for (int l = 0; l < cfg.dec_layers; ++l) {
    self_norms->push_back(
        torch::nn::LayerNorm(torch::nn::LayerNormOptions({C})));
    self_attns->push_back(SelfAttention(C, cfg.dec_heads));
    cross_norms->push_back(
        torch::nn::LayerNorm(torch::nn::LayerNormOptions({C})));
    offset_heads->push_back(make_mlp(2 * C, C, hk * 2));
    weight_heads->push_back(make_mlp(2 * C, C, hk));
    temp_heads->push_back(torch::nn::Linear(C, cfg.dec_heads));
    value_projs->push_back(torch::nn::Linear(C, C));
    out_projs->push_back(torch::nn::Linear(C, C));
    ffn_norms->push_back(
        torch::nn::LayerNorm(torch::nn::LayerNormOptions({C})));
    ffn1->push_back(torch::nn::Linear(C, 4 * C));
    ffn2->push_back(torch::nn::Linear(4 * C, C));
    refine_mlps->push_back(make_mlp(2 * C, C, 2));
    cls_heads->push_back(torch::nn::Linear(C, cfg.num_classes));
    pt_heads->push_back(torch::nn::Linear(C, 2));
  }
}

torch::Tensor MapDecoderImpl::project_camera_token(
    const torch::Tensor& t) {
  return cam_proj->forward(t);
}

torch::Tensor MapDecoderImpl::camera_context(
    const torch::Tensor& cam_token) {
  auto c = cam_proj->forward(cam_token.view({-1}));
  if (!cfg.camera_conditioning) c = torch::zeros_like(c);
  return c;
}

torch::Tensor MapDecoderImpl::combined_queries() {
  // broadcast addition of instance and point embeddings -> (N*P) x C
  auto q = instance_embed.unsqueeze(1) + point_embed.unsqueeze(0);
  return q.reshape({cfg.num_instances * cfg.points_per_line, cfg.dim});
}

namespace {

torch::Tensor with_camera(const torch::Tensor& q, const torch::Tensor& c) {
  return torch::cat({q, c.unsqueeze(0).expand({q.size(0), c.size(0)})}, 1);
}

}  // namespace

torch::Tensor MapDecoderImpl::init_references(const torch::Tensor& q,
                                              const torch::Tensor& c) {
  return torch::sigmoid(ref_init->forward(with_camera(q, c)));
}

MapDecoderImpl::DeformParams MapDecoderImpl::deform_params(
    std::size_t layer, const torch::Tensor& q, const torch::Tensor& c) {
  auto qc = with_camera(q, c);
  const auto NP = q.size(0);
  DeformParams p;
  p.offsets = offset_heads[layer]
                  ->as<torch::nn::SequentialImpl>()
                  ->forward(qc)
                  .view({NP, cfg.dec_heads, cfg.dec_points, 2});
  p.logits = weight_heads[layer]
                 ->as<torch::nn::SequentialImpl>()
                 ->forward(qc)
                 .view({NP, cfg.dec_heads, cfg.dec_points});
  return p;
}

torch::Tensor MapDecoderImpl::camera_temperature(std::size_t layer,
                                                 const torch::Tensor& c) {
  auto raw = temp_heads[layer]->as<torch::nn::LinearImpl>()->forward(c);
  return torch::sigmoid(raw) * (cfg.tau_max - cfg.tau_min) + cfg.tau_min;
}

torch::Tensor MapDecoderImpl::scale_attention(const torch::Tensor& logits,
                                              const torch::Tensor& tau) {
  // logits: ... x heads x K, tau: heads
  return torch::softmax(logits / tau.unsqueeze(-1), -1);
}

torch::Tensor MapDecoderImpl::refine_references(std::size_t layer,
                                                const torch::Tensor& q,
                                                const torch::Tensor& c,
                                                const torch::Tensor& refs) {
  TORCH_CHECK((refs.ge(0.0) & refs.le(1.0)).all().item<bool>(),
              "reference points left [0,1]^2");
  auto delta = refine_mlps[layer]->as<torch::nn::SequentialImpl>()->forward(
      with_camera(q, c));
  return torch::sigmoid(delta + inverse_sigmoid(refs));
}

std::vector<Prediction> MapDecoderImpl::decode_view(
    const torch::Tensor& feat, const torch::Tensor& cam_token,
    DecodeTrace* trace) {
  TORCH_CHECK(feat.dim() == 3, "feat must be C x H' x W'");
  const int C = cfg.dim;
  const auto NP = static_cast<int64_t>(cfg.num_instances) *
                  cfg.points_per_line;

  auto c = camera_context(cam_token);
  auto q = combined_queries();
  auto refs = init_references(q, c);
  if (trace) trace->references.push_back(refs);

  std::vector<Prediction> preds;
  preds.reserve(cfg.dec_layers);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    // query self-attention
    {
      auto& norm = *self_norms[l]->as<torch::nn::LayerNormImpl>();
      auto& attn = *self_attns[l]->as<SelfAttentionImpl>();
      q = q + attn.forward(norm.forward(q).unsqueeze(0)).squeeze(0);
    }
    // view-adaptive deformable cross-attention
    {
      auto& norm = *cross_norms[l]->as<torch::nn::LayerNormImpl>();
      auto qn = norm.forward(q);
      auto params = deform_params(l, qn, c);
      auto tau = camera_temperature(l, c);
      auto weights = scale_attention(params.logits, tau);
      if (trace) {
        trace->attn_weights.push_back(weights);
        trace->temperatures.push_back(tau);
      }

      auto value = value_projs[l]
                       ->as<torch::nn::LinearImpl>()
                       ->forward(feat.flatten(1).transpose(0, 1))
                       .transpose(0, 1)
                       .reshape({cfg.dec_heads, C / cfg.dec_heads,
                                 feat.size(1), feat.size(2)});
      // sampling locations r + dr per head/point
      auto locs = refs.view({NP, 1, 1, 2}) + params.offsets;
      auto grid = (2.0 * locs - 1.0).permute({1, 0, 2, 3});  // H x NP x K x 2
      auto sampled = torch::nn::functional::grid_sample(
          value, grid,
          torch::nn::functional::GridSampleFuncOptions()
              .mode(torch::kBilinear)
              .padding_mode(torch::kBorder)
              .align_corners(true));  // H x C/H x NP x K
      auto agg = (sampled * weights.permute({1, 0, 2}).unsqueeze(1))
                     .sum(-1);                       // H x C/H x NP
      auto merged = agg.permute({2, 0, 1}).reshape({NP, C});
      q = q + out_projs[l]->as<torch::nn::LinearImpl>()->forward(merged);
    }
    // feed-forward
    {
      auto& norm = *ffn_norms[l]->as<torch::nn::LayerNormImpl>();
      auto h = ffn1[l]->as<torch::nn::LinearImpl>()->forward(norm.forward(q));
      q = q + ffn2[l]->as<torch::nn::LinearImpl>()->forward(torch::gelu(h));
    }

    refs = refine_references(l, q, c, refs);
    if (trace) trace->references.push_back(refs);

    Prediction p;
    auto inst = q.view({cfg.num_instances, cfg.points_per_line, C}).mean(1);
    p.class_logits = cls_heads[l]->as<torch::nn::LinearImpl>()->forward(inst);
    auto delta = pt_heads[l]->as<torch::nn::LinearImpl>()->forward(q);
    p.polyline = torch::sigmoid(delta + inverse_sigmoid(refs))
                     .view({cfg.num_instances, cfg.points_per_line, 2});
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace vecmap
