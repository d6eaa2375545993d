#include "vecmap/model/net.hpp"

namespace vecmap {

MapNetImpl::MapNetImpl(const ModelConfig& config) : cfg(config) {
  backbone = register_module("backbone", GeometryBackbone(cfg));
  enhancer = register_module("enhancer", STEnhancer(cfg));
  decoder = register_module("decoder", MapDecoder(cfg));
}

MapNetImpl::Encoded MapNetImpl::encode(const torch::Tensor& frames,
                                       const torch::Tensor& view_ids,
                                       const torch::Tensor& time_ids) {
  auto out = backbone->forward(frames, view_ids, time_ids);
  Encoded enc;
  enc.features = enhancer->forward(out.features, view_ids, time_ids);
  enc.cam_tokens = out.cam_tokens;
  return enc;
}

std::vector<Prediction> MapNetImpl::decode_frame(const Encoded& enc,
                                                 int64_t frame,
                                                 DecodeTrace* trace) {
  return decoder->decode_view(enc.features[frame], enc.cam_tokens[frame],
                              trace);
}

std::vector<std::pair<int64_t, std::vector<Prediction>>>
MapNetImpl::decode_current(const Encoded& enc, const torch::Tensor& time_ids) {
  const auto t_last = time_ids.max().item<int64_t>();
  std::vector<std::pair<int64_t, std::vector<Prediction>>> out;
  for (int64_t s = 0; s < time_ids.size(0); ++s) {
    if (time_ids[s].item<int64_t>() != t_last) continue;
    out.emplace_back(s, decode_frame(enc, s));
  }
  return out;
}

std::vector<ScoredElement> prediction_to_elements(const Prediction& pred,
                                                  double crop_half_extent) {
  const auto probs = torch::sigmoid(pred.class_logits);
  const auto best = probs.max(1);
  const auto scores = std::get<0>(best);
  const auto classes = std::get<1>(best);
  const auto poly = pred.polyline.to(torch::kFloat64).contiguous();

  std::vector<ScoredElement> out;
  const auto N = poly.size(0), P = poly.size(1);
  auto poly_a = poly.accessor<double, 3>();
  for (int64_t i = 0; i < N; ++i) {
    ScoredElement se;
    se.score = scores[i].item<double>();
    se.element.class_id = static_cast<MapClass>(classes[i].item<int64_t>());
    se.element.closed = false;
    se.element.points.reserve(P);
    for (int64_t k = 0; k < P; ++k) {
      const double u = poly_a[i][k][0], v = poly_a[i][k][1];
      se.element.points.push_back({u * 2.0 * crop_half_extent - crop_half_extent,
                                   v * 2.0 * crop_half_extent - crop_half_extent});
    }
    out.push_back(std::move(se));
  }
  return out;
}

}  // namespace vecmap
