#pragma once

#include <torch/torch.h>

#include <memory>
#include <utility>
#include <vector>

#include "vecmap/config.hpp"
#include "vecmap/model/backbone.hpp"
#include "vecmap/model/decoder.hpp"
#include "vecmap/model/enhancer.hpp"
#include "vecmap/serial.hpp"

namespace vecmap {

/// Contract any feature extractor must satisfy so a pretrained backbone can
/// be swapped in behind the rest of the pipeline.
class BackboneAdapter {
 public:
  virtual ~BackboneAdapter() = default;
  virtual BackboneOutput extract(const torch::Tensor& frames,
                                 const torch::Tensor& view_ids,
                                 const torch::Tensor& time_ids) = 0;
};

class GeometryBackboneAdapter final : public BackboneAdapter {
 public:
  explicit GeometryBackboneAdapter(GeometryBackbone backbone)
      : backbone_(std::move(backbone)) {}
  BackboneOutput extract(const torch::Tensor& frames,
                         const torch::Tensor& view_ids,
                         const torch::Tensor& time_ids) override {
    return backbone_->forward(frames, view_ids, time_ids);
  }

 private:
  GeometryBackbone backbone_;
};

/// End-to-end network: backbone -> spatial-temporal enhancement -> per-view
/// camera-aware decoding.
struct MapNetImpl : torch::nn::Module {
  explicit MapNetImpl(const ModelConfig& cfg);

  struct Encoded {
    torch::Tensor features;    // S x C x H' x W', enhanced
    torch::Tensor cam_tokens;  // S x C
  };
  Encoded encode(const torch::Tensor& frames, const torch::Tensor& view_ids,
                 const torch::Tensor& time_ids);

  /// Decodes one frame's view from the encoded batch.
  std::vector<Prediction> decode_frame(const Encoded& enc, int64_t frame,
                                       DecodeTrace* trace = nullptr);

  /// Decodes every frame whose time id equals the window maximum (the
  /// "current" frames). Returns (frame index, per-layer predictions).
  std::vector<std::pair<int64_t, std::vector<Prediction>>> decode_current(
      const Encoded& enc, const torch::Tensor& time_ids);

  ModelConfig cfg;
  GeometryBackbone backbone{nullptr};
  STEnhancer enhancer{nullptr};
  MapDecoder decoder{nullptr};
};
TORCH_MODULE(MapNet);

/// Converts a final-layer prediction into scored camera-centric elements in
/// metres. Every instance is emitted with its argmax class and that class's
/// probability as the score.
std::vector<ScoredElement> prediction_to_elements(const Prediction& pred,
                                                  double crop_half_extent);

}  // namespace vecmap
