#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chronosurv/curve.hpp"
#include "chronosurv/grid.hpp"
#include "chronosurv/projection.hpp"
#include "chronosurv/rng.hpp"

namespace chronosurv {

enum class EncoderKind { image, tabular };

// Architecture description. The parameter layout is a pure function of this
// struct, so two models agree on checkpoints iff their configs agree.
struct ModelConfig {
  EncoderKind kind = EncoderKind::image;
  bool time_conditioned = true;  // false: fixed-horizon variant, classifier on the raw embedding

  // image encoder: optional average-pool stem, then 3 stride-2 3x3 convs,
  // ReLU, global average pool, dense to embed_dim
  int in_channels = kCollageChannels;
  int in_rows = kCollageRows;
  int in_cols = kCollageCols;
  int stem_pool = 1;
  std::array<int, 3> conv_widths{16, 32, 64};

  // tabular encoder: dense -> ReLU -> dense to embed_dim
  int tabular_dim = 15;
  int tabular_hidden = 64;

  int embed_dim = 64;
  int temporal_hidden = 32;
  int classifier_hidden = 32;
};

void validate(const ModelConfig& cfg);
std::size_t param_count(const ModelConfig& cfg);

struct LayoutEntry {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
};

std::vector<LayoutEntry> param_layout(const ModelConfig& cfg);

// Flat parameter store with a named layout table. Gradients use the same
// layout (GradientStore below).
struct ModelParams {
  ModelConfig config;
  std::vector<LayoutEntry> layout;
  std::vector<double> values;

  double* block(const std::string& name);
  const double* block(const std::string& name) const;
  std::size_t block_count(const std::string& name) const;
};

ModelParams make_params(const ModelConfig& cfg);

// He-style uniform init, bound sqrt(6/fan_in), biases zero.
void init_params(ModelParams& params, Rng& rng);

using GradientStore = std::vector<double>;
GradientStore make_gradients(const ModelParams& params);

// Stable hash over (config, layout table); checkpoints store it and loading
// revalidates.
std::uint64_t layout_hash(const ModelConfig& cfg);

// Either a normalized image tensor or a tabular feature vector, depending on
// the encoder kind. image_pooled marks a tensor that already went through
// the average-pool stem (the training loop caches inputs in that form; the
// math is identical because the stem is the first encoder stage).
struct ModelInput {
  const Tensor3* image = nullptr;
  bool image_pooled = false;
  const std::vector<double>* features = nullptr;
};

// Per-channel min-max normalization to [0,1]; constant channels map to 0.
Tensor3 normalize_collage(const ProjectionCollage& collage);

struct EncoderCache {
  // image path (post-activation tensors; ReLU gates use them in backward)
  Tensor3 x_pooled;
  Tensor3 a1, a2, a3;
  std::vector<double> gap;
  // tabular path
  std::vector<double> x_feat;
  std::vector<double> t_hidden;

  std::vector<double> emb;
};

struct HeadCache {
  double t_norm = 0.0;
  std::vector<double> time_hidden;
  std::vector<double> emb_time;
  std::vector<double> fused;
  std::vector<double> cls_hidden;
  double logit = 0.0;
  double prob = 0.0;
};

// Cache of one forward() call; backward() verifies it matches the params it
// is paired with.
struct ActivationCache {
  std::size_t param_count = 0;
  EncoderKind kind = EncoderKind::image;
  bool time_conditioned = true;
  EncoderCache enc;
  HeadCache head;
};

// --- split API used by the training loop (encoder once per patient, head
// --- once per time sample) ---
EncoderCache encode_forward(const ModelParams& params, const ModelInput& input);
HeadCache head_forward(const ModelParams& params, const std::vector<double>& emb, double t_norm);
// Accumulates parameter gradients and the embedding gradient for this sample.
void head_backward(const ModelParams& params, const std::vector<double>& emb,
                   const HeadCache& cache, double d_prob, GradientStore& grads,
                   std::vector<double>& d_emb);
// d_input, when non-null, receives the input-pixel gradient (image kind only).
void encoder_backward(const ModelParams& params, const EncoderCache& cache,
                      const std::vector<double>& d_emb, GradientStore& grads,
                      Tensor3* d_input = nullptr);

// --- spec-level operations ---
struct ForwardResult {
  double prob = 0.0;
  ActivationCache cache;
};

ForwardResult forward(const ModelParams& params, const ModelInput& input, double t_norm);
GradientStore backward(const ModelParams& params, const ActivationCache& cache, double d_prob);

SurvivalCurve predict_curve(const ModelParams& params, const ModelInput& input,
                            const std::vector<int>& grid_days, bool monotonize = false,
                            int horizon_days = 1825);

// Input-gradient saliency: per-pixel max over channels of |d prob / d pixel|,
// min-max normalized to [0,1]; identically zero gradient stays a zero map.
Image2D saliency(const ModelParams& params, const Tensor3& normalized_collage, double t_norm);

// Checkpoint: one JSON header line (config, layout table, layout hash, seed,
// epoch, fold) followed by the raw little-endian float64 parameter block.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epoch = 0;
  int fold = 0;
};

void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::string& path);
ModelParams load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace chronosurv
