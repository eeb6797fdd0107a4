#include "chronosurv/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "chronosurv/errors.hpp"
#include "chronosurv/nn.hpp"

namespace chronosurv {

void validate(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.temporal_hidden < 1 || cfg.classifier_hidden < 1)
    throw InvalidConfigError("model: widths must be >= 1");
  if (cfg.kind == EncoderKind::image) {
    if (cfg.in_channels < 1 || cfg.in_rows < 1 || cfg.in_cols < 1)
      throw InvalidConfigError("model: image dims must be >= 1");
    if (cfg.stem_pool < 1) throw InvalidConfigError("model.stem_pool must be >= 1");
    if (cfg.in_rows % cfg.stem_pool != 0 || cfg.in_cols % cfg.stem_pool != 0)
      throw InvalidConfigError("model.stem_pool must divide the input dims");
    for (int w : cfg.conv_widths)
      if (w < 1) throw InvalidConfigError("model conv widths must be >= 1");
  } else {
    if (cfg.tabular_dim < 1 || cfg.tabular_hidden < 1)
      throw InvalidConfigError("model tabular dims must be >= 1");
  }
}

std::vector<LayoutEntry> param_layout(const ModelConfig& cfg) {
  validate(cfg);
  std::vector<LayoutEntry> layout;
  std::size_t offset = 0;
  const auto add = [&](const std::string& name, std::size_t count) {
    layout.push_back({name, offset, count});
    offset += count;
  };

  if (cfg.kind == EncoderKind::image) {
    int ci = cfg.in_channels;
    for (int l = 0; l < 3; ++l) {
      const int co = cfg.conv_widths[static_cast<std::size_t>(l)];
      add("conv" + std::to_string(l + 1) + ".w", static_cast<std::size_t>(co) * ci * 9);
      add("conv" + std::to_string(l + 1) + ".b", static_cast<std::size_t>(co));
      ci = co;
    }
    add("embed.w", static_cast<std::size_t>(cfg.embed_dim) * ci);
    add("embed.b", static_cast<std::size_t>(cfg.embed_dim));
  } else {
    add("enc1.w", static_cast<std::size_t>(cfg.tabular_hidden) * cfg.tabular_dim);
    add("enc1.b", static_cast<std::size_t>(cfg.tabular_hidden));
    add("embed.w", static_cast<std::size_t>(cfg.embed_dim) * cfg.tabular_hidden);
    add("embed.b", static_cast<std::size_t>(cfg.embed_dim));
  }
  if (cfg.time_conditioned) {
    add("time1.w", static_cast<std::size_t>(cfg.temporal_hidden));
    add("time1.b", static_cast<std::size_t>(cfg.temporal_hidden));
    add("time2.w", static_cast<std::size_t>(cfg.embed_dim) * cfg.temporal_hidden);
    add("time2.b", static_cast<std::size_t>(cfg.embed_dim));
  }
  add("cls1.w", static_cast<std::size_t>(cfg.classifier_hidden) * cfg.embed_dim);
  add("cls1.b", static_cast<std::size_t>(cfg.classifier_hidden));
  add("cls2.w", static_cast<std::size_t>(cfg.classifier_hidden));
  add("cls2.b", 1);
  return layout;
}

std::size_t param_count(const ModelConfig& cfg) {
  const auto layout = param_layout(cfg);
  return layout.back().offset + layout.back().count;
}

double* ModelParams::block(const std::string& name) {
  for (const auto& e : layout)
    if (e.name == name) return values.data() + e.offset;
  throw ContractViolationError("unknown parameter block: " + name);
}

const double* ModelParams::block(const std::string& name) const {
  for (const auto& e : layout)
    if (e.name == name) return values.data() + e.offset;
  throw ContractViolationError("unknown parameter block: " + name);
}

std::size_t ModelParams::block_count(const std::string& name) const {
  for (const auto& e : layout)
    if (e.name == name) return e.count;
  throw ContractViolationError("unknown parameter block: " + name);
}

ModelParams make_params(const ModelConfig& cfg) {
  ModelParams p;
  p.config = cfg;
  p.layout = param_layout(cfg);
  p.values.assign(param_count(cfg), 0.0);
  return p;
}

void init_params(ModelParams& params, Rng& rng) {
  const ModelConfig& cfg = params.config;
  const auto fill = [&](const std::string& name, int fan_in) {
    double* w = params.block(name);
    const std::size_t n = params.block_count(name);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) w[i] = rng.uniform(-bound, bound);
  };
  if (cfg.kind == EncoderKind::image) {
    int ci = cfg.in_channels;
    for (int l = 0; l < 3; ++l) {
      fill("conv" + std::to_string(l + 1) + ".w", ci * 9);
      ci = cfg.conv_widths[static_cast<std::size_t>(l)];
    }
    fill("embed.w", ci);
  } else {
    fill("enc1.w", cfg.tabular_dim);
    fill("embed.w", cfg.tabular_hidden);
  }
  if (cfg.time_conditioned) {
    fill("time1.w", 1);
    fill("time2.w", cfg.temporal_hidden);
  }
  fill("cls1.w", cfg.embed_dim);
  fill("cls2.w", cfg.classifier_hidden);
  // biases stay zero
}

GradientStore make_gradients(const ModelParams& params) {
  return GradientStore(params.values.size(), 0.0);
}

std::uint64_t layout_hash(const ModelConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(cfg.kind == EncoderKind::image ? 1u : 2u);
  mix(cfg.time_conditioned ? 1u : 0u);
  mix(static_cast<std::uint64_t>(cfg.in_channels));
  mix(static_cast<std::uint64_t>(cfg.in_rows));
  mix(static_cast<std::uint64_t>(cfg.in_cols));
  mix(static_cast<std::uint64_t>(cfg.stem_pool));
  for (int w : cfg.conv_widths) mix(static_cast<std::uint64_t>(w));
  mix(static_cast<std::uint64_t>(cfg.tabular_dim));
  mix(static_cast<std::uint64_t>(cfg.tabular_hidden));
  mix(static_cast<std::uint64_t>(cfg.embed_dim));
  mix(static_cast<std::uint64_t>(cfg.temporal_hidden));
  mix(static_cast<std::uint64_t>(cfg.classifier_hidden));
  for (const auto& e : param_layout(cfg)) {
    for (char c : e.name) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    mix(e.offset);
    mix(e.count);
  }
  return h;
}

Tensor3 normalize_collage(const ProjectionCollage& collage) {
  const Tensor3& t = collage.channels;
  Tensor3 out(t.ch, t.rows, t.cols);
  for (int c = 0; c < t.ch; ++c) {
    const double* src = t.v.data() + static_cast<std::size_t>(c) * t.plane();
    double* dst = out.v.data() + static_cast<std::size_t>(c) * t.plane();
    double lo = src[0], hi = src[0];
    for (std::size_t i = 0; i < t.plane(); ++i) {
      lo = std::min(lo, src[i]);
      hi = std::max(hi, src[i]);
    }
    const double span = hi - lo;
    if (span <= 0.0) {
      std::memset(dst, 0, t.plane() * sizeof(double));
      continue;
    }
    const double inv = 1.0 / span;
    for (std::size_t i = 0; i < t.plane(); ++i) dst[i] = (src[i] - lo) * inv;
  }
  return out;
}

namespace {

void check_finite(const double* v, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) throw NonFiniteInputError(std::string("non-finite ") + what);
}

}  // namespace

EncoderCache encode_forward(const ModelParams& params, const ModelInput& input) {
  const ModelConfig& cfg = params.config;
  EncoderCache ec;
  if (cfg.kind == EncoderKind::image) {
    if (input.image == nullptr) throw InvalidInputError("encode_forward: image input missing");
    const Tensor3& x = *input.image;
    const int want_rows = input.image_pooled ? cfg.in_rows / cfg.stem_pool : cfg.in_rows;
    const int want_cols = input.image_pooled ? cfg.in_cols / cfg.stem_pool : cfg.in_cols;
    if (x.ch != cfg.in_channels || x.rows != want_rows || x.cols != want_cols)
      throw InvalidInputError("encode_forward: input dims do not match model config");
    check_finite(x.v.data(), x.size(), "image input");

    ec.x_pooled = input.image_pooled ? x : nn::avgpool_forward(x, cfg.stem_pool);
    ec.a1 = nn::conv2d_forward(ec.x_pooled, params.block("conv1.w"), params.block("conv1.b"),
                               cfg.conv_widths[0], 2);
    nn::relu_inplace(ec.a1);
    ec.a2 = nn::conv2d_forward(ec.a1, params.block("conv2.w"), params.block("conv2.b"),
                               cfg.conv_widths[1], 2);
    nn::relu_inplace(ec.a2);
    ec.a3 = nn::conv2d_forward(ec.a2, params.block("conv3.w"), params.block("conv3.b"),
                               cfg.conv_widths[2], 2);
    nn::relu_inplace(ec.a3);
    ec.gap = nn::gap_forward(ec.a3);
    ec.emb.assign(static_cast<std::size_t>(cfg.embed_dim), 0.0);
    nn::dense_forward(ec.gap.data(), params.block("embed.w"), params.block("embed.b"),
                      cfg.embed_dim, cfg.conv_widths[2], ec.emb.data());
  } else {
    if (input.features == nullptr) throw InvalidInputError("encode_forward: feature input missing");
    if (static_cast<int>(input.features->size()) != cfg.tabular_dim)
      throw InvalidInputError("encode_forward: feature length does not match model config");
    check_finite(input.features->data(), input.features->size(), "feature input");

    ec.x_feat = *input.features;
    ec.t_hidden.assign(static_cast<std::size_t>(cfg.tabular_hidden), 0.0);
    nn::dense_forward(ec.x_feat.data(), params.block("enc1.w"), params.block("enc1.b"),
                      cfg.tabular_hidden, cfg.tabular_dim, ec.t_hidden.data());
    nn::relu_inplace(ec.t_hidden);
    ec.emb.assign(static_cast<std::size_t>(cfg.embed_dim), 0.0);
    nn::dense_forward(ec.t_hidden.data(), params.block("embed.w"), params.block("embed.b"),
                      cfg.embed_dim, cfg.tabular_hidden, ec.emb.data());
  }
  return ec;
}

HeadCache head_forward(const ModelParams& params, const std::vector<double>& emb, double t_norm) {
  const ModelConfig& cfg = params.config;
  if (!std::isfinite(t_norm)) throw NonFiniteInputError("non-finite t_norm");
  HeadCache hc;
  hc.t_norm = t_norm;

  if (cfg.time_conditioned) {
    hc.time_hidden.assign(static_cast<std::size_t>(cfg.temporal_hidden), 0.0);
    nn::dense_forward(&t_norm, params.block("time1.w"), params.block("time1.b"),
                      cfg.temporal_hidden, 1, hc.time_hidden.data());
    nn::relu_inplace(hc.time_hidden);
    hc.emb_time.assign(static_cast<std::size_t>(cfg.embed_dim), 0.0);
    nn::dense_forward(hc.time_hidden.data(), params.block("time2.w"), params.block("time2.b"),
                      cfg.embed_dim, cfg.temporal_hidden, hc.emb_time.data());
    hc.fused.resize(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) hc.fused[i] = emb[i] * hc.emb_time[i];
  } else {
    hc.fused = emb;
  }

  hc.cls_hidden.assign(static_cast<std::size_t>(cfg.classifier_hidden), 0.0);
  nn::dense_forward(hc.fused.data(), params.block("cls1.w"), params.block("cls1.b"),
                    cfg.classifier_hidden, cfg.embed_dim, hc.cls_hidden.data());
  nn::relu_inplace(hc.cls_hidden);
  nn::dense_forward(hc.cls_hidden.data(), params.block("cls2.w"), params.block("cls2.b"), 1,
                    cfg.classifier_hidden, &hc.logit);
  hc.prob = nn::sigmoid(hc.logit);
  return hc;
}

void head_backward(const ModelParams& params, const std::vector<double>& emb,
                   const HeadCache& cache, double d_prob, GradientStore& grads,
                   std::vector<double>& d_emb) {
  const ModelConfig& cfg = params.config;
  if (grads.size() != params.values.size())
    throw ContractViolationError("head_backward: gradient store does not match params");

  const auto gblock = [&](const char* name) -> double* {
    for (const auto& e : params.layout)
      if (e.name == name) return grads.data() + e.offset;
    throw ContractViolationError(std::string("head_backward: unknown block ") + name);
  };

  const double d_logit = d_prob * cache.prob * (1.0 - cache.prob);

  std::vector<double> d_cls_hidden(static_cast<std::size_t>(cfg.classifier_hidden), 0.0);
  nn::dense_backward(cache.cls_hidden.data(), params.block("cls2.w"), 1, cfg.classifier_hidden,
                     &d_logit, gblock("cls2.w"), gblock("cls2.b"), d_cls_hidden.data());
  nn::relu_backward_inplace(cache.cls_hidden, d_cls_hidden);

  std::vector<double> d_fused(static_cast<std::size_t>(cfg.embed_dim), 0.0);
  nn::dense_backward(cache.fused.data(), params.block("cls1.w"), cfg.classifier_hidden,
                     cfg.embed_dim, d_cls_hidden.data(), gblock("cls1.w"), gblock("cls1.b"),
                     d_fused.data());

  if (!cfg.time_conditioned) {
    for (std::size_t i = 0; i < d_emb.size(); ++i) d_emb[i] += d_fused[i];
    return;
  }

  std::vector<double> d_emb_time(static_cast<std::size_t>(cfg.embed_dim), 0.0);
  for (std::size_t i = 0; i < d_fused.size(); ++i) {
    d_emb[i] += d_fused[i] * cache.emb_time[i];
    d_emb_time[i] = d_fused[i] * emb[i];
  }

  std::vector<double> d_time_hidden(static_cast<std::size_t>(cfg.temporal_hidden), 0.0);
  nn::dense_backward(cache.time_hidden.data(), params.block("time2.w"), cfg.embed_dim,
                     cfg.temporal_hidden, d_emb_time.data(), gblock("time2.w"), gblock("time2.b"),
                     d_time_hidden.data());
  nn::relu_backward_inplace(cache.time_hidden, d_time_hidden);
  nn::dense_backward(&cache.t_norm, params.block("time1.w"), cfg.temporal_hidden, 1,
                     d_time_hidden.data(), gblock("time1.w"), gblock("time1.b"), nullptr);
}

void encoder_backward(const ModelParams& params, const EncoderCache& cache,
                      const std::vector<double>& d_emb, GradientStore& grads, Tensor3* d_input) {
  const ModelConfig& cfg = params.config;
  if (grads.size() != params.values.size())
    throw ContractViolationError("encoder_backward: gradient store does not match params");

  const auto gblock = [&](const char* name) -> double* {
    for (const auto& e : params.layout)
      if (e.name == name) return grads.data() + e.offset;
    throw ContractViolationError(std::string("encoder_backward: unknown block ") + name);
  };

  if (cfg.kind == EncoderKind::image) {
    std::vector<double> d_gap(static_cast<std::size_t>(cfg.conv_widths[2]), 0.0);
    nn::dense_backward(cache.gap.data(), params.block("embed.w"), cfg.embed_dim,
                       cfg.conv_widths[2], d_emb.data(), gblock("embed.w"), gblock("embed.b"),
                       d_gap.data());

    Tensor3 d_a3(cache.a3.ch, cache.a3.rows, cache.a3.cols);
    nn::gap_backward(d_gap, d_a3);
    nn::relu_backward_inplace(cache.a3, d_a3);

    Tensor3 d_a2(cache.a2.ch, cache.a2.rows, cache.a2.cols);
    nn::conv2d_backward(cache.a2, params.block("conv3.w"), cfg.conv_widths[2], 2, d_a3,
                        gblock("conv3.w"), gblock("conv3.b"), &d_a2);
    nn::relu_backward_inplace(cache.a2, d_a2);

    Tensor3 d_a1(cache.a1.ch, cache.a1.rows, cache.a1.cols);
    nn::conv2d_backward(cache.a1, params.block("conv2.w"), cfg.conv_widths[1], 2, d_a2,
                        gblock("conv2.w"), gblock("conv2.b"), &d_a1);
    nn::relu_backward_inplace(cache.a1, d_a1);

    if (d_input != nullptr) {
      Tensor3 d_pooled(cache.x_pooled.ch, cache.x_pooled.rows, cache.x_pooled.cols);
      nn::conv2d_backward(cache.x_pooled, params.block("conv1.w"), cfg.conv_widths[0], 2, d_a1,
                          gblock("conv1.w"), gblock("conv1.b"), &d_pooled);
      nn::avgpool_backward(d_pooled, cfg.stem_pool, *d_input);
    } else {
      nn::conv2d_backward(cache.x_pooled, params.block("conv1.w"), cfg.conv_widths[0], 2, d_a1,
                          gblock("conv1.w"), gblock("conv1.b"), nullptr);
    }
  } else {
    std::vector<double> d_hidden(static_cast<std::size_t>(cfg.tabular_hidden), 0.0);
    nn::dense_backward(cache.t_hidden.data(), params.block("embed.w"), cfg.embed_dim,
                       cfg.tabular_hidden, d_emb.data(), gblock("embed.w"), gblock("embed.b"),
                       d_hidden.data());
    nn::relu_backward_inplace(cache.t_hidden, d_hidden);
    nn::dense_backward(cache.x_feat.data(), params.block("enc1.w"), cfg.tabular_hidden,
                       cfg.tabular_dim, d_hidden.data(), gblock("enc1.w"), gblock("enc1.b"),
                       nullptr);
  }
}

ForwardResult forward(const ModelParams& params, const ModelInput& input, double t_norm) {
  ForwardResult out;
  out.cache.param_count = params.values.size();
  out.cache.kind = params.config.kind;
  out.cache.time_conditioned = params.config.time_conditioned;
  out.cache.enc = encode_forward(params, input);
  out.cache.head = head_forward(params, out.cache.enc.emb, t_norm);
  out.prob = out.cache.head.prob;
  return out;
}

GradientStore backward(const ModelParams& params, const ActivationCache& cache, double d_prob) {
  if (cache.param_count != params.values.size() || cache.kind != params.config.kind ||
      cache.time_conditioned != params.config.time_conditioned)
    throw ContractViolationError("backward: cache does not match params");
  GradientStore grads = make_gradients(params);
  std::vector<double> d_emb(cache.enc.emb.size(), 0.0);
  head_backward(params, cache.enc.emb, cache.head, d_prob, grads, d_emb);
  encoder_backward(params, cache.enc, d_emb, grads, nullptr);
  return grads;
}

SurvivalCurve predict_curve(const ModelParams& params, const ModelInput& input,
                            const std::vector<int>& grid_days, bool monotonize,
                            int horizon_days) {
  if (grid_days.empty()) throw InvalidInputError("predict_curve: empty grid");
  for (std::size_t k = 1; k < grid_days.size(); ++k)
    if (grid_days[k] <= grid_days[k - 1])
      throw InvalidInputError("predict_curve: grid must be strictly increasing");

  SurvivalCurve curve;
  curve.grid_days = grid_days;
  curve.probs.reserve(grid_days.size());
  const EncoderCache ec = encode_forward(params, input);
  for (const int t : grid_days) {
    const double t_norm = static_cast<double>(std::min(t, horizon_days)) / horizon_days;
    curve.probs.push_back(head_forward(params, ec.emb, t_norm).prob);
  }
  if (monotonize) {
    double running = curve.probs.front();
    for (double& p : curve.probs) {
      running = std::min(running, p);
      p = running;
    }
    curve.monotonized = true;
  }
  return curve;
}

Image2D saliency(const ModelParams& params, const Tensor3& normalized_collage, double t_norm) {
  ModelInput input;
  input.image = &normalized_collage;
  const ForwardResult fr = forward(params, input, t_norm);

  GradientStore grads = make_gradients(params);
  std::vector<double> d_emb(fr.cache.enc.emb.size(), 0.0);
  head_backward(params, fr.cache.enc.emb, fr.cache.head, 1.0, grads, d_emb);
  Tensor3 d_input(normalized_collage.ch, normalized_collage.rows, normalized_collage.cols);
  encoder_backward(params, fr.cache.enc, d_emb, grads, &d_input);

  Image2D heat(normalized_collage.rows, normalized_collage.cols);
  double peak = 0.0;
  for (int r = 0; r < heat.rows; ++r) {
    for (int c = 0; c < heat.cols; ++c) {
      double m = 0.0;
      for (int ch = 0; ch < d_input.ch; ++ch) m = std::max(m, std::abs(d_input.at(ch, r, c)));
      heat.at(r, c) = m;
      peak = std::max(peak, m);
    }
  }
  if (peak > 0.0) {
    const double inv = 1.0 / peak;
    for (double& v : heat.v) v *= inv;
  }
  return heat;
}

namespace {

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["kind"] = cfg.kind == EncoderKind::image ? "image" : "tabular";
  j["time_conditioned"] = cfg.time_conditioned;
  j["in_channels"] = cfg.in_channels;
  j["in_rows"] = cfg.in_rows;
  j["in_cols"] = cfg.in_cols;
  j["stem_pool"] = cfg.stem_pool;
  j["conv_widths"] = {cfg.conv_widths[0], cfg.conv_widths[1], cfg.conv_widths[2]};
  j["tabular_dim"] = cfg.tabular_dim;
  j["tabular_hidden"] = cfg.tabular_hidden;
  j["embed_dim"] = cfg.embed_dim;
  j["temporal_hidden"] = cfg.temporal_hidden;
  j["classifier_hidden"] = cfg.classifier_hidden;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.kind = j.at("kind").get<std::string>() == "image" ? EncoderKind::image : EncoderKind::tabular;
  cfg.time_conditioned = j.at("time_conditioned").get<bool>();
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.in_rows = j.at("in_rows").get<int>();
  cfg.in_cols = j.at("in_cols").get<int>();
  cfg.stem_pool = j.at("stem_pool").get<int>();
  for (int i = 0; i < 3; ++i)
    cfg.conv_widths[static_cast<std::size_t>(i)] = j.at("conv_widths").at(static_cast<std::size_t>(i)).get<int>();
  cfg.tabular_dim = j.at("tabular_dim").get<int>();
  cfg.tabular_hidden = j.at("tabular_hidden").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.temporal_hidden = j.at("temporal_hidden").get<int>();
  cfg.classifier_hidden = j.at("classifier_hidden").get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::string& path) {
  nlohmann::ordered_json j;
  j["config"] = config_to_json(params.config);
  nlohmann::ordered_json layout = nlohmann::ordered_json::array();
  for (const auto& e : params.layout) {
    nlohmann::ordered_json entry;
    entry["name"] = e.name;
    entry["offset"] = e.offset;
    entry["count"] = e.count;
    layout.push_back(entry);
  }
  j["layout"] = layout;
  j["layout_hash"] = layout_hash(params.config);
  j["seed"] = meta.seed;
  j["epoch"] = meta.epoch;
  j["fold"] = meta.fold;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string header = j.dump();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("missing checkpoint header: " + path);
  nlohmann::json j = nlohmann::json::parse(header, nullptr, false);
  if (j.is_discarded()) throw IoError("bad checkpoint header JSON: " + path);

  ModelParams params = make_params(config_from_json(j.at("config")));
  if (j.at("layout_hash").get<std::uint64_t>() != layout_hash(params.config))
    throw ContractViolationError("checkpoint layout hash mismatch: " + path);
  in.read(reinterpret_cast<char*>(params.values.data()),
          static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != params.values.size() * sizeof(double))
    throw IoError("checkpoint parameter block short read: " + path);
  if (meta != nullptr) {
    meta->seed = j.at("seed").get<std::uint64_t>();
    meta->epoch = j.at("epoch").get<int>();
    meta->fold = j.at("fold").get<int>();
  }
  return params;
}

}  // namespace chronosurv
