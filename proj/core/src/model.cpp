#include "tsdec/model.hpp"

#include <cmath>
#include <set>

#include "tsdec/error.hpp"

namespace tsdec {

ModelConfig ModelConfig::desk_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.input_patch_len = 32;
  c.output_patch_len = 128;
  c.model_dim = 1280;
  c.num_layers = 20;
  c.num_heads = 16;
  c.feature_dim = 5;
  c.ffn_hidden = 1280;
  c.residual_hidden = 1280;
  c.max_positions = 16;
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (input_patch_len == 0) fail("input_patch_len must be positive");
  if (output_patch_len == 0) fail("output_patch_len must be positive");
  if (model_dim == 0) fail("model_dim must be positive");
  if (num_layers == 0) fail("num_layers must be positive");
  if (num_heads == 0 || model_dim % num_heads != 0) fail("num_heads must divide model_dim");
  if (ffn_hidden != model_dim) fail("ffn_hidden must equal model_dim");
  if (residual_hidden == 0) fail("residual_hidden must be positive");
  if (max_positions == 0) fail("max_positions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"input_patch_len", c.input_patch_len}, {"output_patch_len", c.output_patch_len},
                     {"model_dim", c.model_dim},             {"num_layers", c.num_layers},
                     {"num_heads", c.num_heads},             {"feature_dim", c.feature_dim},
                     {"ffn_hidden", c.ffn_hidden},           {"residual_hidden", c.residual_hidden},
                     {"max_positions", c.max_positions},     {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  static const std::set<std::string> known = {"input_patch_len", "output_patch_len", "model_dim",
                                              "num_layers",      "num_heads",        "feature_dim",
                                              "ffn_hidden",      "residual_hidden",  "max_positions",
                                              "dropout"};
  if (!j.is_object()) throw ConfigError("model config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("model config: unknown key '" + key + "'");
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("input_patch_len", c.input_patch_len);
  read("output_patch_len", c.output_patch_len);
  read("model_dim", c.model_dim);
  read("num_layers", c.num_layers);
  read("num_heads", c.num_heads);
  read("feature_dim", c.feature_dim);
  // Tracks model_dim unless set explicitly; validate() enforces equality.
  c.ffn_hidden = c.model_dim;
  read("ffn_hidden", c.ffn_hidden);
  read("residual_hidden", c.residual_hidden);
  read("max_positions", c.max_positions);
  read("dropout", c.dropout);
}

// ---------------------------------------------------------------------------

namespace {

Tensor normal_matrix(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  std::vector<double> data(in * out);
  for (double& v : data) v = dist(rng);
  return Tensor::from({in, out}, std::move(data), true);
}

ResidualBlockWeights make_block(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64* rng) {
  auto matrix = [&](std::size_t r, std::size_t c) {
    return rng ? normal_matrix(r, c, *rng) : Tensor::zeros({r, c}, true);
  };
  ResidualBlockWeights b;
  b.hidden_w = matrix(in, hidden);
  b.hidden_b = Tensor::zeros({hidden}, true);
  b.out_w = matrix(hidden, out);
  b.out_b = Tensor::zeros({out}, true);
  if (in != out) b.skip_w = matrix(in, out);
  return b;
}

ModelWeights make_weights(const ModelConfig& config, std::mt19937_64* rng) {
  config.validate();
  const std::size_t d = config.model_dim;
  auto matrix = [&](std::size_t r, std::size_t c) {
    return rng ? normal_matrix(r, c, *rng) : Tensor::zeros({r, c}, true);
  };
  const double gain = rng ? 1.0 : 0.0;
  ModelWeights w;
  w.input_block = make_block(config.input_width(), config.residual_hidden, d, rng);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerWeights layer;
    layer.attn_norm_gain = Tensor::full({d}, gain, true);
    layer.attn_norm_bias = Tensor::zeros({d}, true);
    layer.wq = matrix(d, d);
    layer.bq = Tensor::zeros({d}, true);
    layer.wk = matrix(d, d);
    layer.bk = Tensor::zeros({d}, true);
    layer.wv = matrix(d, d);
    layer.bv = Tensor::zeros({d}, true);
    layer.wo = matrix(d, d);
    layer.bo = Tensor::zeros({d}, true);
    layer.ffn_norm_gain = Tensor::full({d}, gain, true);
    layer.ffn_norm_bias = Tensor::zeros({d}, true);
    layer.ffn_w1 = matrix(d, config.ffn_hidden);
    layer.ffn_b1 = Tensor::zeros({config.ffn_hidden}, true);
    layer.ffn_w2 = matrix(config.ffn_hidden, d);
    layer.ffn_b2 = Tensor::zeros({d}, true);
    w.layers.push_back(std::move(layer));
  }
  w.output_block = make_block(d, config.residual_hidden, config.output_patch_len, rng);
  return w;
}

void append_block(std::vector<NamedTensor>& out, const std::string& prefix, const ResidualBlockWeights& b) {
  out.push_back({prefix + ".hidden_w", b.hidden_w});
  out.push_back({prefix + ".hidden_b", b.hidden_b});
  out.push_back({prefix + ".out_w", b.out_w});
  out.push_back({prefix + ".out_b", b.out_b});
  if (b.skip_w) out.push_back({prefix + ".skip_w", *b.skip_w});
}

ResidualBlockWeights clone_block(const ResidualBlockWeights& b) {
  auto copy = [](const Tensor& t) {
    Tensor c = t.detach();
    c.set_requires_grad(t.requires_grad());
    return c;
  };
  ResidualBlockWeights out{copy(b.hidden_w), copy(b.hidden_b), copy(b.out_w), copy(b.out_b), std::nullopt};
  if (b.skip_w) out.skip_w = copy(*b.skip_w);
  return out;
}

}  // namespace

ModelWeights ModelWeights::initialize(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_weights(config, &rng);
}

ModelWeights ModelWeights::zeros(const ModelConfig& config) { return make_weights(config, nullptr); }

std::vector<NamedTensor> ModelWeights::parameters() const {
  std::vector<NamedTensor> out;
  append_block(out, "input_block", input_block);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerWeights& w = layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "attn_norm_gain", w.attn_norm_gain});
    out.push_back({p + "attn_norm_bias", w.attn_norm_bias});
    out.push_back({p + "wq", w.wq});
    out.push_back({p + "bq", w.bq});
    out.push_back({p + "wk", w.wk});
    out.push_back({p + "bk", w.bk});
    out.push_back({p + "wv", w.wv});
    out.push_back({p + "bv", w.bv});
    out.push_back({p + "wo", w.wo});
    out.push_back({p + "bo", w.bo});
    out.push_back({p + "ffn_norm_gain", w.ffn_norm_gain});
    out.push_back({p + "ffn_norm_bias", w.ffn_norm_bias});
    out.push_back({p + "ffn_w1", w.ffn_w1});
    out.push_back({p + "ffn_b1", w.ffn_b1});
    out.push_back({p + "ffn_w2", w.ffn_w2});
    out.push_back({p + "ffn_b2", w.ffn_b2});
  }
  append_block(out, "output_block", output_block);
  return out;
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : parameters()) total += p.tensor.numel();
  return total;
}

ModelWeights ModelWeights::clone() const {
  ModelWeights out;
  out.input_block = clone_block(input_block);
  out.output_block = clone_block(output_block);
  for (const LayerWeights& l : layers) {
    auto copy = [](const Tensor& t) {
      Tensor c = t.detach();
      c.set_requires_grad(t.requires_grad());
      return c;
    };
    out.layers.push_back(LayerWeights{copy(l.attn_norm_gain), copy(l.attn_norm_bias), copy(l.wq), copy(l.bq),
                                      copy(l.wk), copy(l.bk), copy(l.wv), copy(l.bv), copy(l.wo), copy(l.bo),
                                      copy(l.ffn_norm_gain), copy(l.ffn_norm_bias), copy(l.ffn_w1),
                                      copy(l.ffn_b1), copy(l.ffn_w2), copy(l.ffn_b2)});
  }
  return out;
}

// ---------------------------------------------------------------------------

Tensor Patches::flattened() const {
  const std::size_t width = patch_len * (1 + feature_dim);
  std::vector<double> data;
  data.reserve(count * width);
  for (std::size_t j = 0; j < count; ++j) {
    auto v = patch_values(j);
    data.insert(data.end(), v.begin(), v.end());
    const std::size_t fw = patch_len * feature_dim;
    data.insert(data.end(), features.begin() + static_cast<std::ptrdiff_t>(j * fw),
                features.begin() + static_cast<std::ptrdiff_t>((j + 1) * fw));
  }
  return Tensor::from({count, width}, std::move(data));
}

Patches patchify(std::span<const double> values, const FeatureMatrix* features, std::size_t patch_len) {
  if (patch_len == 0) throw ContractError("patchify: patch length must be positive");
  const std::size_t length = values.size();
  if (length < patch_len) {
    throw ContextTooShortError("patchify: context of length " + std::to_string(length) +
                               " is shorter than the patch length " + std::to_string(patch_len));
  }
  if (features != nullptr && features->rows != length) {
    throw FeatureError("patchify: " + std::to_string(features->rows) + " feature rows for " +
                       std::to_string(length) + " values");
  }
  Patches out;
  out.patch_len = patch_len;
  out.count = length / patch_len;
  out.dropped = length - out.count * patch_len;
  out.feature_dim = features ? features->cols : 0;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(out.dropped), values.end());
  if (features != nullptr) {
    out.features.assign(features->data.begin() + static_cast<std::ptrdiff_t>(out.dropped * features->cols),
                        features->data.end());
  }
  return out;
}

Tensor positional_encoding(std::size_t positions, std::size_t dim) {
  std::vector<double> table(positions * dim);
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double exponent = static_cast<double>(i - i % 2) / static_cast<double>(dim);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table[pos * dim + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from({positions, dim}, std::move(table));
}

Tensor residual_block(const Tensor& v, const ResidualBlockWeights& w) {
  Tensor hidden = relu(add_row(matmul(v, w.hidden_w), w.hidden_b));
  Tensor out = add_row(matmul(hidden, w.out_w), w.out_b);
  if (w.skip_w) return add(out, matmul(v, *w.skip_w));
  if (v.cols() != out.cols()) {
    throw DimensionError("residual_block: identity skip needs equal widths, got " + shape_to_string(v.shape()) +
                         " -> " + shape_to_string(out.shape()));
  }
  return add(out, v);
}

Tensor input_tokens(const Tensor& patch_matrix, const ModelWeights& weights, const ModelConfig& config) {
  if (patch_matrix.rank() != 2 || patch_matrix.dim(1) != config.input_width()) {
    throw DimensionError("input_tokens: expected patch rows of width " + std::to_string(config.input_width()) +
                         " (p*(1+r)), got " + shape_to_string(patch_matrix.shape()));
  }
  if (patch_matrix.dim(0) == 0) throw ContextTooShortError("input_tokens: no patches");
  Tensor embedded = residual_block(patch_matrix, weights.input_block);
  return add(embedded, positional_encoding(patch_matrix.dim(0), config.model_dim));
}

namespace {

Tensor causal_attention(const Tensor& x, const LayerWeights& w, const ModelConfig& config) {
  Tensor q = add_row(matmul(x, w.wq), w.bq);
  Tensor k = add_row(matmul(x, w.wk), w.bk);
  Tensor v = add_row(matmul(x, w.wv), w.bv);
  const std::size_t dh = config.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> heads;
  heads.reserve(config.num_heads);
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    const std::size_t b = h * dh;
    Tensor qh = slice_cols(q, b, b + dh);
    Tensor kh = slice_cols(k, b, b + dh);
    Tensor vh = slice_cols(v, b, b + dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    heads.push_back(matmul(causal_softmax(scores), vh));
  }
  return add_row(matmul(concat_cols(heads), w.wo), w.bo);
}

Tensor feed_forward(const Tensor& x, const LayerWeights& w) {
  return add_row(matmul(relu(add_row(matmul(x, w.ffn_w1), w.ffn_b1)), w.ffn_w2), w.ffn_b2);
}

}  // namespace

Tensor stacked_transformer(const Tensor& tokens, const ModelWeights& weights, const ModelConfig& config,
                           ForwardContext ctx) {
  if (tokens.rank() != 2 || tokens.dim(1) != config.model_dim) {
    throw DimensionError("stacked_transformer: tokens must be [N x " + std::to_string(config.model_dim) + "], got " +
                         shape_to_string(tokens.shape()));
  }
  if (tokens.dim(0) > config.max_positions) {
    throw CapacityError("stacked_transformer: " + std::to_string(tokens.dim(0)) + " tokens exceed max_positions " +
                        std::to_string(config.max_positions));
  }
  auto maybe_dropout = [&](const Tensor& t) {
    return ctx.dropout_rng && config.dropout > 0.0 ? dropout(t, config.dropout, *ctx.dropout_rng) : t;
  };
  Tensor x = tokens;
  for (const LayerWeights& layer : weights.layers) {
    x = add(x, maybe_dropout(causal_attention(layer_norm(x, layer.attn_norm_gain, layer.attn_norm_bias), layer, config)));
    x = add(x, maybe_dropout(feed_forward(layer_norm(x, layer.ffn_norm_gain, layer.ffn_norm_bias), layer)));
  }
  return x;
}

Tensor output_forecasts(const Tensor& outputs, const ModelWeights& weights, const ModelConfig& config) {
  Tensor forecasts = residual_block(outputs, weights.output_block);
  if (forecasts.cols() != config.output_patch_len) {
    throw DimensionError("output_forecasts: output block produced " + shape_to_string(forecasts.shape()));
  }
  return forecasts;
}

PatchedDecoder::PatchedDecoder(ModelConfig config, ModelWeights weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  config_.validate();
  if (weights_.layers.size() != config_.num_layers) {
    throw ConfigError("model: weights hold " + std::to_string(weights_.layers.size()) + " layers, config expects " +
                      std::to_string(config_.num_layers));
  }
}

Tensor PatchedDecoder::forward(const Tensor& patch_matrix, ForwardContext ctx) const {
  Tensor tokens = input_tokens(patch_matrix, weights_, config_);
  return output_forecasts(stacked_transformer(tokens, weights_, config_, ctx), weights_, config_);
}

}  // namespace tsdec
