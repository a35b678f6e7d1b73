#pragma once

// Patched decoder-only forecaster: patch tokenization, input residual block,
// sinusoidal positions, a stack of causal pre-norm transformer layers, and an
// output residual block that maps every output token to the next h values.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/feature_matrix.hpp"
#include "tsdec/tensor.hpp"

namespace tsdec {

struct ModelConfig {
  std::size_t input_patch_len = 4;    // p
  std::size_t output_patch_len = 8;   // h
  std::size_t model_dim = 32;         // d
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t feature_dim = 5;        // r: 5 with date features, 0 without
  std::size_t ffn_hidden = 32;        // always equal to model_dim
  std::size_t residual_hidden = 32;
  std::size_t max_positions = 128;
  double dropout = 0.0;

  static ModelConfig desk_scale();
  // 16 heads, 20 layers, p=32, h=128, d=1280.
  static ModelConfig full_scale();

  std::size_t input_width() const { return input_patch_len * (1 + feature_dim); }
  std::size_t head_dim() const { return model_dim / num_heads; }
  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
// Rejects unknown keys; missing keys keep desk-scale defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

// One hidden layer MLP with a skip path: out = W2 relu(W1 v + b1) + b2 + skip(v).
// `skip_w` is empty when in/out widths match, in which case skip is identity.
struct ResidualBlockWeights {
  Tensor hidden_w;  // [in x hidden]
  Tensor hidden_b;  // [hidden]
  Tensor out_w;     // [hidden x out]
  Tensor out_b;     // [out]
  std::optional<Tensor> skip_w;  // [in x out]
};

struct LayerWeights {
  Tensor attn_norm_gain, attn_norm_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ffn_norm_gain, ffn_norm_bias;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct ModelWeights {
  ResidualBlockWeights input_block;
  std::vector<LayerWeights> layers;
  ResidualBlockWeights output_block;

  // Random init (normal, std 1/sqrt(fan_in); unit norm gains; zero biases).
  static ModelWeights initialize(const ModelConfig& config, std::uint64_t seed);
  static ModelWeights zeros(const ModelConfig& config);

  // Stable, deterministic order. The returned handles alias the weights.
  std::vector<NamedTensor> parameters() const;
  std::size_t parameter_count() const;
  ModelWeights clone() const;
};

// Patches cut from the most recent p*floor(L/p) points.
struct Patches {
  std::size_t count = 0;        // N
  std::size_t patch_len = 0;    // p
  std::size_t feature_dim = 0;  // r
  std::size_t dropped = 0;      // oldest points discarded
  std::vector<double> values;   // [N x p]
  std::vector<double> features; // [N x p x r]

  std::span<const double> patch_values(std::size_t j) const { return {values.data() + j * patch_len, patch_len}; }
  // [N x p(1+r)]: each row holds the patch's p values then its p feature rows.
  Tensor flattened() const;
};

// `features` may be null (r = 0) or hold exactly L rows.
Patches patchify(std::span<const double> values, const FeatureMatrix* features, std::size_t patch_len);

// Sinusoidal table, zero-based positions: PE(pos,2i)=sin(pos/10000^(2i/d)),
// PE(pos,2i+1)=cos(pos/10000^(2i/d)).
Tensor positional_encoding(std::size_t positions, std::size_t dim);

Tensor residual_block(const Tensor& v, const ResidualBlockWeights& weights);

Tensor input_tokens(const Tensor& patch_matrix, const ModelWeights& weights, const ModelConfig& config);

// Optional dropout source; null means deterministic evaluation.
struct ForwardContext {
  std::mt19937_64* dropout_rng = nullptr;
};

Tensor stacked_transformer(const Tensor& tokens, const ModelWeights& weights, const ModelConfig& config,
                           ForwardContext ctx = {});

Tensor output_forecasts(const Tensor& outputs, const ModelWeights& weights, const ModelConfig& config);

// Immutable model bundle shared by training, inference and evaluation.
class PatchedDecoder {
 public:
  PatchedDecoder(ModelConfig config, ModelWeights weights);

  const ModelConfig& config() const { return config_; }
  const ModelWeights& weights() const { return weights_; }
  ModelWeights& mutable_weights() { return weights_; }

  // [N x p(1+r)] patch matrix -> [N x h] forecasts.
  Tensor forward(const Tensor& patch_matrix, ForwardContext ctx = {}) const;
  Tensor forward(const Patches& patches, ForwardContext ctx = {}) const { return forward(patches.flattened(), ctx); }

 private:
  ModelConfig config_;
  ModelWeights weights_;
};

}  // namespace tsdec
