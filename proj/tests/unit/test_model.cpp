#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsdec/error.hpp"
#include "tsdec/model.hpp"

namespace tsdec {
namespace {

using testing::random_tensor;
using testing::tiny_config;

// ---- straight-line reference forward -------------------------------------
// Row-major scalar loops over plain vectors, no tape and no batched kernels.

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.data()[i * t.cols() + j];
  return m;
}

std::vector<double> to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<double> affine(const std::vector<double>& v, const Tensor& w, const Tensor& b) {
  const Mat W = to_mat(w);
  std::vector<double> out = to_vec(b);
  for (std::size_t o = 0; o < out.size(); ++o)
    for (std::size_t i = 0; i < v.size(); ++i) out[o] += v[i] * W[i][o];
  return out;
}

std::vector<double> relu_v(std::vector<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

std::vector<double> ref_block(const std::vector<double>& v, const ResidualBlockWeights& w) {
  std::vector<double> out = affine(relu_v(affine(v, w.hidden_w, w.hidden_b)), w.out_w, w.out_b);
  if (w.skip_w) {
    const Mat S = to_mat(*w.skip_w);
    for (std::size_t o = 0; o < out.size(); ++o)
      for (std::size_t i = 0; i < v.size(); ++i) out[o] += v[i] * S[i][o];
  } else {
    for (std::size_t o = 0; o < out.size(); ++o) out[o] += v[o];
  }
  return out;
}

std::vector<double> ref_norm(const std::vector<double>& v, const Tensor& gain, const Tensor& bias) {
  double mu = 0.0, var = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  for (double x : v) var += (x - mu) * (x - mu);
  var /= static_cast<double>(v.size());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = (v[i] - mu) / std::sqrt(var + kLayerNormEpsilon) * gain.data()[i] + bias.data()[i];
  }
  return out;
}

Mat reference_forward(const Tensor& patch_matrix, const ModelWeights& w, const ModelConfig& c) {
  const std::size_t n = patch_matrix.rows(), d = c.model_dim, dh = d / c.num_heads;
  Mat x(n);
  const Mat rows = to_mat(patch_matrix);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = ref_block(rows[j], w.input_block);
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      x[j][i] += i % 2 == 0 ? std::sin(static_cast<double>(j) / freq) : std::cos(static_cast<double>(j) / freq);
    }
  }
  for (const LayerWeights& l : w.layers) {
    Mat q(n), k(n), v(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto z = ref_norm(x[j], l.attn_norm_gain, l.attn_norm_bias);
      q[j] = affine(z, l.wq, l.bq);
      k[j] = affine(z, l.wk, l.bk);
      v[j] = affine(z, l.wv, l.bv);
    }
    Mat attended(n, std::vector<double>(d, 0.0));
    for (std::size_t head = 0; head < c.num_heads; ++head) {
      const std::size_t b = head * dh;
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> s(j + 1);
        double mx = -1e300;
        for (std::size_t t = 0; t <= j; ++t) {
          double dot = 0.0;
          for (std::size_t i = 0; i < dh; ++i) dot += q[j][b + i] * k[t][b + i];
          s[t] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[t]);
        }
        double total = 0.0;
        for (double& e : s) total += (e = std::exp(e - mx));
        for (std::size_t t = 0; t <= j; ++t)
          for (std::size_t i = 0; i < dh; ++i) attended[j][b + i] += s[t] / total * v[t][b + i];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto o = affine(attended[j], l.wo, l.bo);
      for (std::size_t i = 0; i < d; ++i) x[j][i] += o[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto z = ref_norm(x[j], l.ffn_norm_gain, l.ffn_norm_bias);
      const auto f = affine(relu_v(affine(z, l.ffn_w1, l.ffn_b1)), l.ffn_w2, l.ffn_b2);
      for (std::size_t i = 0; i < d; ++i) x[j][i] += f[i];
    }
  }
  Mat out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = ref_block(x[j], w.output_block);
  return out;
}

// Non-zero biases and gains so the reference exercises every parameter.
ModelWeights perturbed_weights(const ModelConfig& c, std::uint64_t seed) {
  ModelWeights w = ModelWeights::initialize(c, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> dist(0.0, 0.3);
  for (NamedTensor& p : w.parameters()) {
    if (p.tensor.rank() == 1) {
      for (double& v : p.tensor.mutable_data()) v += dist(rng);
    }
  }
  return w;
}

// ---- config --------------------------------------------------------------

TEST(ModelConfig, PresetShapes) {
  const ModelConfig full = ModelConfig::full_scale();
  EXPECT_EQ(full.input_patch_len, 32u);
  EXPECT_EQ(full.output_patch_len, 128u);
  EXPECT_EQ(full.num_heads, 16u);
  EXPECT_EQ(full.num_layers, 20u);
  EXPECT_EQ(full.model_dim, 1280u);
  EXPECT_NO_THROW(full.validate());
  const ModelConfig desk = ModelConfig::desk_scale();
  EXPECT_EQ(desk.input_patch_len, 4u);
  EXPECT_EQ(desk.output_patch_len, 8u);
  EXPECT_EQ(desk.num_heads, 2u);
  EXPECT_EQ(desk.num_layers, 2u);
  EXPECT_EQ(desk.model_dim, 32u);
}

TEST(ModelConfig, ValidateRejectsBrokenInvariants) {
  ModelConfig c = tiny_config();
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.ffn_hidden = 16;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.input_patch_len = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTripAndUnknownKey) {
  ModelConfig c = tiny_config(5);
  nlohmann::json j = c;
  EXPECT_EQ(j.get<ModelConfig>(), c);
  j["bogus"] = 1;
  try {
    (void)j.get<ModelConfig>();
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(ModelConfig, FfnHiddenFollowsModelDim) {
  const auto c = nlohmann::json{{"model_dim", 64}}.get<ModelConfig>();
  EXPECT_EQ(c.ffn_hidden, 64u);
}

// ---- patchify ------------------------------------------------------------

TEST(Patchify, ExactMultiple) {
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
  Patches p = patchify(y, nullptr, 4);
  ASSERT_EQ(p.count, 2u);
  EXPECT_EQ(p.dropped, 0u);
  EXPECT_EQ(std::vector<double>(p.patch_values(0).begin(), p.patch_values(0).end()), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(std::vector<double>(p.patch_values(1).begin(), p.patch_values(1).end()), (std::vector<double>{5, 6, 7, 8}));
}

TEST(Patchify, DropsOldestRemainder) {
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9};
  Patches p = patchify(y, nullptr, 4);
  ASSERT_EQ(p.count, 2u);
  EXPECT_EQ(p.dropped, 1u);
  EXPECT_EQ(std::vector<double>(p.patch_values(0).begin(), p.patch_values(0).end()), (std::vector<double>{2, 3, 4, 5}));
  EXPECT_EQ(std::vector<double>(p.patch_values(1).begin(), p.patch_values(1).end()), (std::vector<double>{6, 7, 8, 9}));
}

TEST(Patchify, CountFollowsFloor) {
  std::vector<double> y(512, 0.0);
  EXPECT_EQ(patchify(y, nullptr, 32).count, 16u);
  std::vector<double> z(543, 0.0);
  EXPECT_EQ(patchify(z, nullptr, 32).count, 16u);
}

TEST(Patchify, ShortContextAndFeatureMismatch) {
  std::vector<double> y{1, 2, 3};
  EXPECT_THROW(patchify(y, nullptr, 4), ContextTooShortError);
  EXPECT_THROW(patchify(y, nullptr, 0), ContractError);
  FeatureMatrix f;
  f.rows = 2;
  f.cols = 5;
  f.data.assign(10, 0.0);
  EXPECT_THROW(patchify(y, &f, 1), FeatureError);
}

TEST(Patchify, FlattenedRowsHoldValuesThenFeatures) {
  std::vector<double> y{1, 2, 3, 4, 5};
  FeatureMatrix f;
  f.rows = 5;
  f.cols = 1;
  f.data = {10, 20, 30, 40, 50};
  Tensor m = patchify(y, &f, 2).flattened();
  ASSERT_EQ(m.shape(), (Shape{2, 4}));
  EXPECT_EQ(std::vector<double>(m.data().begin(), m.data().end()),
            (std::vector<double>{2, 3, 20, 30, 4, 5, 40, 50}));
}

// ---- positional encoding and residual block ------------------------------

TEST(PositionalEncoding, ZeroPosition) {
  Tensor pe = positional_encoding(3, 6);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(pe.data()[i], i % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEncoding, KnownEntry) {
  Tensor pe = positional_encoding(4, 4);
  // pos 3, i = 2 (pair index 1): sin(3 / 10000^(2/4)) = sin(0.03)
  EXPECT_DOUBLE_EQ(pe.data()[3 * 4 + 2], std::sin(0.03));
  EXPECT_DOUBLE_EQ(pe.data()[3 * 4 + 3], std::cos(0.03));
}

TEST(ResidualBlock, ZeroWeightsGiveZero) {
  ResidualBlockWeights w{Tensor::zeros({2, 3}), Tensor::zeros({3}), Tensor::zeros({3, 4}), Tensor::zeros({4}),
                         Tensor::zeros({2, 4})};
  Tensor out = residual_block(Tensor::from({1, 2}, {1.5, -2.0}), w);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(ResidualBlock, PureSkip) {
  ResidualBlockWeights w{Tensor::zeros({2, 3}), Tensor::zeros({3}), Tensor::zeros({3, 2}), Tensor::zeros({2}),
                         std::nullopt};
  Tensor out = residual_block(Tensor::from({1, 2}, {1.0, 2.0}), w);
  EXPECT_EQ(std::vector<double>(out.data().begin(), out.data().end()), (std::vector<double>{1.0, 2.0}));
}

TEST(ResidualBlock, HandExpansion) {
  // Row-vector convention: hidden = relu(v W1 + b1), out = hidden W2 + b2 + v S.
  const double v0 = 0.5, v1 = -1.0;
  const double a00 = 1.0, a01 = -2.0, a10 = 3.0, a11 = 0.5, b10 = 0.25, b11 = -0.5;
  const double c00 = 2.0, c01 = 1.0, c10 = -1.0, c11 = 4.0, b20 = 0.1, b21 = -0.2;
  const double s00 = 0.3, s01 = 0.0, s10 = -0.7, s11 = 1.5;
  ResidualBlockWeights w{Tensor::from({2, 2}, {a00, a01, a10, a11}), Tensor::from({2}, {b10, b11}),
                         Tensor::from({2, 2}, {c00, c01, c10, c11}), Tensor::from({2}, {b20, b21}),
                         Tensor::from({2, 2}, {s00, s01, s10, s11})};
  const double h0 = std::max(0.0, v0 * a00 + v1 * a10 + b10);  // 0.5 - 3 + 0.25 < 0 -> 0
  const double h1 = std::max(0.0, v0 * a01 + v1 * a11 + b11);  // -1 - 0.5 - 0.5 < 0 -> 0
  const double o0 = h0 * c00 + h1 * c10 + b20 + v0 * s00 + v1 * s10;
  const double o1 = h0 * c01 + h1 * c11 + b21 + v0 * s01 + v1 * s11;
  Tensor out = residual_block(Tensor::from({1, 2}, {v0, v1}), w);
  EXPECT_DOUBLE_EQ(out.data()[0], o0);
  EXPECT_DOUBLE_EQ(out.data()[1], o1);

  // Flip the input so both hidden units are active.
  const double u0 = 2.0, u1 = 1.0;
  const double g0 = u0 * a00 + u1 * a10 + b10, g1 = u0 * a01 + u1 * a11 + b11;
  ASSERT_GT(g0, 0.0);
  ASSERT_LT(g1, 0.0);
  out = residual_block(Tensor::from({1, 2}, {u0, u1}), w);
  EXPECT_DOUBLE_EQ(out.data()[0], g0 * c00 + b20 + u0 * s00 + u1 * s10);
  EXPECT_DOUBLE_EQ(out.data()[1], g0 * c01 + b21 + u0 * s01 + u1 * s11);
}

TEST(ResidualBlock, IdentitySkipNeedsEqualWidths) {
  ResidualBlockWeights w{Tensor::zeros({2, 3}), Tensor::zeros({3}), Tensor::zeros({3, 4}), Tensor::zeros({4}),
                         std::nullopt};
  EXPECT_THROW(residual_block(Tensor::from({1, 2}, {1.0, 2.0}), w), DimensionError);
}

// ---- input tokens / stack / output ---------------------------------------

TEST(InputTokens, ZeroWeightsGivePositionalTable) {
  const ModelConfig c = tiny_config();
  const ModelWeights w = ModelWeights::zeros(c);
  std::mt19937_64 rng(3);
  Tensor tokens = input_tokens(random_tensor({5, c.input_width()}, rng), w, c);
  Tensor pe = positional_encoding(5, c.model_dim);
  EXPECT_EQ(std::vector<double>(tokens.data().begin(), tokens.data().end()),
            std::vector<double>(pe.data().begin(), pe.data().end()));
}

TEST(InputTokens, WrongWidthIsShapeError) {
  const ModelConfig c = tiny_config();
  const ModelWeights w = ModelWeights::initialize(c, 1);
  EXPECT_THROW(input_tokens(Tensor::zeros({3, c.input_width() + 1}), w, c), DimensionError);
}

TEST(InputTokens, NoFeaturePathUsesPatchOnly) {
  const ModelConfig c = tiny_config(0);
  EXPECT_EQ(c.input_width(), c.input_patch_len);
  const ModelWeights w = ModelWeights::initialize(c, 4);
  std::vector<double> y{1, 2, 3, 4, 5, 6};
  Tensor a = input_tokens(patchify(y, nullptr, c.input_patch_len).flattened(), w, c);
  FeatureMatrix empty;
  empty.rows = 6;
  empty.cols = 0;
  Tensor b = input_tokens(patchify(y, &empty, c.input_patch_len).flattened(), w, c);
  EXPECT_EQ(std::vector<double>(a.data().begin(), a.data().end()), std::vector<double>(b.data().begin(), b.data().end()));
}

TEST(Stack, MatchesLoopReference) {
  for (std::size_t r : {0u, 2u}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const ModelConfig c = tiny_config(r);
      const ModelWeights w = perturbed_weights(c, seed);
      std::mt19937_64 rng(seed * 11);
      Tensor patches = random_tensor({7, c.input_width()}, rng);
      Tensor got = PatchedDecoder(c, w.clone()).forward(patches);
      Mat want = reference_forward(patches, w, c);
      ASSERT_EQ(got.shape(), (Shape{7, c.output_patch_len}));
      for (std::size_t j = 0; j < 7; ++j)
        for (std::size_t i = 0; i < c.output_patch_len; ++i)
          EXPECT_NEAR(got.data()[j * c.output_patch_len + i], want[j][i], 1e-10) << "row " << j;
    }
  }
}

TEST(Stack, SingleTokenAttendsToItself) {
  // With one token the attention output is exactly V(LN(x)) Wo + bo.
  ModelConfig c = tiny_config();
  c.num_layers = 1;
  ModelWeights w = perturbed_weights(c, 9);
  for (double& v : w.layers[0].ffn_w2.mutable_data()) v = 0.0;
  for (double& v : w.layers[0].ffn_b2.mutable_data()) v = 0.0;
  std::mt19937_64 rng(2);
  Tensor tokens = random_tensor({1, c.model_dim}, rng);
  Tensor out = stacked_transformer(tokens, w, c);
  const LayerWeights& l = w.layers[0];
  const auto z = ref_norm(to_vec(tokens), l.attn_norm_gain, l.attn_norm_bias);
  const auto v = affine(affine(z, l.wv, l.bv), l.wo, l.bo);
  for (std::size_t i = 0; i < c.model_dim; ++i) EXPECT_NEAR(out.data()[i], tokens.data()[i] + v[i], 1e-12);
}

TEST(Stack, CapacityError) {
  const ModelConfig c = tiny_config();
  const ModelWeights w = ModelWeights::initialize(c, 1);
  EXPECT_NO_THROW(stacked_transformer(Tensor::zeros({c.max_positions, c.model_dim}), w, c));
  EXPECT_THROW(stacked_transformer(Tensor::zeros({c.max_positions + 1, c.model_dim}), w, c), CapacityError);
}

TEST(Output, ZeroWeightsAndShape) {
  ModelConfig c = tiny_config();
  c.output_patch_len = 128;
  const ModelWeights w = ModelWeights::zeros(c);
  std::mt19937_64 rng(1);
  Tensor out = output_forecasts(random_tensor({16, c.model_dim}, rng), w, c);
  EXPECT_EQ(out.shape(), (Shape{16, 128}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

// ---- properties ----------------------------------------------------------

class ModelProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(ModelProperty, PerturbingLaterPatchLeavesEarlierRowsBitwiseEqual) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config(seed % 2 == 0 ? 0 : 3);
  const PatchedDecoder model(c, perturbed_weights(c, seed));
  std::mt19937_64 rng(seed);
  const std::size_t n = 3 + seed % 8;
  Tensor base = random_tensor({n, c.input_width()}, rng);
  const std::size_t k = rng() % n;
  Tensor changed = base.detach();
  for (std::size_t i = 0; i < c.input_width(); ++i) changed.mutable_data()[k * c.input_width() + i] += 1.0 + i;
  Tensor a = model.forward(base), b = model.forward(changed);
  const std::size_t h = c.output_patch_len;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < h; ++i) EXPECT_EQ(a.data()[j * h + i], b.data()[j * h + i]);
  bool row_k_changed = false;
  for (std::size_t i = 0; i < h; ++i) row_k_changed |= a.data()[k * h + i] != b.data()[k * h + i];
  EXPECT_TRUE(row_k_changed);
}

TEST_P(ModelProperty, PrefixRowsMatchFullSequence) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config(1);
  const PatchedDecoder model(c, perturbed_weights(c, seed));
  std::mt19937_64 rng(seed + 100);
  const std::size_t n = 6;
  Tensor full = random_tensor({n, c.input_width()}, rng);
  Tensor full_out = model.forward(full);
  const std::size_t j = 1 + seed % (n - 1);
  Tensor prefix = Tensor::from({j, c.input_width()},
                               std::vector<double>(full.data().begin(), full.data().begin() + j * c.input_width()));
  Tensor prefix_out = model.forward(prefix);
  // Equal up to rounding only: the attention-weighted sum runs over N terms
  // (masked ones exactly zero), and the GEMM summation order depends on N.
  for (std::size_t i = 0; i < j * c.output_patch_len; ++i) {
    EXPECT_NEAR(prefix_out.data()[i], full_out.data()[i], 1e-12 * (1.0 + std::abs(full_out.data()[i])));
  }
}

TEST_P(ModelProperty, GradientOfEarlierRowIgnoresLaterPatches) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config();
  const PatchedDecoder model(c, perturbed_weights(c, seed));
  std::mt19937_64 rng(seed + 7);
  const std::size_t n = 5;
  Tensor patches = random_tensor({n, c.input_width()}, rng, true);
  const std::size_t j = seed % (n - 1);
  testing::run_backward({patches}, [&] { return sum(slice_rows(model.forward(patches), j, j + 1)); });
  const auto g = patches.grad();
  for (std::size_t row = j + 1; row < n; ++row)
    for (std::size_t i = 0; i < c.input_width(); ++i) EXPECT_EQ(g[row * c.input_width() + i], 0.0);
}

TEST_P(ModelProperty, ShapeLaw) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config();
  const PatchedDecoder model(c, ModelWeights::initialize(c, seed));
  std::mt19937_64 rng(seed);
  const std::size_t len = c.input_patch_len + rng() % 30;
  Patches p = patchify(testing::random_values(len, rng), nullptr, c.input_patch_len);
  Tensor out = model.forward(p);
  EXPECT_EQ(out.shape(), (Shape{len / c.input_patch_len, c.output_patch_len}));
}

TEST_P(ModelProperty, SwappingPatchesChangesLaterRows) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config();
  const PatchedDecoder model(c, perturbed_weights(c, seed));
  std::mt19937_64 rng(seed + 3);
  const std::size_t n = 6, w = c.input_width(), h = c.output_patch_len;
  Tensor base = random_tensor({n, w}, rng);
  const std::size_t a = seed % 3, b = a + 2;
  Tensor swapped = base.detach();
  auto s = swapped.mutable_data();
  for (std::size_t i = 0; i < w; ++i) std::swap(s[a * w + i], s[b * w + i]);
  Tensor x = model.forward(base), y = model.forward(swapped);
  for (std::size_t row = a; row < n; ++row) {
    bool differs = false;
    for (std::size_t i = 0; i < h; ++i) differs |= x.data()[row * h + i] != y.data()[row * h + i];
    EXPECT_TRUE(differs) << "row " << row;
  }
}

TEST_P(ModelProperty, Deterministic) {
  const std::uint64_t seed = GetParam();
  const ModelConfig c = tiny_config(2);
  const PatchedDecoder m1(c, ModelWeights::initialize(c, seed)), m2(c, ModelWeights::initialize(c, seed));
  std::mt19937_64 rng(seed);
  Tensor p = random_tensor({4, c.input_width()}, rng);
  Tensor a = m1.forward(p), b = m2.forward(p);
  EXPECT_EQ(std::vector<double>(a.data().begin(), a.data().end()), std::vector<double>(b.data().begin(), b.data().end()));
}

INSTANTIATE_TEST_SUITE_P(Seeds, ModelProperty, ::testing::Range<std::uint64_t>(1, 9));

// ---- weights -------------------------------------------------------------

TEST(ModelWeights, ParameterNamesAreUniqueAndCountMatches) {
  const ModelConfig c = tiny_config(5);
  const ModelWeights w = ModelWeights::initialize(c, 1);
  std::set<std::string> names;
  std::size_t total = 0;
  for (const NamedTensor& p : w.parameters()) {
    EXPECT_TRUE(names.insert(p.name).second) << p.name;
    total += p.tensor.numel();
  }
  EXPECT_EQ(total, w.parameter_count());
  // input block: 12->6->8 with skip, 2 layers of 4 d*d + 4 d + 2 d*d + 2 d + 4 d, output 8->6->3 with skip
  const std::size_t d = 8;
  const std::size_t input = 12 * 6 + 6 + 6 * 8 + 8 + 12 * 8;
  const std::size_t layer = 6 * d * d + 10 * d;
  const std::size_t output = 8 * 6 + 6 + 6 * 3 + 3 + 8 * 3;
  EXPECT_EQ(total, input + 2 * layer + output);
}

TEST(ModelWeights, CloneIsDeep) {
  const ModelConfig c = tiny_config();
  ModelWeights w = ModelWeights::initialize(c, 1);
  ModelWeights copy = w.clone();
  copy.layers[0].wq.mutable_data()[0] += 1.0;
  EXPECT_NE(copy.layers[0].wq.data()[0], w.layers[0].wq.data()[0]);
}

TEST(ModelWeights, InitializeIsSeeded) {
  const ModelConfig c = tiny_config();
  const auto a = ModelWeights::initialize(c, 5).parameters();
  const auto b = ModelWeights::initialize(c, 5).parameters();
  const auto z = ModelWeights::initialize(c, 6).parameters();
  EXPECT_EQ(std::vector<double>(a[0].tensor.data().begin(), a[0].tensor.data().end()),
            std::vector<double>(b[0].tensor.data().begin(), b[0].tensor.data().end()));
  EXPECT_NE(std::vector<double>(a[0].tensor.data().begin(), a[0].tensor.data().end()),
            std::vector<double>(z[0].tensor.data().begin(), z[0].tensor.data().end()));
}

TEST(PatchedDecoder, LayerCountMismatch) {
  ModelConfig c = tiny_config();
  ModelWeights w = ModelWeights::initialize(c, 1);
  c.num_layers = 3;
  EXPECT_THROW(PatchedDecoder(c, std::move(w)), ConfigError);
}

}  // namespace
}  // namespace tsdec
