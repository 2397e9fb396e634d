#pragma once

// A small transformer encoder classifier with a hand-written reverse pass.
// It exists to produce attention maps and Integrated Gradients relevance for
// desk-scale end-to-end runs of the alignment pipeline.
//
// Sequence layout: [BOS] content... [EOS]. Per layer:
//   h   = LayerNorm(x + MultiHeadAttention(x))
//   out = LayerNorm(h + W2 gelu(W1 h + b1) + b2)
// followed by mean pooling over content positions and a linear 2-way head.
// Attention per head is softmax(Q_h K_h^T / sqrt(d_k)) with no Q/K/V biases.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dalign/relevance.hpp"
#include "dalign/tensor.hpp"
#include "dalign/tokenizer.hpp"

namespace dalign::nn {

struct Dims {
  std::size_t vocab = 0;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t d_ff = 64;
  std::size_t max_len = 512;  // including BOS and EOS

  std::size_t d_head() const { return d_model / heads; }
  // Throws ValidationError unless every dimension is positive and
  // d_model == heads * d_head.
  void validate() const;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct LayerParams {
  Matrix wq, wk, wv;  // d x d; columns [h*d_k, (h+1)*d_k) belong to head h
  Matrix wo;          // d x d
  Matrix ln1_gain, ln1_bias;  // 1 x d
  Matrix w1, b1;              // d x d_ff, 1 x d_ff
  Matrix w2, b2;              // d_ff x d, 1 x d
  Matrix ln2_gain, ln2_bias;  // 1 x d
};

struct ModelParams {
  Dims dims;
  tok::SpecialIds specials;
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_len x d
  std::vector<LayerParams> layers;
  Matrix classifier;       // d x 2
  Matrix classifier_bias;  // 1 x 2

  // All-zero parameters of the right shapes (layer-norm gains included).
  static ModelParams zeros(const Dims& dims, const tok::SpecialIds& specials);
  // Gaussian initialization from `seed`. Standard deviations: 1/sqrt(fan_in)
  // for weights, 1 for embeddings, 0.1 for biases and around 1 for gains.
  static ModelParams random(const Dims& dims, const tok::SpecialIds& specials,
                            std::uint64_t seed);

  // Every parameter array with a stable name, in checkpoint order.
  void for_each_array(const std::function<void(std::string_view, Matrix&)>& fn);
  void for_each_array(const std::function<void(std::string_view, const Matrix&)>& fn) const;

  std::size_t parameter_count() const;
  friend bool operator==(const ModelParams&, const ModelParams&);
};

struct ForwardTrace {
  std::array<double, 2> logits{};
  int predicted_label = 0;
  // One tensor per layer, layer index 1-based; positions include BOS/EOS.
  std::vector<rel::AttentionTensor> attention;
  Matrix input_embeddings;  // J x d token embeddings, before positions are added
};

// Token embeddings of [BOS] ids... [EOS]. Throws ValidationError if the
// sequence exceeds max_len or an id is outside the vocabulary.
Matrix embed(const ModelParams& params, std::span<const tok::TokenId> content_ids);

// [BOS] PAD... [EOS] of the given content length.
Matrix baseline_embeddings(const ModelParams& params, std::size_t content_length);

ForwardTrace forward(const ModelParams& params, std::span<const tok::TokenId> content_ids);
ForwardTrace forward(const ModelParams& params, const tok::TokenizedFunction& function);

// Logits for explicit token embeddings (J x d, BOS/EOS rows included).
std::array<double, 2> logits_from_embeddings(const ModelParams& params, const Matrix& embeddings);

// d logit[target_class] / d embeddings, J x d.
Matrix grad_embeddings(const ModelParams& params, const Matrix& embeddings, int target_class);
Matrix grad_embeddings(const ModelParams& params, std::span<const tok::TokenId> content_ids,
                       int target_class);

// Gradients of sum_c dlogits[c] * logit[c] with respect to every parameter.
ModelParams grad_params(const ModelParams& params, std::span<const tok::TokenId> content_ids,
                        const std::array<double, 2>& dlogits);

inline constexpr int kVulnerableClass = 1;

struct IGConfig {
  std::size_t steps = 64;
};

// Integrated Gradients of the vulnerable-class logit with respect to the token
// embeddings, from the padding baseline, with Gauss-Legendre weights:
//   r_i = sum_dim (x_i - x'_i) * sum_k w_k dF(x' + a_k (x - x'))/dx_i
// Returns one value per sequence position (BOS and EOS included; both are 0
// because the baseline keeps them).
std::vector<double> integrated_gradients_positions(const ModelParams& params,
                                                   std::span<const tok::TokenId> content_ids,
                                                   const IGConfig& config);

// Content-position IG scores with their source lines, tagged
// "integrated-gradients" and carrying the model's prediction.
rel::TokenRelevanceRecord integrated_gradients(const ModelParams& params,
                                               const tok::TokenizedFunction& function,
                                               const IGConfig& config);

// Attention-based relevance of layer `layer` (1-based) for an encoded function.
rel::TokenRelevanceRecord attention_relevance(const ModelParams& params,
                                              const tok::TokenizedFunction& function,
                                              std::size_t layer, std::string method_tag);

struct LabeledSequence {
  std::vector<tok::TokenId> ids;
  int label = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
  double validation_fraction = 0.2;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> validation_f1;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_f1 = 0.0;
};

// Mini-batch Adam on the mean cross-entropy. The data order and the
// validation split are drawn from `seed`. Returns the parameters after the
// epoch with the highest validation F1 (the latest one on ties). Throws
// ValidationError on an empty dataset.
ModelParams train_toy(const ModelParams& init, std::span<const LabeledSequence> dataset,
                      const TrainConfig& config, TrainReport* report = nullptr);

int predict(const ModelParams& params, std::span<const tok::TokenId> content_ids);

}  // namespace dalign::nn
