#include "dalign/microformer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dalign/error.hpp"
#include "dalign/quadrature.hpp"
#include "dalign/rng.hpp"
#include "dalign/simd/kernels.hpp"

namespace dalign::nn {
namespace {

constexpr double kLayerNormEps = 1e-5;

std::span<double> head_slice(Matrix& m, std::size_t row, std::size_t head, std::size_t d_head) {
  return m.row(row).subspan(head * d_head, d_head);
}
std::span<const double> head_slice(const Matrix& m, std::size_t row, std::size_t head,
                                   std::size_t d_head) {
  return m.row(row).subspan(head * d_head, d_head);
}

void add_row_vector(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) simd::add_into(bias.row(0), m.row(i));
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
  for (std::size_t i = 0; i < m.rows(); ++i) simd::add_into(m.row(i), out.row(0));
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  simd::add_into(b.flat(), out.flat());
  return out;
}

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * (1.0 / std::numbers::sqrt2))); }

double gelu_derivative(double u) {
  const double cdf = 0.5 * (1.0 + std::erf(u * (1.0 / std::numbers::sqrt2)));
  const double pdf = std::exp(-0.5 * u * u) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + u * pdf;
}

struct LayerNormCache {
  Matrix normalized;
  std::vector<double> inv_std;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const std::size_t d = x.cols();
  Matrix out(x.rows(), d);
  cache.normalized = Matrix(x.rows(), d);
  cache.inv_std.assign(x.rows(), 0.0);
  const std::vector<double> ones(d, 1.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double mean = simd::sum(row) / static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std[i] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const double xhat = (row[c] - mean) * inv;
      cache.normalized(i, c) = xhat;
      out(i, c) = gain(0, c) * xhat + bias(0, c);
    }
  }
  return out;
}

// Returns d input; accumulates gain/bias gradients when given.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache,
                           Matrix* dgain, Matrix* dbias) {
  const std::size_t d = dy.cols();
  const auto dd = static_cast<double>(d);
  Matrix dx(dy.rows(), d);
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const auto xhat = cache.normalized.row(i);
    const auto g = dy.row(i);
    for (std::size_t c = 0; c < d; ++c) dxhat[c] = g[c] * gain(0, c);
    if (dgain != nullptr) {
      for (std::size_t c = 0; c < d; ++c) (*dgain)(0, c) += g[c] * xhat[c];
      simd::add_into(g, dbias->row(0));
    }
    const double mean_dxhat = simd::sum(dxhat) / dd;
    const double mean_dxhat_xhat = simd::dot(dxhat, xhat) / dd;
    const double inv = cache.inv_std[i];
    for (std::size_t c = 0; c < d; ++c) {
      dx(i, c) = inv * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
    }
  }
  return dx;
}

struct LayerCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attention;  // per head, J x J
  Matrix heads_out;
  LayerNormCache ln1;
  Matrix h1;
  Matrix pre_activation;
  Matrix activation;
  LayerNormCache ln2;
};

struct Activations {
  std::vector<LayerCache> layers;
  std::vector<double> pooled;
  std::array<double, 2> logits{};
  std::size_t seq_len = 0;
};

std::size_t content_count(std::size_t seq_len) { return seq_len - 2; }

Activations run_forward(const ModelParams& p, const Matrix& embeddings) {
  const Dims& dims = p.dims;
  const std::size_t seq = embeddings.rows();
  if (embeddings.cols() != dims.d_model) {
    throw ValidationError("microformer: embedding width does not match d_model");
  }
  if (seq < 2) throw ValidationError("microformer: sequence must hold BOS and EOS");
  if (seq > dims.max_len) {
    throw ValidationError("microformer: sequence of " + std::to_string(seq) +
                          " positions exceeds max_len " + std::to_string(dims.max_len));
  }
  const std::size_t dk = dims.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Activations acts;
  acts.seq_len = seq;
  Matrix x = embeddings;
  for (std::size_t i = 0; i < seq; ++i) simd::add_into(p.position_embedding.row(i), x.row(i));

  acts.layers.resize(dims.layers);
  for (std::size_t m = 0; m < dims.layers; ++m) {
    const LayerParams& lp = p.layers[m];
    LayerCache& c = acts.layers[m];
    c.input = std::move(x);
    c.q = matmul(c.input, lp.wq);
    c.k = matmul(c.input, lp.wk);
    c.v = matmul(c.input, lp.wv);
    c.heads_out = Matrix(seq, dims.d_model);
    c.attention.assign(dims.heads, Matrix(seq, seq));
    for (std::size_t h = 0; h < dims.heads; ++h) {
      Matrix& a = c.attention[h];
      for (std::size_t i = 0; i < seq; ++i) {
        const auto qi = head_slice(c.q, i, h, dk);
        double row_max = -INFINITY;
        for (std::size_t j = 0; j < seq; ++j) {
          a(i, j) = simd::dot(qi, head_slice(c.k, j, h, dk)) * scale;
          row_max = std::max(row_max, a(i, j));
        }
        double total = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          a(i, j) = std::exp(a(i, j) - row_max);
          total += a(i, j);
        }
        for (std::size_t j = 0; j < seq; ++j) a(i, j) /= total;
        auto out = head_slice(c.heads_out, i, h, dk);
        for (std::size_t j = 0; j < seq; ++j) simd::axpy(a(i, j), head_slice(c.v, j, h, dk), out);
      }
    }
    const Matrix residual1 = add(c.input, matmul(c.heads_out, lp.wo));
    c.h1 = layer_norm(residual1, lp.ln1_gain, lp.ln1_bias, c.ln1);

    c.pre_activation = matmul(c.h1, lp.w1);
    add_row_vector(c.pre_activation, lp.b1);
    c.activation = Matrix(seq, dims.d_ff);
    for (std::size_t i = 0; i < c.pre_activation.size(); ++i) {
      c.activation.flat()[i] = gelu(c.pre_activation.flat()[i]);
    }
    Matrix ff = matmul(c.activation, lp.w2);
    add_row_vector(ff, lp.b2);
    const Matrix residual2 = add(c.h1, ff);
    x = layer_norm(residual2, lp.ln2_gain, lp.ln2_bias, c.ln2);
  }

  acts.pooled.assign(dims.d_model, 0.0);
  const std::size_t n = content_count(seq);
  if (n > 0) {
    for (std::size_t i = 1; i <= n; ++i) simd::add_into(x.row(i), acts.pooled);
    for (double& v : acts.pooled) v /= static_cast<double>(n);
  }
  for (int cls = 0; cls < 2; ++cls) {
    double logit = p.classifier_bias(0, cls);
    for (std::size_t c = 0; c < dims.d_model; ++c) logit += acts.pooled[c] * p.classifier(c, cls);
    acts.logits[cls] = logit;
  }
  return acts;
}

// Reverse pass for the scalar sum_c dlogits[c] * logit[c]. Returns the gradient
// with respect to the input of the first layer (token + position embeddings);
// parameter gradients are added into `grads` when it is non-null, except for
// the embedding tables, which the caller scatters.
Matrix run_backward(const ModelParams& p, const Activations& acts,
                    const std::array<double, 2>& dlogits, ModelParams* grads) {
  const Dims& dims = p.dims;
  const std::size_t seq = acts.seq_len;
  const std::size_t dk = dims.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<double> dpooled(dims.d_model, 0.0);
  for (std::size_t c = 0; c < dims.d_model; ++c) {
    dpooled[c] = p.classifier(c, 0) * dlogits[0] + p.classifier(c, 1) * dlogits[1];
  }
  if (grads != nullptr) {
    for (std::size_t c = 0; c < dims.d_model; ++c) {
      grads->classifier(c, 0) += acts.pooled[c] * dlogits[0];
      grads->classifier(c, 1) += acts.pooled[c] * dlogits[1];
    }
    grads->classifier_bias(0, 0) += dlogits[0];
    grads->classifier_bias(0, 1) += dlogits[1];
  }

  Matrix dx(seq, dims.d_model);
  const std::size_t n = content_count(seq);
  if (n > 0) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 1; i <= n; ++i) simd::axpy(inv_n, dpooled, dx.row(i));
  }

  for (std::size_t m = dims.layers; m-- > 0;) {
    const LayerParams& lp = p.layers[m];
    const LayerCache& c = acts.layers[m];
    LayerParams* lg = grads != nullptr ? &grads->layers[m] : nullptr;

    const Matrix dr2 = layer_norm_backward(dx, lp.ln2_gain, c.ln2, lg ? &lg->ln2_gain : nullptr,
                                           lg ? &lg->ln2_bias : nullptr);
    if (lg != nullptr) {
      matmul_tn_accumulate(c.activation, dr2, lg->w2);
      accumulate_column_sums(dr2, lg->b2);
    }
    Matrix dpre = matmul_nt(dr2, lp.w2);
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      dpre.flat()[i] *= gelu_derivative(c.pre_activation.flat()[i]);
    }
    if (lg != nullptr) {
      matmul_tn_accumulate(c.h1, dpre, lg->w1);
      accumulate_column_sums(dpre, lg->b1);
    }
    Matrix dh1 = matmul_nt(dpre, lp.w1);
    simd::add_into(dr2.flat(), dh1.flat());

    const Matrix dr1 = layer_norm_backward(dh1, lp.ln1_gain, c.ln1, lg ? &lg->ln1_gain : nullptr,
                                           lg ? &lg->ln1_bias : nullptr);
    if (lg != nullptr) matmul_tn_accumulate(c.heads_out, dr1, lg->wo);
    const Matrix dheads = matmul_nt(dr1, lp.wo);

    Matrix dq(seq, dims.d_model), dk_m(seq, dims.d_model), dv(seq, dims.d_model);
    std::vector<double> dattn(seq);
    for (std::size_t h = 0; h < dims.heads; ++h) {
      const Matrix& a = c.attention[h];
      for (std::size_t i = 0; i < seq; ++i) {
        const auto dout = head_slice(dheads, i, h, dk);
        double weighted = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          dattn[j] = simd::dot(dout, head_slice(c.v, j, h, dk));
          weighted += a(i, j) * dattn[j];
          simd::axpy(a(i, j), dout, head_slice(dv, j, h, dk));
        }
        const auto qi = head_slice(c.q, i, h, dk);
        auto dqi = head_slice(dq, i, h, dk);
        for (std::size_t j = 0; j < seq; ++j) {
          const double dscore = a(i, j) * (dattn[j] - weighted) * scale;
          if (dscore == 0.0) continue;
          simd::axpy(dscore, head_slice(c.k, j, h, dk), dqi);
          simd::axpy(dscore, qi, head_slice(dk_m, j, h, dk));
        }
      }
    }
    if (lg != nullptr) {
      matmul_tn_accumulate(c.input, dq, lg->wq);
      matmul_tn_accumulate(c.input, dk_m, lg->wk);
      matmul_tn_accumulate(c.input, dv, lg->wv);
    }
    Matrix dinput = dr1;
    simd::add_into(matmul_nt(dq, lp.wq).flat(), dinput.flat());
    simd::add_into(matmul_nt(dk_m, lp.wk).flat(), dinput.flat());
    simd::add_into(matmul_nt(dv, lp.wv).flat(), dinput.flat());
    dx = std::move(dinput);
  }
  return dx;
}

std::vector<tok::TokenId> with_specials(const ModelParams& p,
                                        std::span<const tok::TokenId> content_ids) {
  std::vector<tok::TokenId> ids;
  ids.reserve(content_ids.size() + 2);
  ids.push_back(p.specials.bos);
  ids.insert(ids.end(), content_ids.begin(), content_ids.end());
  ids.push_back(p.specials.eos);
  return ids;
}

Matrix gather_rows(const ModelParams& p, std::span<const tok::TokenId> ids) {
  if (ids.size() > p.dims.max_len) {
    throw ValidationError("microformer: sequence of " + std::to_string(ids.size()) +
                          " positions exceeds max_len " + std::to_string(p.dims.max_len));
  }
  Matrix out(ids.size(), p.dims.d_model);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= p.dims.vocab) {
      throw ValidationError("microformer: token id " + std::to_string(ids[i]) +
                            " outside the vocabulary");
    }
    std::ranges::copy(p.token_embedding.row(ids[i]), out.row(i).begin());
  }
  return out;
}

int argmax(const std::array<double, 2>& logits) { return logits[1] > logits[0] ? 1 : 0; }

}  // namespace

void Dims::validate() const {
  if (vocab == 0 || d_model == 0 || heads == 0 || layers == 0 || d_ff == 0 || max_len < 2) {
    throw ValidationError("microformer: every dimension must be positive and max_len >= 2");
  }
  if (d_model % heads != 0) {
    throw ValidationError("microformer: d_model must be a multiple of the head count");
  }
}

ModelParams ModelParams::zeros(const Dims& dims, const tok::SpecialIds& specials) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  p.specials = specials;
  const std::size_t d = dims.d_model;
  p.token_embedding = Matrix(dims.vocab, d);
  p.position_embedding = Matrix(dims.max_len, d);
  p.layers.resize(dims.layers);
  for (LayerParams& lp : p.layers) {
    lp.wq = lp.wk = lp.wv = lp.wo = Matrix(d, d);
    lp.ln1_gain = lp.ln1_bias = lp.ln2_gain = lp.ln2_bias = Matrix(1, d);
    lp.w1 = Matrix(d, dims.d_ff);
    lp.b1 = Matrix(1, dims.d_ff);
    lp.w2 = Matrix(dims.d_ff, d);
    lp.b2 = Matrix(1, d);
  }
  p.classifier = Matrix(d, 2);
  p.classifier_bias = Matrix(1, 2);
  return p;
}

ModelParams ModelParams::random(const Dims& dims, const tok::SpecialIds& specials,
                                std::uint64_t seed) {
  ModelParams p = zeros(dims, specials);
  Rng rng(seed);
  auto gaussian = [&rng](Matrix& m, double mean, double stddev) {
    for (double& v : m.flat()) v = rng.normal(mean, stddev);
  };
  p.for_each_array([&](std::string_view name, Matrix& m) {
    if (name.ends_with("_embedding")) {
      gaussian(m, 0.0, 1.0);
    } else if (name.ends_with("_gain")) {
      gaussian(m, 1.0, 0.1);
    } else if (name.ends_with("_bias") || name.ends_with(".b1") || name.ends_with(".b2")) {
      gaussian(m, 0.0, 0.1);
    } else {
      gaussian(m, 0.0, 1.0 / std::sqrt(static_cast<double>(m.rows())));
    }
  });
  return p;
}

void ModelParams::for_each_array(const std::function<void(std::string_view, Matrix&)>& fn) {
  fn("token_embedding", token_embedding);
  fn("position_embedding", position_embedding);
  for (std::size_t m = 0; m < layers.size(); ++m) {
    LayerParams& lp = layers[m];
    const std::string prefix = "layer" + std::to_string(m + 1) + ".";
    fn(prefix + "wq", lp.wq);
    fn(prefix + "wk", lp.wk);
    fn(prefix + "wv", lp.wv);
    fn(prefix + "wo", lp.wo);
    fn(prefix + "ln1_gain", lp.ln1_gain);
    fn(prefix + "ln1_bias", lp.ln1_bias);
    fn(prefix + "w1", lp.w1);
    fn(prefix + "b1", lp.b1);
    fn(prefix + "w2", lp.w2);
    fn(prefix + "b2", lp.b2);
    fn(prefix + "ln2_gain", lp.ln2_gain);
    fn(prefix + "ln2_bias", lp.ln2_bias);
  }
  fn("classifier", classifier);
  fn("classifier_bias", classifier_bias);
}

void ModelParams::for_each_array(
    const std::function<void(std::string_view, const Matrix&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_array(
      [&fn](std::string_view name, Matrix& m) { fn(name, m); });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for_each_array([&total](std::string_view, const Matrix& m) { total += m.size(); });
  return total;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.dims == b.dims) || a.specials.bos != b.specials.bos ||
      a.specials.eos != b.specials.eos || a.specials.pad != b.specials.pad) {
    return false;
  }
  std::vector<const Matrix*> left;
  a.for_each_array([&left](std::string_view, const Matrix& m) { left.push_back(&m); });
  std::size_t i = 0;
  bool equal = true;
  b.for_each_array([&](std::string_view, const Matrix& m) { equal = equal && *left[i++] == m; });
  return equal;
}

Matrix embed(const ModelParams& params, std::span<const tok::TokenId> content_ids) {
  return gather_rows(params, with_specials(params, content_ids));
}

Matrix baseline_embeddings(const ModelParams& params, std::size_t content_length) {
  std::vector<tok::TokenId> pads(content_length, params.specials.pad);
  return embed(params, pads);
}

ForwardTrace forward(const ModelParams& params, std::span<const tok::TokenId> content_ids) {
  ForwardTrace trace;
  trace.input_embeddings = embed(params, content_ids);
  const Activations acts = run_forward(params, trace.input_embeddings);
  trace.logits = acts.logits;
  trace.predicted_label = argmax(acts.logits);
  const std::size_t seq = acts.seq_len;
  trace.attention.reserve(params.dims.layers);
  for (std::size_t m = 0; m < params.dims.layers; ++m) {
    rel::AttentionTensor t;
    t.layer = m + 1;
    t.heads = params.dims.heads;
    t.seq_len = seq;
    t.values.reserve(t.heads * seq * seq);
    for (const Matrix& a : acts.layers[m].attention) {
      t.values.insert(t.values.end(), a.flat().begin(), a.flat().end());
    }
    trace.attention.push_back(std::move(t));
  }
  return trace;
}

ForwardTrace forward(const ModelParams& params, const tok::TokenizedFunction& function) {
  const std::vector<tok::TokenId> ids = function.ids();
  ForwardTrace trace = forward(params, std::span<const tok::TokenId>(ids));
  for (rel::AttentionTensor& t : trace.attention) t.function_id = function.function_id;
  return trace;
}

std::array<double, 2> logits_from_embeddings(const ModelParams& params, const Matrix& embeddings) {
  return run_forward(params, embeddings).logits;
}

Matrix grad_embeddings(const ModelParams& params, const Matrix& embeddings, int target_class) {
  const Activations acts = run_forward(params, embeddings);
  std::array<double, 2> dlogits{0.0, 0.0};
  dlogits.at(static_cast<std::size_t>(target_class)) = 1.0;
  return run_backward(params, acts, dlogits, nullptr);
}

Matrix grad_embeddings(const ModelParams& params, std::span<const tok::TokenId> content_ids,
                       int target_class) {
  return grad_embeddings(params, embed(params, content_ids), target_class);
}

ModelParams grad_params(const ModelParams& params, std::span<const tok::TokenId> content_ids,
                        const std::array<double, 2>& dlogits) {
  ModelParams grads = ModelParams::zeros(params.dims, params.specials);
  const std::vector<tok::TokenId> ids = with_specials(params, content_ids);
  const Activations acts = run_forward(params, gather_rows(params, ids));
  const Matrix dx = run_backward(params, acts, dlogits, &grads);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    simd::add_into(dx.row(i), grads.token_embedding.row(ids[i]));
    simd::add_into(dx.row(i), grads.position_embedding.row(i));
  }
  return grads;
}

std::vector<double> integrated_gradients_positions(const ModelParams& params,
                                                   std::span<const tok::TokenId> content_ids,
                                                   const IGConfig& config) {
  const Matrix input = embed(params, content_ids);
  const Matrix baseline = baseline_embeddings(params, content_ids.size());
  Matrix delta = input;
  simd::axpy(-1.0, baseline.flat(), delta.flat());

  const quad::GaussLegendre rule = quad::gauss_legendre_unit(config.steps);
  Matrix averaged(input.rows(), input.cols());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    Matrix point = baseline;
    simd::axpy(rule.nodes[k], delta.flat(), point.flat());
    const Matrix g = grad_embeddings(params, point, kVulnerableClass);
    simd::axpy(rule.weights[k], g.flat(), averaged.flat());
  }
  std::vector<double> out(input.rows());
  for (std::size_t i = 0; i < input.rows(); ++i) out[i] = simd::dot(delta.row(i), averaged.row(i));
  return out;
}

rel::TokenRelevanceRecord integrated_gradients(const ModelParams& params,
                                               const tok::TokenizedFunction& function,
                                               const IGConfig& config) {
  const std::vector<tok::TokenId> ids = function.ids();
  const std::vector<double> per_position = integrated_gradients_positions(params, ids, config);
  rel::TokenRelevanceRecord out;
  out.function_id = function.function_id;
  out.method = std::string(rel::method::kIntegratedGradients);
  out.predicted_label = predict(params, ids);
  out.scores.reserve(function.tokens.size());
  for (std::size_t i = 0; i < function.tokens.size(); ++i) {
    out.scores.push_back({function.tokens[i].line_index, per_position[i + 1]});
  }
  return out;
}

rel::TokenRelevanceRecord attention_relevance(const ModelParams& params,
                                              const tok::TokenizedFunction& function,
                                              std::size_t layer, std::string method_tag) {
  if (layer == 0 || layer > params.dims.layers) {
    throw ValidationError("attention layer " + std::to_string(layer) + " outside 1.." +
                          std::to_string(params.dims.layers));
  }
  const ForwardTrace trace = forward(params, function);
  const rel::AttentionTensor& attn = trace.attention[layer - 1];
  const std::vector<std::size_t> lines = function.token_lines();
  const std::size_t specials[] = {0, attn.seq_len - 1};
  rel::TokenRelevanceRecord out = rel::attention_token_relevance(attn, lines, specials);
  out.method = std::move(method_tag);
  out.predicted_label = trace.predicted_label;
  return out;
}

int predict(const ModelParams& params, std::span<const tok::TokenId> content_ids) {
  return argmax(run_forward(params, embed(params, content_ids)).logits);
}

namespace {

std::vector<Matrix*> arrays_of(ModelParams& p) {
  std::vector<Matrix*> out;
  p.for_each_array([&out](std::string_view, Matrix& m) { out.push_back(&m); });
  return out;
}

double validation_f1(const ModelParams& params, std::span<const LabeledSequence> dataset,
                     const std::vector<std::size_t>& indices) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t idx : indices) {
    const int predicted = predict(params, dataset[idx].ids);
    const int actual = dataset[idx].label;
    tp += predicted == 1 && actual == 1;
    fp += predicted == 1 && actual == 0;
    fn += predicted == 0 && actual == 1;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

}  // namespace

ModelParams train_toy(const ModelParams& init, std::span<const LabeledSequence> dataset,
                      const TrainConfig& config, TrainReport* report) {
  if (dataset.empty()) throw ValidationError("train_toy: dataset is empty");
  for (const LabeledSequence& s : dataset) {
    if (s.label != 0 && s.label != 1) throw ValidationError("train_toy: labels must be 0 or 1");
  }
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::size_t n_val = 0;
  if (dataset.size() >= 5) {
    n_val = static_cast<std::size_t>(
        std::lround(config.validation_fraction * static_cast<double>(dataset.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
  }
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (val.empty()) val = train;

  ModelParams params = init;
  ModelParams best = init;
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep = TrainReport{};

  ModelParams first_moment = ModelParams::zeros(init.dims, init.specials);
  ModelParams second_moment = first_moment;
  const std::vector<Matrix*> param_arrays = arrays_of(params);
  const std::vector<Matrix*> m_arrays = arrays_of(first_moment);
  const std::vector<Matrix*> v_arrays = arrays_of(second_moment);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  std::size_t step = 0;
  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(train);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch_size) {
      const std::size_t end = std::min(train.size(), start + batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      ModelParams grads = ModelParams::zeros(params.dims, params.specials);
      for (std::size_t b = start; b < end; ++b) {
        const LabeledSequence& sample = dataset[train[b]];
        const std::vector<tok::TokenId> ids = with_specials(params, sample.ids);
        const Activations acts = run_forward(params, gather_rows(params, ids));
        const double top = std::max(acts.logits[0], acts.logits[1]);
        const double e0 = std::exp(acts.logits[0] - top);
        const double e1 = std::exp(acts.logits[1] - top);
        const std::array<double, 2> prob{e0 / (e0 + e1), e1 / (e0 + e1)};
        const auto label = static_cast<std::size_t>(sample.label);
        epoch_loss -= std::log(std::max(prob[label], 1e-300));
        std::array<double, 2> dlogits{prob[0] * inv_batch, prob[1] * inv_batch};
        dlogits[label] -= inv_batch;
        const Matrix dx = run_backward(params, acts, dlogits, &grads);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          simd::add_into(dx.row(i), grads.token_embedding.row(ids[i]));
          simd::add_into(dx.row(i), grads.position_embedding.row(i));
        }
      }
      if (config.learning_rate == 0.0) continue;
      ++step;
      const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      const std::vector<Matrix*> grad_arrays = arrays_of(grads);
      for (std::size_t a = 0; a < param_arrays.size(); ++a) {
        auto w = param_arrays[a]->flat();
        const auto g = grad_arrays[a]->flat();
        auto mo = m_arrays[a]->flat();
        auto ve = v_arrays[a]->flat();
        for (std::size_t i = 0; i < w.size(); ++i) {
          mo[i] = kBeta1 * mo[i] + (1.0 - kBeta1) * g[i];
          ve[i] = kBeta2 * ve[i] + (1.0 - kBeta2) * g[i] * g[i];
          const double m_hat = mo[i] / correction1;
          const double v_hat = ve[i] / correction2;
          w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
        }
      }
    }
    rep.epoch_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    const double f1 = validation_f1(params, dataset, val);
    rep.validation_f1.push_back(f1);
    if (rep.best_epoch == 0 || f1 >= rep.best_f1) {
      rep.best_epoch = epoch;
      rep.best_f1 = f1;
      best = params;
    }
  }
  return best;
}

}  // namespace dalign::nn
