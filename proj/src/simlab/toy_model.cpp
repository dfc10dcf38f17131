#include "pds/simlab/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pds/errors.hpp"
#include "pds/rng.hpp"
#include "pds/vector_ops.hpp"

namespace pds::simlab {
namespace {

constexpr double kLayerNormEps = 1e-5;

void fill_normal(Matrix& m, double stddev, Rng& rng) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (double& x : m.row(r)) {
      x = stddev * rng.normal();
    }
  }
}

LayerNormWeights identity_ln(std::size_t d) { return {std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)}; }

void layer_norm(std::span<const double> x, const LayerNormWeights& w, std::span<double> out) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (x[i] - mean) * inv * w.gain[i] + w.bias[i];
  }
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    y[r] = dot(w.row(r), x);
  }
}

double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

}  // namespace

void validate(const ToyModelSpec& spec) {
  if (spec.n_layers < 1 || spec.d_model < 1 || spec.n_heads < 1 || spec.vocab_size < 1 ||
      spec.max_len < 1 || spec.mlp_multiplier < 1) {
    throw DataError("toy model sizes must be positive");
  }
  if (spec.d_model % spec.n_heads != 0) {
    throw DataError("d_model must be divisible by n_heads");
  }
}

ToyWeights random_weights(const ToyModelSpec& spec) {
  validate(spec);
  Rng rng(spec.weight_seed);
  const auto d = static_cast<std::size_t>(spec.d_model);
  const auto v = static_cast<std::size_t>(spec.vocab_size);
  const std::size_t hidden = d * static_cast<std::size_t>(spec.mlp_multiplier);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));

  ToyWeights w;
  w.token_embedding = Matrix(v, d);
  fill_normal(w.token_embedding, 1.0, rng);
  w.position_embedding = Matrix(static_cast<std::size_t>(spec.max_len), d);
  fill_normal(w.position_embedding, 0.5, rng);
  for (int l = 0; l < spec.n_layers; ++l) {
    BlockWeights b;
    b.ln1 = identity_ln(d);
    b.wq = Matrix(d, d);
    b.wk = Matrix(d, d);
    b.wv = Matrix(d, d);
    b.wo = Matrix(d, d);
    fill_normal(b.wq, in_scale, rng);
    fill_normal(b.wk, in_scale, rng);
    fill_normal(b.wv, in_scale, rng);
    fill_normal(b.wo, 0.5 * in_scale, rng);
    b.ln2 = identity_ln(d);
    b.w1 = Matrix(hidden, d);
    fill_normal(b.w1, in_scale, rng);
    b.b1.assign(hidden, 0.0);
    b.w2 = Matrix(d, hidden);
    fill_normal(b.w2, 0.5 / std::sqrt(static_cast<double>(hidden)), rng);
    b.b2.assign(d, 0.0);
    w.blocks.push_back(std::move(b));
  }
  w.final_ln = identity_ln(d);
  w.unembedding = Matrix(v, d);
  fill_normal(w.unembedding, in_scale, rng);
  return w;
}

ToyModel::ToyModel(const ToyModelSpec& spec) : ToyModel(spec, random_weights(spec)) {}

ToyModel::ToyModel(const ToyModelSpec& spec, ToyWeights weights) : spec_(spec), weights_(std::move(weights)) {
  validate(spec_);
  const auto d = static_cast<std::size_t>(spec_.d_model);
  if (weights_.token_embedding.rows() != static_cast<std::size_t>(spec_.vocab_size) ||
      weights_.token_embedding.cols() != d || weights_.unembedding.rows() != weights_.token_embedding.rows() ||
      weights_.unembedding.cols() != d ||
      weights_.position_embedding.rows() != static_cast<std::size_t>(spec_.max_len) ||
      weights_.blocks.size() != static_cast<std::size_t>(spec_.n_layers)) {
    throw DataError("toy weights do not match the model spec");
  }
}

void ToyModel::run_block(const BlockWeights& w, const Matrix& in, Matrix& out) const {
  const std::size_t t_len = in.rows();
  const auto d = static_cast<std::size_t>(spec_.d_model);
  const auto heads = static_cast<std::size_t>(spec_.n_heads);
  const std::size_t dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  out = in;
  Matrix q(t_len, d), k(t_len, d), v(t_len, d);
  std::vector<double> normed(d);
  for (std::size_t t = 0; t < t_len; ++t) {
    layer_norm(in.row(t), w.ln1, normed);
    matvec(w.wq, normed, q.row(t));
    matvec(w.wk, normed, k.row(t));
    matvec(w.wv, normed, v.row(t));
  }

  std::vector<double> attended(d), projected(d), scores(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    std::fill(attended.begin(), attended.end(), 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      const std::span<const double> qh = q.row(t).subspan(off, dh);
      double max_score = -INFINITY;
      for (std::size_t s = 0; s <= t; ++s) {
        scores[s] = dot(qh, k.row(s).subspan(off, dh)) * inv_sqrt_dh;
        max_score = std::max(max_score, scores[s]);
      }
      double denom = 0.0;
      for (std::size_t s = 0; s <= t; ++s) {
        scores[s] = std::exp(scores[s] - max_score);
        denom += scores[s];
      }
      std::span<double> dst(attended.data() + off, dh);
      for (std::size_t s = 0; s <= t; ++s) {
        axpy(scores[s] / denom, v.row(s).subspan(off, dh), dst);
      }
    }
    matvec(w.wo, attended, projected);
    axpy(1.0, projected, out.row(t));
  }

  const std::size_t hidden = w.w1.rows();
  std::vector<double> act(hidden);
  for (std::size_t t = 0; t < t_len; ++t) {
    layer_norm(out.row(t), w.ln2, normed);
    matvec(w.w1, normed, act);
    for (std::size_t i = 0; i < hidden; ++i) {
      act[i] = gelu(act[i] + w.b1[i]);
    }
    matvec(w.w2, act, projected);
    std::span<double> row = out.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      row[i] += projected[i] + w.b2[i];
    }
  }
}

ForwardPass ToyModel::forward(std::span<const int> tokens, const ResidualEdit* edit) const {
  if (tokens.empty()) {
    throw DataError("forward pass on an empty sequence");
  }
  if (tokens.size() > static_cast<std::size_t>(spec_.max_len)) {
    throw DataError("sequence length " + std::to_string(tokens.size()) + " exceeds max_len " +
                    std::to_string(spec_.max_len));
  }
  if (edit != nullptr &&
      (edit->layer < 0 || edit->layer >= spec_.n_layers || edit->position < 0 ||
       static_cast<std::size_t>(edit->position) >= tokens.size())) {
    throw DataError("residual edit at layer " + std::to_string(edit ? edit->layer : 0) +
                    " is outside [0, " + std::to_string(spec_.n_layers) + ")");
  }
  const std::size_t t_len = tokens.size();
  const auto d = static_cast<std::size_t>(spec_.d_model);

  ForwardPass pass;
  pass.residual.resize(static_cast<std::size_t>(spec_.n_layers) + 1);
  Matrix& x0 = pass.residual[0];
  x0 = Matrix(t_len, d);
  for (std::size_t t = 0; t < t_len; ++t) {
    const int tok = tokens[t];
    if (tok < 0 || tok >= spec_.vocab_size) {
      throw DataError("token id " + std::to_string(tok) + " outside vocabulary");
    }
    std::span<double> row = x0.row(t);
    const auto te = weights_.token_embedding.row(static_cast<std::size_t>(tok));
    const auto pe = weights_.position_embedding.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      row[i] = te[i] + pe[i];
    }
  }

  for (int l = 0; l < spec_.n_layers; ++l) {
    auto idx = static_cast<std::size_t>(l);
    if (edit != nullptr && edit->layer == l) {
      edit->apply(pass.residual[idx].row(static_cast<std::size_t>(edit->position)));
    }
    run_block(weights_.blocks[idx], pass.residual[idx], pass.residual[idx + 1]);
  }

  const Matrix& last = pass.residual.back();
  pass.logits = Matrix(t_len, static_cast<std::size_t>(spec_.vocab_size));
  std::vector<double> normed(d);
  for (std::size_t t = 0; t < t_len; ++t) {
    std::span<const double> h = last.row(t);
    if (spec_.final_norm) {
      layer_norm(h, weights_.final_ln, normed);
      h = normed;
    }
    matvec(weights_.unembedding, h, pass.logits.row(t));
  }
  return pass;
}

ToyModel build_toy_model(const ToyModelSpec& spec) { return ToyModel(spec); }

}  // namespace pds::simlab
