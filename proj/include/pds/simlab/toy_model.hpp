#pragma once
// A small pre-LayerNorm decoder-only transformer with seeded weights and a
// residual-stream edit hook. No KV cache: every call recomputes the whole
// sequence, which keeps injection semantics easy to audit.
//
// Residual index l in [0, n_layers] is the stream entering block l; index
// n_layers is the stream after the last block. An edit at (l, p) rewrites the
// stream at position p right before block l runs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pds::simlab {

struct ToyModelSpec {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int vocab_size = 101;
  std::uint64_t weight_seed = 0;
  int max_len = 64;
  bool final_norm = true;
  int mlp_multiplier = 4;
};

// Throws DataError for non-positive sizes or d_model % n_heads != 0.
void validate(const ToyModelSpec& spec);

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct LayerNormWeights {
  std::vector<double> gain;
  std::vector<double> bias;
  bool operator==(const LayerNormWeights&) const = default;
};

// Linear maps are stored [out x in]: y_i = row_i . x.
struct BlockWeights {
  LayerNormWeights ln1;
  Matrix wq, wk, wv, wo;
  LayerNormWeights ln2;
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  bool operator==(const BlockWeights&) const = default;
};

struct ToyWeights {
  Matrix token_embedding;     // [vocab x d]
  Matrix position_embedding;  // [max_len x d]
  std::vector<BlockWeights> blocks;
  LayerNormWeights final_ln;
  Matrix unembedding;  // [vocab x d]
  bool operator==(const ToyWeights&) const = default;
};

ToyWeights random_weights(const ToyModelSpec& spec);

struct ResidualEdit {
  int layer = 0;
  int position = 0;
  std::function<void(std::span<double>)> apply;
};

struct ForwardPass {
  // residual[l] is [T x d] for l in [0, n_layers].
  std::vector<Matrix> residual;
  Matrix logits;  // [T x vocab]

  std::span<const double> residual_at(int layer, int position) const {
    return residual.at(static_cast<std::size_t>(layer)).row(static_cast<std::size_t>(position));
  }
  std::span<const double> logits_at(int position) const {
    return logits.row(static_cast<std::size_t>(position));
  }
};

class ToyModel {
 public:
  explicit ToyModel(const ToyModelSpec& spec);
  ToyModel(const ToyModelSpec& spec, ToyWeights weights);

  const ToyModelSpec& spec() const { return spec_; }
  const ToyWeights& weights() const { return weights_; }

  // Throws DataError for empty input, out-of-range tokens, sequences longer
  // than max_len, or an edit outside [0, n_layers) x [0, T).
  ForwardPass forward(std::span<const int> tokens, const ResidualEdit* edit = nullptr) const;

 private:
  void run_block(const BlockWeights& w, const Matrix& in, Matrix& out) const;

  ToyModelSpec spec_;
  ToyWeights weights_;
};

ToyModel build_toy_model(const ToyModelSpec& spec);

}  // namespace pds::simlab
