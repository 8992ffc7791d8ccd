#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "textattr/corpus.hpp"

namespace textattr {

struct ModelArch {
  int vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 64;
  int class_count = 2;
};

// Mean-pooled bag-of-embeddings encoder with a one-hidden-layer ReLU head.
//   pooled = mean_t E[token_t]
//   logits = W2' relu(W1' pooled + b1) + b2
struct TextClassifier {
  ModelArch arch;
  Eigen::MatrixXd embedding;  // V x d
  Eigen::MatrixXd w1;         // d x h
  Eigen::VectorXd b1;         // h
  Eigen::MatrixXd w2;         // h x K
  Eigen::VectorXd b2;         // K
  std::uint64_t init_seed = 0;
};

struct Prediction {
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
  int predicted = 0;  // argmax; ties break to the lowest class index
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; draw order is fixed
// (embedding, w1, b1, w2, b2) so seeds are reproducible.
TextClassifier init_model(const ModelArch& arch, std::uint64_t seed);

// Fresh head (w1, b1, w2, b2) from the given seed, embedding kept.
TextClassifier randomize_head(const TextClassifier& model, std::uint64_t seed);

Eigen::VectorXd pooled_embedding(const TextClassifier& model,
                                 std::span<const int> tokens);

// Embedding rows for a token sequence, one row per position (T x d).
Eigen::MatrixXd embed_tokens(const TextClassifier& model,
                             std::span<const int> tokens);

Prediction forward(const TextClassifier& model, std::span<const int> tokens);

// Same head applied to already-embedded rows; lets callers run interpolated
// points that correspond to no real token.
Prediction forward_embedded(const TextClassifier& model,
                            const Eigen::MatrixXd& rows);

// Logit of one class, the scalar that attribution methods explain.
double class_score(const TextClassifier& model, std::span<const int> tokens,
                   int class_index);

// d logit[class] / d rows, evaluated at the given embedded input (T x d).
// Mean pooling spreads the pooled gradient evenly across positions.
Eigen::MatrixXd embedding_gradient(const TextClassifier& model,
                                   const Eigen::MatrixXd& rows,
                                   int class_index);

// Copy with the listed token positions replaced by the unknown-token id.
std::vector<int> mask_tokens(std::span<const int> tokens,
                             const std::vector<int>& positions);

struct TrainConfig {
  std::vector<double> lr_grid = {1e-2, 1e-3, 1e-4, 1e-5};
  int max_epochs = 25;
  int patience = 5;  // epochs without a strict val-accuracy improvement
  int batch_size = 32;
  double weight_decay = 0.01;
  std::uint64_t shuffle_seed = 0;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct GridPointReport {
  double lr = 0.0;
  std::vector<EpochStats> epochs;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;  // 1-based; -1 when diverged before finishing an epoch
  bool diverged = false;
};

struct TrainReport {
  std::vector<GridPointReport> grid;
  int chosen_index = -1;
  double chosen_lr = 0.0;
  double best_val_accuracy = 0.0;
};

// Grid search over lr_grid from the same initial weights. Each grid point
// restarts the batch-order stream from shuffle_seed, trains with AdamW and
// early stopping, and snapshots the epoch with the best validation accuracy.
// Returns the best snapshot across the grid (ties keep the earlier entry).
std::pair<TextClassifier, TrainReport> train(const TextClassifier& init,
                                             const Dataset& data,
                                             const TrainConfig& config);

double accuracy(const TextClassifier& model, const Dataset& data,
                const std::vector<std::size_t>& indices);

void save_checkpoint(const std::string& path, const TextClassifier& model);
TextClassifier load_checkpoint(const std::string& path);

}  // namespace textattr
