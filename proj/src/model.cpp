#include "textattr/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "textattr/errors.hpp"
#include "textattr/rng.hpp"

namespace textattr {

namespace {

template <typename Mat>
void fill_uniform(Mat& m, double bound, Rng& rng) {
  // Row-by-row so the draw order is part of the format.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform_real(-bound, bound);
    }
  }
}

void draw_head(TextClassifier& model, Rng& rng) {
  const double inv_d = 1.0 / std::sqrt(static_cast<double>(model.arch.embed_dim));
  const double inv_h =
      1.0 / std::sqrt(static_cast<double>(model.arch.hidden_dim));
  fill_uniform(model.w1, inv_d, rng);
  fill_uniform(model.b1, inv_d, rng);
  fill_uniform(model.w2, inv_h, rng);
  fill_uniform(model.b2, inv_h, rng);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace

TextClassifier init_model(const ModelArch& arch, std::uint64_t seed) {
  if (arch.vocab_size < 2 || arch.embed_dim < 1 || arch.hidden_dim < 1 ||
      arch.class_count < 2) {
    throw ConfigError("model dimensions out of range");
  }
  TextClassifier model;
  model.arch = arch;
  model.init_seed = seed;
  model.embedding.resize(arch.vocab_size, arch.embed_dim);
  model.w1.resize(arch.embed_dim, arch.hidden_dim);
  model.b1.resize(arch.hidden_dim);
  model.w2.resize(arch.hidden_dim, arch.class_count);
  model.b2.resize(arch.class_count);
  Rng rng(seed);
  fill_uniform(model.embedding,
               1.0 / std::sqrt(static_cast<double>(arch.embed_dim)), rng);
  draw_head(model, rng);
  return model;
}

TextClassifier randomize_head(const TextClassifier& model, std::uint64_t seed) {
  TextClassifier out = model;
  Rng rng(seed);
  draw_head(out, rng);
  return out;
}

Eigen::MatrixXd embed_tokens(const TextClassifier& model,
                             std::span<const int> tokens) {
  if (tokens.empty()) throw SchemaError("empty token sequence");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(tokens.size()),
                       model.arch.embed_dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    int id = tokens[t];
    if (id < 0 || id >= model.arch.vocab_size) {
      throw SchemaError("token id " + std::to_string(id) +
                        " outside the vocabulary");
    }
    rows.row(static_cast<Eigen::Index>(t)) = model.embedding.row(id);
  }
  return rows;
}

Eigen::VectorXd pooled_embedding(const TextClassifier& model,
                                 std::span<const int> tokens) {
  if (tokens.empty()) throw SchemaError("empty token sequence");
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(model.arch.embed_dim);
  for (int id : tokens) {
    if (id < 0 || id >= model.arch.vocab_size) {
      throw SchemaError("token id " + std::to_string(id) +
                        " outside the vocabulary");
    }
    pooled += model.embedding.row(id).transpose();
  }
  return pooled / static_cast<double>(tokens.size());
}

Prediction forward_embedded(const TextClassifier& model,
                            const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw SchemaError("empty token sequence");
  if (rows.cols() != model.arch.embed_dim) {
    throw SchemaError("embedded input has wrong width");
  }
  Eigen::VectorXd pooled =
      rows.colwise().mean().transpose();
  Eigen::VectorXd pre = model.w1.transpose() * pooled + model.b1;
  Eigen::VectorXd hidden = pre.cwiseMax(0.0);
  Prediction out;
  out.logits = model.w2.transpose() * hidden + model.b2;
  out.probs = softmax(out.logits);
  out.predicted = argmax_lowest(out.logits);
  return out;
}

Prediction forward(const TextClassifier& model, std::span<const int> tokens) {
  return forward_embedded(model, embed_tokens(model, tokens));
}

double class_score(const TextClassifier& model, std::span<const int> tokens,
                   int class_index) {
  return forward(model, tokens).logits(class_index);
}

Eigen::MatrixXd embedding_gradient(const TextClassifier& model,
                                   const Eigen::MatrixXd& rows,
                                   int class_index) {
  if (class_index < 0 || class_index >= model.arch.class_count) {
    throw ConfigError("class index out of range");
  }
  if (rows.rows() == 0) throw SchemaError("empty token sequence");
  const auto T = rows.rows();
  Eigen::VectorXd pooled = rows.colwise().mean().transpose();
  Eigen::VectorXd pre = model.w1.transpose() * pooled + model.b1;
  // ReLU subgradient at exactly zero is taken as zero.
  Eigen::VectorXd gate = ((pre.array() > 0.0).cast<double>() *
                          model.w2.col(class_index).array())
                             .matrix();
  Eigen::VectorXd d_pooled = model.w1 * gate;
  Eigen::MatrixXd grad(T, model.arch.embed_dim);
  Eigen::RowVectorXd per_row = d_pooled.transpose() / static_cast<double>(T);
  for (Eigen::Index t = 0; t < T; ++t) grad.row(t) = per_row;
  return grad;
}

std::vector<int> mask_tokens(std::span<const int> tokens,
                             const std::vector<int>& positions) {
  std::vector<int> out(tokens.begin(), tokens.end());
  for (int p : positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= out.size()) {
      throw ConfigError("mask position " + std::to_string(p) +
                        " outside the sequence");
    }
    out[static_cast<std::size_t>(p)] = Vocab::unk_id;
  }
  return out;
}

double accuracy(const TextClassifier& model, const Dataset& data,
                const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ConfigError("accuracy over an empty split");
  std::size_t hits = 0;
  for (std::size_t i : indices) {
    const Document& doc = data.documents[i];
    if (forward(model, doc.tokens).predicted == doc.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

namespace {

struct Gradients {
  Eigen::MatrixXd embedding, w1, w2;
  Eigen::VectorXd b1, b2;

  explicit Gradients(const ModelArch& a)
      : embedding(Eigen::MatrixXd::Zero(a.vocab_size, a.embed_dim)),
        w1(Eigen::MatrixXd::Zero(a.embed_dim, a.hidden_dim)),
        w2(Eigen::MatrixXd::Zero(a.hidden_dim, a.class_count)),
        b1(Eigen::VectorXd::Zero(a.hidden_dim)),
        b2(Eigen::VectorXd::Zero(a.class_count)) {}

  void zero() {
    embedding.setZero();
    w1.setZero();
    w2.setZero();
    b1.setZero();
    b2.setZero();
  }
};

struct AdamState {
  Gradients m, v;
  long step = 0;
  explicit AdamState(const ModelArch& a) : m(a), v(a) {}
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

template <typename Mat>
void adamw_update(Mat& param, const Mat& grad, Mat& m, Mat& v, double lr,
                  double weight_decay, long step) {
  m.array() = kBeta1 * m.array() + (1.0 - kBeta1) * grad.array();
  v.array() = kBeta2 * v.array() + (1.0 - kBeta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  // Decoupled weight decay: the decay term bypasses the moment estimates.
  param.array() -= lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + kEps) +
                         weight_decay * param.array());
}

// Cross-entropy loss plus parameter gradients for one document, accumulated
// into `g`. Returns the loss.
double backprop_example(const TextClassifier& model, const Document& doc,
                        Gradients& g) {
  Eigen::VectorXd pooled = pooled_embedding(model, doc.tokens);
  Eigen::VectorXd pre = model.w1.transpose() * pooled + model.b1;
  Eigen::VectorXd hidden = pre.cwiseMax(0.0);
  Eigen::VectorXd logits = model.w2.transpose() * hidden + model.b2;
  Eigen::VectorXd probs = softmax(logits);
  double loss = -std::log(std::max(probs(doc.label), 1e-300));

  Eigen::VectorXd dlogits = probs;
  dlogits(doc.label) -= 1.0;
  g.w2 += hidden * dlogits.transpose();
  g.b2 += dlogits;
  Eigen::VectorXd dhidden = model.w2 * dlogits;
  Eigen::VectorXd dpre =
      (pre.array() > 0.0).select(dhidden, Eigen::VectorXd::Zero(pre.size()));
  g.w1 += pooled * dpre.transpose();
  g.b1 += dpre;
  Eigen::VectorXd dpooled = model.w1 * dpre;
  const double inv_t = 1.0 / static_cast<double>(doc.tokens.size());
  for (int id : doc.tokens) {
    g.embedding.row(id) += inv_t * dpooled.transpose();
  }
  return loss;
}

bool params_finite(const TextClassifier& m) {
  return m.embedding.allFinite() && m.w1.allFinite() && m.b1.allFinite() &&
         m.w2.allFinite() && m.b2.allFinite();
}

}  // namespace

std::pair<TextClassifier, TrainReport> train(const TextClassifier& init,
                                             const Dataset& data,
                                             const TrainConfig& config) {
  if (config.lr_grid.empty()) throw ConfigError("learning-rate grid is empty");
  if (config.max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (config.patience < 1) throw ConfigError("patience must be positive");
  if (config.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (data.train_indices.empty()) throw ConfigError("train split is empty");
  if (data.val_indices.empty()) throw ConfigError("validation split is empty");

  TrainReport report;
  TextClassifier best_model = init;
  double best_overall = -1.0;

  for (std::size_t gi = 0; gi < config.lr_grid.size(); ++gi) {
    const double lr = config.lr_grid[gi];
    GridPointReport point;
    point.lr = lr;

    TextClassifier model = init;
    AdamState adam(init.arch);
    Gradients grads(init.arch);
    // Each grid point replays the same batch-order stream, so models that
    // share a shuffle seed see identical batches regardless of their init.
    Rng shuffle_rng(config.shuffle_seed);
    std::vector<std::size_t> order = data.train_indices;

    TextClassifier snapshot = model;
    double best_val = -1.0;
    int stale_epochs = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(config.batch_size)) {
        std::size_t stop = std::min(
            order.size(), start + static_cast<std::size_t>(config.batch_size));
        grads.zero();
        double batch_loss = 0.0;
        for (std::size_t k = start; k < stop; ++k) {
          batch_loss += backprop_example(model, data.documents[order[k]], grads);
        }
        const double scale = 1.0 / static_cast<double>(stop - start);
        grads.embedding *= scale;
        grads.w1 *= scale;
        grads.b1 *= scale;
        grads.w2 *= scale;
        grads.b2 *= scale;
        epoch_loss += batch_loss * scale;

        ++adam.step;
        adamw_update(model.embedding, grads.embedding, adam.m.embedding,
                     adam.v.embedding, lr, config.weight_decay, adam.step);
        adamw_update(model.w1, grads.w1, adam.m.w1, adam.v.w1, lr,
                     config.weight_decay, adam.step);
        adamw_update(model.b1, grads.b1, adam.m.b1, adam.v.b1, lr,
                     config.weight_decay, adam.step);
        adamw_update(model.w2, grads.w2, adam.m.w2, adam.v.w2, lr,
                     config.weight_decay, adam.step);
        adamw_update(model.b2, grads.b2, adam.m.b2, adam.v.b2, lr,
                     config.weight_decay, adam.step);
      }
      const std::size_t batches =
          (order.size() + static_cast<std::size_t>(config.batch_size) - 1) /
          static_cast<std::size_t>(config.batch_size);
      epoch_loss /= static_cast<double>(batches);

      if (!std::isfinite(epoch_loss) || !params_finite(model)) {
        point.diverged = true;
        break;
      }

      EpochStats stats;
      stats.train_loss = epoch_loss;
      stats.val_accuracy = accuracy(model, data, data.val_indices);
      point.epochs.push_back(stats);

      if (stats.val_accuracy > best_val) {
        best_val = stats.val_accuracy;
        snapshot = model;
        point.best_epoch = epoch;
        stale_epochs = 0;
      } else {
        ++stale_epochs;
      }
      if (stale_epochs >= config.patience) break;
    }

    point.best_val_accuracy = best_val;
    report.grid.push_back(point);

    if (!point.diverged || point.best_epoch > 0) {
      if (best_val > best_overall) {
        best_overall = best_val;
        best_model = snapshot;
        report.chosen_index = static_cast<int>(gi);
        report.chosen_lr = lr;
      }
    }
  }

  if (report.chosen_index < 0) {
    throw NumericalError("every learning rate diverged before one epoch");
  }
  report.best_val_accuracy = best_overall;
  return {std::move(best_model), std::move(report)};
}

namespace {

constexpr char kMagic[8] = {'T', 'X', 'A', 'T', 'T', 'R', 'M', '1'};

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw SchemaError("checkpoint truncated");
  }
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
  write_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void read_matrix(std::ifstream& in, Eigen::MatrixXd& m) {
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void read_vector(std::ifstream& in, Eigen::VectorXd& v) {
  read_bytes(in, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const TextClassifier& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_bytes(out, kMagic, sizeof(kMagic));
  std::uint32_t dims[4] = {static_cast<std::uint32_t>(model.arch.vocab_size),
                           static_cast<std::uint32_t>(model.arch.embed_dim),
                           static_cast<std::uint32_t>(model.arch.hidden_dim),
                           static_cast<std::uint32_t>(model.arch.class_count)};
  write_bytes(out, dims, sizeof(dims));
  write_bytes(out, &model.init_seed, sizeof(model.init_seed));
  write_matrix(out, model.embedding);
  write_matrix(out, model.w1);
  write_vector(out, model.b1);
  write_matrix(out, model.w2);
  write_vector(out, model.b2);
  if (!out) throw IoError("write failed: " + path);
}

TextClassifier load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  read_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SchemaError(path + " is not a model checkpoint");
  }
  std::uint32_t dims[4];
  read_bytes(in, dims, sizeof(dims));
  TextClassifier model;
  model.arch.vocab_size = static_cast<int>(dims[0]);
  model.arch.embed_dim = static_cast<int>(dims[1]);
  model.arch.hidden_dim = static_cast<int>(dims[2]);
  model.arch.class_count = static_cast<int>(dims[3]);
  read_bytes(in, &model.init_seed, sizeof(model.init_seed));
  model.embedding.resize(model.arch.vocab_size, model.arch.embed_dim);
  model.w1.resize(model.arch.embed_dim, model.arch.hidden_dim);
  model.b1.resize(model.arch.hidden_dim);
  model.w2.resize(model.arch.hidden_dim, model.arch.class_count);
  model.b2.resize(model.arch.class_count);
  read_matrix(in, model.embedding);
  read_matrix(in, model.w1);
  read_vector(in, model.b1);
  read_matrix(in, model.w2);
  read_vector(in, model.b2);
  return model;
}

}  // namespace textattr
