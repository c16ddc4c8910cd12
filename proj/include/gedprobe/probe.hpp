#pragma once

// Binary linear probes (logistic regression) over word vectors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gedprobe/annotated.hpp"
#include "gedprobe/embedstore.hpp"

namespace gedprobe {

/// Row-major design matrix with binary labels (1 = ungrammatical). Stored as
/// float32 like the embedding store; all arithmetic on it is float64.
struct LabeledVectors {
  std::size_t dim = 0;
  std::vector<float> x;
  std::vector<std::uint8_t> y;

  std::size_t size() const { return y.size(); }
  std::span<const float> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void append(std::span<const float> v, bool label);
};

/// Word vectors of every token of `sentences` at `layer`; labels from the gold tags.
/// Throws IntegrityError when a sentence's word count disagrees with the store.
LabeledVectors collect_vectors(const EmbeddingStore& store, std::span<const AnnotatedSentence> sentences, int layer);

enum class StoppingMetric { DevF1, DevLoss };

struct TrainConfig {
  int max_epochs = 50;
  int patience = 10;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double l2_penalty = 1e-4;
  StoppingMetric stopping_metric = StoppingMetric::DevF1;

  void validate() const;
};

struct TrainProvenance {
  std::string corpus_id;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
};

struct LinearProbe {
  std::string model;
  int layer = 0;
  std::vector<double> weights;
  double bias = 0.0;
  TrainProvenance provenance;

  std::size_t dim() const { return weights.size(); }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_f1 = 0.0;
};

struct TrainResult {
  LinearProbe probe;
  std::vector<EpochRecord> trace;
  std::vector<std::string> warnings;
};

/// Mini-batch gradient descent on mean cross-entropy + (l2/2)|w|^2 with early
/// stopping on the dev set; the best epoch's parameters are returned.
TrainResult train(const LabeledVectors& train_set, const LabeledVectors& dev_set, const TrainConfig& cfg);

double logistic(double z);

/// logistic(w.x + b)
double probability(const LinearProbe& probe, std::span<const double> x);
double probability(const LinearProbe& probe, std::span<const float> x);

struct Prediction {
  std::vector<std::uint8_t> labels;
  std::vector<double> probabilities;
};

Prediction predict(const LinearProbe& probe, const LabeledVectors& vectors, double threshold = 0.5);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d weight partials followed by the bias partial
};

/// Mean cross-entropy over `rows` (all rows when empty) plus (l2/2)|w|^2.
LossGrad loss_and_grad(const LinearProbe& probe, const LabeledVectors& batch, double l2_penalty,
                       std::span<const std::size_t> rows = {});

std::string probe_to_json(const LinearProbe& probe);
LinearProbe probe_from_json(std::string_view text);
void save_probe(const LinearProbe& probe, const std::filesystem::path& path);
LinearProbe load_probe(const std::filesystem::path& path);

}  // namespace gedprobe
