#include "gedprobe/probe.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gedprobe/error.hpp"
#include "gedprobe/eval.hpp"
#include "gedprobe/rng.hpp"

namespace gedprobe {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

template <typename T>
double margin(const LinearProbe& p, std::span<const T> x) {
  double z = p.bias;
  for (std::size_t k = 0; k < x.size(); ++k) {
    z += p.weights[k] * static_cast<double>(x[k]);
  }
  return z;
}

double mean_loss(const LinearProbe& p, const LabeledVectors& data, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = margin(p, data.row(i));
    loss += data.y[i] != 0 ? softplus(-z) : softplus(z);
  }
  loss /= static_cast<double>(data.size());
  double sq = 0.0;
  for (double w : p.weights) {
    sq += w * w;
  }
  return loss + 0.5 * l2 * sq;
}

double f1_of(const LinearProbe& p, const LabeledVectors& data) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool pred = probability(p, data.row(i)) >= 0.5;
    const bool gold = data.y[i] != 0;
    c.true_positives += pred && gold;
    c.false_positives += pred && !gold;
    c.false_negatives += !pred && gold;
  }
  return prf_from_counts(c).f1;
}

}  // namespace

void LabeledVectors::append(std::span<const float> v, bool label) {
  if (dim == 0 && y.empty()) {
    dim = v.size();
  }
  if (v.size() != dim) {
    throw std::invalid_argument("vector of dimension " + std::to_string(v.size()) + " appended to set of dimension " +
                                std::to_string(dim));
  }
  x.insert(x.end(), v.begin(), v.end());
  y.push_back(label ? 1 : 0);
}

LabeledVectors collect_vectors(const EmbeddingStore& store, std::span<const AnnotatedSentence> sentences, int layer) {
  LabeledVectors out;
  out.dim = store.hidden_dim();
  for (const auto& s : sentences) {
    const auto m = word_vectors(store, s.source_id, layer);
    if (m.rows() != s.tokens.size()) {
      throw IntegrityError("sentence " + s.source_id + " has " + std::to_string(s.tokens.size()) +
                           " tokens but the store aligns " + std::to_string(m.rows()) + " words");
    }
    for (std::size_t w = 0; w < m.rows(); ++w) {
      out.append(m.row(w), is_error_label(s.labels[w]));
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) {
    throw std::invalid_argument("max_epochs must be positive");
  }
  if (patience < 1 || patience >= max_epochs) {
    throw std::invalid_argument("patience must be in [1, max_epochs)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (batch_size == 0) {
    throw std::invalid_argument("batch_size must be positive");
  }
  if (l2_penalty < 0.0) {
    throw std::invalid_argument("l2_penalty must be non-negative");
  }
}

double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double probability(const LinearProbe& probe, std::span<const double> x) {
  if (x.size() != probe.dim()) {
    throw std::invalid_argument("probe expects dimension " + std::to_string(probe.dim()) + ", got " +
                                std::to_string(x.size()));
  }
  return logistic(margin(probe, x));
}

double probability(const LinearProbe& probe, std::span<const float> x) {
  if (x.size() != probe.dim()) {
    throw std::invalid_argument("probe expects dimension " + std::to_string(probe.dim()) + ", got " +
                                std::to_string(x.size()));
  }
  return logistic(margin(probe, x));
}

Prediction predict(const LinearProbe& probe, const LabeledVectors& vectors, double threshold) {
  if (vectors.size() > 0 && vectors.dim != probe.dim()) {
    throw std::invalid_argument("probe expects dimension " + std::to_string(probe.dim()) + ", got " +
                                std::to_string(vectors.dim));
  }
  Prediction out;
  out.labels.reserve(vectors.size());
  out.probabilities.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double p = probability(probe, vectors.row(i));
    out.probabilities.push_back(p);
    out.labels.push_back(p >= threshold ? 1 : 0);
  }
  return out;
}

LossGrad loss_and_grad(const LinearProbe& probe, const LabeledVectors& batch, double l2_penalty,
                       std::span<const std::size_t> rows) {
  const std::size_t n = rows.empty() ? batch.size() : rows.size();
  if (n == 0) {
    throw std::invalid_argument("loss_and_grad needs a non-empty batch");
  }
  if (batch.dim != probe.dim()) {
    throw std::invalid_argument("batch dimension does not match probe");
  }
  const std::size_t d = probe.dim();
  LossGrad out;
  out.grad.assign(d + 1, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = rows.empty() ? r : rows[r];
    const auto x = batch.row(i);
    const double z = margin(probe, x);
    const bool y = batch.y[i] != 0;
    out.loss += y ? softplus(-z) : softplus(z);
    const double residual = logistic(z) - (y ? 1.0 : 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      out.grad[k] += residual * static_cast<double>(x[k]);
    }
    out.grad[d] += residual;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto& g : out.grad) {
    g *= inv;
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    sq += probe.weights[k] * probe.weights[k];
    out.grad[k] += l2_penalty * probe.weights[k];
  }
  out.loss += 0.5 * l2_penalty * sq;
  return out;
}

TrainResult train(const LabeledVectors& train_set, const LabeledVectors& dev_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) {
    throw DataError("training set is empty");
  }
  if (dev_set.size() == 0) {
    throw DataError("dev set is empty");
  }
  if (train_set.dim != dev_set.dim) {
    throw DataError("train dimension " + std::to_string(train_set.dim) + " differs from dev dimension " +
                    std::to_string(dev_set.dim));
  }

  TrainResult result;
  std::size_t positives = 0;
  for (auto y : train_set.y) {
    positives += y;
  }
  if (positives == 0 || positives == train_set.size()) {
    result.warnings.push_back("degenerate training data: only one class present");
  }

  LinearProbe current;
  current.weights.assign(train_set.dim, 0.0);
  LinearProbe best = current;
  double best_score = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  Rng rng(cfg.seed);
  std::vector<std::size_t> batch;
  batch.reserve(cfg.batch_size);
  int epoch = 1;
  for (; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = rng.permutation(train_set.size());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto lg = loss_and_grad(current, train_set, cfg.l2_penalty, batch);
      for (std::size_t k = 0; k < current.weights.size(); ++k) {
        current.weights[k] -= cfg.learning_rate * lg.grad[k];
      }
      current.bias -= cfg.learning_rate * lg.grad.back();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mean_loss(current, train_set, cfg.l2_penalty);
    rec.dev_loss = mean_loss(current, dev_set, cfg.l2_penalty);
    rec.dev_f1 = f1_of(current, dev_set);
    result.trace.push_back(rec);

    const double score = cfg.stopping_metric == StoppingMetric::DevF1 ? rec.dev_f1 : -rec.dev_loss;
    if (score > best_score) {
      best_score = score;
      best_epoch = epoch;
      best = current;
    } else if (epoch - best_epoch >= cfg.patience) {
      break;
    }
  }

  result.probe = std::move(best);
  result.probe.provenance.seed = cfg.seed;
  result.probe.provenance.epochs_run = static_cast<int>(result.trace.size());
  result.probe.provenance.best_epoch = best_epoch;
  return result;
}

std::string probe_to_json(const LinearProbe& probe) {
  nlohmann::json j;
  j["model"] = probe.model;
  j["layer"] = probe.layer;
  j["d"] = probe.dim();
  j["weights"] = probe.weights;
  j["bias"] = probe.bias;
  j["train_provenance"] = {
      {"corpus_id", probe.provenance.corpus_id},
      {"seed", probe.provenance.seed},
      {"epochs_run", probe.provenance.epochs_run},
      {"best_epoch", probe.provenance.best_epoch},
  };
  return j.dump();
}

LinearProbe probe_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LinearProbe p;
    p.model = j.at("model").get<std::string>();
    p.layer = j.at("layer").get<int>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    if (j.at("d").get<std::size_t>() != p.weights.size()) {
      throw DataError("probe declares d=" + j.at("d").dump() + " but carries " + std::to_string(p.weights.size()) +
                      " weights");
    }
    if (auto it = j.find("train_provenance"); it != j.end()) {
      p.provenance.corpus_id = it->value("corpus_id", "");
      p.provenance.seed = it->value("seed", std::uint64_t{0});
      p.provenance.epochs_run = it->value("epochs_run", 0);
      p.provenance.best_epoch = it->value("best_epoch", 0);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed probe JSON: ") + e.what());
  }
}

void save_probe(const LinearProbe& probe, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write probe " + path.string());
  }
  out << probe_to_json(probe) << '\n';
}

LinearProbe load_probe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open probe " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return probe_from_json(buf.str());
}

}  // namespace gedprobe
