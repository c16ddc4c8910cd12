#pragma once

// Token-level scoring, the verb-only baseline, per-construction breakdowns
// and aggregation over sampled training sets.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gedprobe/annotated.hpp"
#include "gedprobe/summary.hpp"

namespace gedprobe {

struct ConfusionCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    return *this;
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Scores for the ungrammatical (positive) class.
struct PRF {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const PRF&, const PRF&) = default;
};

/// F1 = 2PR/(P+R). A slice with no gold and no predicted positives scores
/// 1.0 throughout; otherwise an empty denominator gives 0.
PRF prf_from_counts(const ConfusionCounts& counts);

/// Micro-averaged over tokens; indices in `mask` are excluded from every count.
PRF f1_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gold,
             std::span<const std::size_t> mask = {});

struct SentencePrediction {
  std::string id;
  std::vector<std::uint8_t> labels;  // 1 = ungrammatical

  friend bool operator==(const SentencePrediction&, const SentencePrediction&) = default;
};

using Predictions = std::vector<SentencePrediction>;

/// Tags every verb position as ungrammatical.
Predictions verb_only_baseline(std::span<const AnnotatedSentence> sentences);

/// Binary gold labels of a sentence.
std::vector<std::uint8_t> gold_labels(const AnnotatedSentence& s);

/// Reads predictions from corpus-format sentences (non-OK labels are positive).
Predictions predictions_from_corpus(std::span<const AnnotatedSentence> predicted);

/// Writes predictions back into corpus format using the gold sentences' tokens.
std::vector<AnnotatedSentence> predictions_to_corpus(const Predictions& predictions,
                                                     std::span<const AnnotatedSentence> gold,
                                                     std::string_view positive_label = kSvaLabel);

inline constexpr std::string_view kNoConstruction = "unspecified";

struct EvalReport {
  PRF overall;
  std::map<std::string, PRF> per_construction;  // keyed by construction name
  std::string probe_id;
  std::string eval_set_id;
};

/// Scores predictions against the evaluation set, honouring each sentence's eval_mask.
/// Throws DataError listing sentence ids without a prediction.
EvalReport evaluate(const Predictions& predictions, std::span<const AnnotatedSentence> eval_set);

struct PRFSummary {
  MeanStd precision;
  MeanStd recall;
  MeanStd f1;
};

struct AggregateReport {
  std::size_t runs = 0;
  PRFSummary overall;
  std::map<std::string, PRFSummary> per_construction;
};

/// Per-cell mean and standard deviation. Reports must cover the same constructions.
AggregateReport aggregate(std::span<const EvalReport> reports, StdMode mode = StdMode::Sample);

}  // namespace gedprobe
