#include "gedprobe/eval.hpp"

#include <algorithm>
#include <unordered_map>

#include "gedprobe/error.hpp"

namespace gedprobe {

PRF prf_from_counts(const ConfusionCounts& c) {
  PRF out;
  out.counts = c;
  if (c.true_positives + c.false_positives + c.false_negatives == 0) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  const auto tp = static_cast<double>(c.true_positives);
  if (c.true_positives + c.false_positives > 0) {
    out.precision = tp / static_cast<double>(c.true_positives + c.false_positives);
  }
  if (c.true_positives + c.false_negatives > 0) {
    out.recall = tp / static_cast<double>(c.true_positives + c.false_negatives);
  }
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

namespace {

ConfusionCounts count(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gold,
                      std::span<const std::size_t> mask) {
  if (pred.size() != gold.size()) {
    throw DataError("prediction length " + std::to_string(pred.size()) + " differs from gold length " +
                    std::to_string(gold.size()));
  }
  std::vector<bool> skip(pred.size(), false);
  for (auto i : mask) {
    if (i >= pred.size()) {
      throw DataError("mask index " + std::to_string(i) + " out of range");
    }
    skip[i] = true;
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (skip[i]) {
      continue;
    }
    const bool p = pred[i] != 0;
    const bool g = gold[i] != 0;
    c.true_positives += p && g;
    c.false_positives += p && !g;
    c.false_negatives += !p && g;
  }
  return c;
}

}  // namespace

PRF f1_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gold,
             std::span<const std::size_t> mask) {
  return prf_from_counts(count(pred, gold, mask));
}

Predictions verb_only_baseline(std::span<const AnnotatedSentence> sentences) {
  Predictions out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (!s.verb_positions) {
      throw DataError("sentence " + s.source_id + " has no verb positions");
    }
    SentencePrediction p{s.source_id, std::vector<std::uint8_t>(s.tokens.size(), 0)};
    for (auto i : *s.verb_positions) {
      p.labels.at(i) = 1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::uint8_t> gold_labels(const AnnotatedSentence& s) {
  std::vector<std::uint8_t> out(s.labels.size());
  std::transform(s.labels.begin(), s.labels.end(), out.begin(),
                 [](const std::string& l) { return is_error_label(l) ? 1 : 0; });
  return out;
}

Predictions predictions_from_corpus(std::span<const AnnotatedSentence> predicted) {
  Predictions out;
  out.reserve(predicted.size());
  for (const auto& s : predicted) {
    out.push_back({s.source_id, gold_labels(s)});
  }
  return out;
}

std::vector<AnnotatedSentence> predictions_to_corpus(const Predictions& predictions,
                                                     std::span<const AnnotatedSentence> gold,
                                                     std::string_view positive_label) {
  std::unordered_map<std::string, const AnnotatedSentence*> by_id;
  for (const auto& g : gold) {
    by_id.emplace(g.source_id, &g);
  }
  std::vector<AnnotatedSentence> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      throw DataError("prediction for unknown sentence " + p.id);
    }
    AnnotatedSentence s = *it->second;
    if (p.labels.size() != s.tokens.size()) {
      throw DataError("prediction for " + p.id + " has the wrong length");
    }
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      s.labels[i] = p.labels[i] != 0 ? std::string(positive_label) : std::string(kOkLabel);
    }
    out.push_back(std::move(s));
  }
  return out;
}

EvalReport evaluate(const Predictions& predictions, std::span<const AnnotatedSentence> eval_set) {
  std::unordered_map<std::string_view, const SentencePrediction*> by_id;
  for (const auto& p : predictions) {
    by_id.emplace(p.id, &p);
  }
  std::vector<std::string> missing;
  std::map<std::string, ConfusionCounts> per;
  ConfusionCounts overall;
  for (const auto& s : eval_set) {
    const auto it = by_id.find(s.source_id);
    if (it == by_id.end()) {
      missing.push_back(s.source_id);
      continue;
    }
    const auto gold = gold_labels(s);
    const auto mask = s.eval_mask ? std::span<const std::size_t>(*s.eval_mask) : std::span<const std::size_t>{};
    const auto c = count(it->second->labels, gold, mask);
    overall += c;
    per[s.construction ? std::string(construction_name(*s.construction)) : std::string(kNoConstruction)] += c;
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) {
      list += (i ? ", " : "") + missing[i];
    }
    if (missing.size() > 10) {
      list += ", ... (" + std::to_string(missing.size()) + " total)";
    }
    throw DataError("no predictions for sentences: " + list);
  }
  EvalReport report;
  report.overall = prf_from_counts(overall);
  for (const auto& [name, c] : per) {
    report.per_construction.emplace(name, prf_from_counts(c));
  }
  return report;
}

namespace {

PRFSummary summarize(const std::vector<const PRF*>& cells, StdMode mode) {
  std::vector<double> p;
  std::vector<double> r;
  std::vector<double> f;
  for (const auto* c : cells) {
    p.push_back(c->precision);
    r.push_back(c->recall);
    f.push_back(c->f1);
  }
  return {mean_std(p, mode), mean_std(r, mode), mean_std(f, mode)};
}

}  // namespace

AggregateReport aggregate(std::span<const EvalReport> reports, StdMode mode) {
  AggregateReport out;
  out.runs = reports.size();
  if (reports.empty()) {
    return out;
  }
  std::vector<const PRF*> overall;
  for (const auto& r : reports) {
    if (r.per_construction.size() != reports.front().per_construction.size() ||
        !std::equal(r.per_construction.begin(), r.per_construction.end(), reports.front().per_construction.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw DataError("reports cover different constructions and cannot be aggregated");
    }
    overall.push_back(&r.overall);
  }
  out.overall = summarize(overall, mode);
  for (const auto& [name, unused] : reports.front().per_construction) {
    std::vector<const PRF*> cells;
    for (const auto& r : reports) {
      cells.push_back(&r.per_construction.at(name));
    }
    out.per_construction.emplace(name, summarize(cells, mode));
  }
  return out;
}

}  // namespace gedprobe
