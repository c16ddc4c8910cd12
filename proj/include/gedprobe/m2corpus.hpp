#pragma once

// M2 (ERRANT) annotation parsing, selective correction, sampling and
// verb-holdout filtering.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gedprobe/annotated.hpp"

namespace gedprobe {

struct Edit {
  std::size_t span_start = 0;
  std::size_t span_end = 0;  // exclusive; equal to span_start for insertions
  std::vector<std::string> replacement;
  std::string error_type;  // "R:VERB:SVA", "M:DET", "UNK", ...
  int annotator_id = 0;

  bool is_insertion() const { return span_start == span_end; }

  friend bool operator==(const Edit&, const Edit&) = default;
};

struct M2Entry {
  std::string id;
  std::vector<std::string> source_tokens;
  std::vector<Edit> edits;  // sorted by (span_start, span_end), non-overlapping
};

struct M2Warning {
  std::size_t line = 0;
  std::string message;
};

struct M2ParseResult {
  std::vector<M2Entry> entries;
  std::vector<M2Warning> warnings;
};

struct M2Options {
  int annotator = 0;
  /// Entry ids are `<id_prefix><ordinal>`.
  std::string id_prefix = "s";
};

/// Parses blank-line separated S/A blocks. noop edits are dropped; an edit
/// overlapping an earlier edit of the selected annotator is dropped with a
/// warning. Malformed A-lines throw ParseError.
M2ParseResult parse_m2(std::string_view text, const M2Options& options = {});
M2ParseResult read_m2(const std::filesystem::path& path, const M2Options& options = {});

/// True when the two edits touch the same source tokens, or insert at the same point.
bool edits_overlap(const Edit& a, const Edit& b);

/// Applies `selected` (sorted, non-overlapping) to the source, right to left.
/// Throws DataError on overlapping or unsorted selections.
std::vector<std::string> apply_edits(const M2Entry& entry, std::span<const Edit> selected);

/// Full output of selective correction, including sentences with no remaining error.
struct CorrectionResult {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  /// Retained edits with spans remapped into `tokens`.
  std::vector<Edit> retained;
};

CorrectionResult correct_except(const M2Entry& entry, const std::set<std::string>& target_types);

/// Applies every edit whose type is not a target, labels the remaining
/// target errors, and returns nothing when no target edit remains.
std::optional<AnnotatedSentence> selective_correct(const M2Entry& entry, const std::set<std::string>& target_types);

enum class Provenance { WiFce, WikEd, Synthetic };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

struct CorpusSplit {
  std::vector<AnnotatedSentence> sentences;
  Provenance provenance = Provenance::Synthetic;
  std::optional<std::uint64_t> sample_seed;
};

/// Runs selective correction over every entry and keeps the survivors.
CorpusSplit process_entries(std::span<const M2Entry> entries, const std::set<std::string>& target_types,
                            Provenance provenance);

/// k samples of `size` sentences drawn without replacement; sample i uses seed + i.
std::vector<CorpusSplit> sample_training_sets(const CorpusSplit& corpus, std::size_t k, std::size_t size,
                                              std::uint64_t seed);

/// Draws `dev_size` sentences for validation; the rest stay in the training pool.
struct PoolSplit {
  CorpusSplit dev;
  CorpusSplit pool;
};
PoolSplit split_dev(const CorpusSplit& corpus, std::size_t dev_size, std::uint64_t seed);

/// Drops every sentence containing a (lowercased) token in held_out \ exceptions.
CorpusSplit verb_holdout(const CorpusSplit& corpus, const std::set<std::string>& held_out,
                         const std::set<std::string>& exceptions);

struct CorpusStats {
  std::size_t sentence_count = 0;
  double mean_length = 0.0;
  double std_length = 0.0;
  double mean_errors = 0.0;  // error spans per sentence
  double std_errors = 0.0;
};

/// Population moments over sentence lengths and per-sentence error spans.
CorpusStats corpus_stats(std::span<const AnnotatedSentence> sentences);

}  // namespace gedprobe
