#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gedprobe {

inline constexpr std::string_view kOkLabel = "OK";
inline constexpr std::string_view kSvaLabel = "R:VERB:SVA";

/// The ten syntactic templates of the agreement stimuli.
enum class Construction {
  SimpleAgreement,
  SententialComplement,
  AcrossPrepositionalPhrase,
  AcrossSubjectRelative,
  ShortVpCoordination,
  LongVpCoordination,
  AcrossObjectRelative,
  AcrossObjectRelativeNoComp,
  WithinObjectRelative,
  WithinObjectRelativeNoComp,
};

inline constexpr std::size_t kConstructionCount = 10;

std::span<const Construction> all_constructions();

/// Canonical snake_case name, used in corpus files and reports.
std::string_view construction_name(Construction c);

/// Short table label ("Simple agr.", "Across obj. rel. (no comp)", ...).
std::string_view construction_label(Construction c);

/// Number of verbs in the construction's template, counting every verb
/// of the example sentence (so long VP coordination includes "watch").
int template_verb_count(Construction c);

/// Accepts canonical names and the original stimuli keys
/// (simple_agrmt, prep_inanim, obj_rel_no_comp_within_anim, ...).
std::optional<Construction> parse_construction(std::string_view name);

/// Comma separated list of every accepted name, for error messages.
std::string valid_construction_names();

struct AnnotatedSentence {
  std::string source_id;
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  std::optional<std::vector<std::size_t>> verb_positions;
  std::optional<Construction> construction;
  std::optional<std::vector<std::size_t>> eval_mask;

  /// Tokens carrying a non-OK label.
  std::size_t error_count() const;
  /// Maximal runs of identical non-OK labels; a multi-token edit counts once.
  std::size_t error_span_count() const;
  bool has_error() const { return error_count() > 0; }

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

/// Throws DataError on label/token length mismatch or out-of-range indices.
void validate(const AnnotatedSentence& s);

bool is_error_label(std::string_view label);

// Corpus JSONL: one object per sentence with id, tokens, labels and the
// optional verb_positions, construction and eval_mask fields.
std::string to_jsonl_line(const AnnotatedSentence& s);
AnnotatedSentence from_jsonl_line(std::string_view line, std::size_t line_no);

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path);
std::vector<AnnotatedSentence> parse_corpus(std::string_view text);
void write_corpus(const std::filesystem::path& path, std::span<const AnnotatedSentence> sentences);
std::string serialize_corpus(std::span<const AnnotatedSentence> sentences);

}  // namespace gedprobe
