#pragma once

// Conversion of agreement minimal pairs into token-level GED gold data.

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gedprobe/annotated.hpp"

namespace gedprobe {

struct MinimalPair {
  Construction construction = Construction::SimpleAgreement;
  std::vector<std::string> grammatical;
  std::vector<std::string> ungrammatical;
  std::string pair_id;
};

enum class PairFormat {
  Jsonl,       // {"construction", "grammatical", "ungrammatical", "id"} or {"<key>": [g, u]}
  PairedText,  // construction \t grammatical \t ungrammatical [\t id]
};

std::vector<MinimalPair> parse_minimal_pairs(std::string_view text, PairFormat format);
std::vector<MinimalPair> load_minimal_pairs(const std::filesystem::path& path, PairFormat format);

/// Index of the single token that differs between the two variants.
/// Throws InvariantError (carrying both sentences) for zero or several differences.
std::size_t diff_index(const MinimalPair& pair);

/// Capitalises the first token and appends "." when the sentence does not
/// already end with one. Idempotent.
std::vector<std::string> normalize(std::vector<std::string> tokens);

std::string to_lower(std::string_view s);

/// Verb forms used to locate candidate verbs in the stimuli.
struct VerbInventory {
  std::set<std::string> forms;
  /// form -> lemma, for every form in `forms`.
  std::map<std::string, std::string> lemma_of;

  bool contains(std::string_view token) const;
  std::set<std::string> lemmas() const;
  std::size_t lemma_count() const { return lemmas().size(); }
};

struct InventoryOptions {
  /// Extra forms counted as verbs although they never differ within a pair.
  std::set<std::string> extra_forms;
  /// Forms never counted as verbs, even when observed as a difference.
  std::set<std::string> excluded_forms;
};

VerbInventory build_verb_inventory(std::span<const MinimalPair> pairs, const InventoryOptions& options = {});

/// Grammatical twin first, ungrammatical twin second.
std::pair<AnnotatedSentence, AnnotatedSentence> convert_pair(const MinimalPair& pair,
                                                             const VerbInventory& inventory);

/// Converts every pair, grammatical twin before ungrammatical twin.
std::vector<AnnotatedSentence> convert_pairs(std::span<const MinimalPair> pairs, const VerbInventory& inventory);

struct StimuliStatsRow {
  Construction construction = Construction::SimpleAgreement;
  std::size_t count = 0;
  double mean_length = 0.0;  // tokens after normalization
  double std_length = 0.0;
  double mean_length_no_period = 0.0;  // final "." not counted
  double std_length_no_period = 0.0;
};

/// One row per construction present, in construction order. Population std.
std::vector<StimuliStatsRow> stimuli_stats(std::span<const AnnotatedSentence> sentences);

// Inflection helpers shared with the verb-holdout filter.

/// be, am, is, are, was, were, been, being.
const std::set<std::string>& be_forms();

/// Lemma -> {lemma, 3rd-person singular, past forms}. Irregular pasts come
/// from a fixed table; everything else follows the regular spelling rules.
std::set<std::string> inflect(std::string_view lemma);

std::set<std::string> expand_lemmas(const std::set<std::string>& lemmas);

/// Groups agreement variants by lemma: "laughs" folds into "laugh" when both
/// are present, forms of "be" into "be"; unmatched forms are their own lemma.
std::set<std::string> lemmatize_forms(const std::set<std::string>& forms);

/// Evaluation-set variant used when "to be" is held out of the comparison:
/// drops sentences whose verb positions are all forms of "be" and masks the
/// remaining "be" verbs. Sentences without verb positions are kept unchanged.
std::vector<AnnotatedSentence> mask_be_verbs(std::span<const AnnotatedSentence> sentences);

}  // namespace gedprobe
