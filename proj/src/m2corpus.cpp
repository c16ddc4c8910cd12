#include "gedprobe/m2corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gedprobe/error.hpp"
#include "gedprobe/rng.hpp"
#include "gedprobe/stimuli.hpp"
#include "gedprobe/summary.hpp"

namespace gedprobe {

namespace {

constexpr std::string_view kFieldSep = "|||";

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') {
      ++j;
    }
    if (j > i) {
      out.emplace_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto at = s.find(kFieldSep, pos);
    if (at == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, at - pos));
    pos = at + kFieldSep.size();
  }
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool edit_less(const Edit& a, const Edit& b) {
  return a.span_start != b.span_start ? a.span_start < b.span_start : a.span_end < b.span_end;
}

struct PendingEntry {
  M2Entry entry;
  bool open = false;
};

class BlockParser {
 public:
  BlockParser(const M2Options& options, M2ParseResult& result) : options_(options), result_(result) {}

  void source_line(std::string_view rest) {
    flush();
    current_.entry = M2Entry{};
    current_.entry.id = options_.id_prefix + std::to_string(result_.entries.size());
    current_.entry.source_tokens = split_tokens(rest);
    current_.open = true;
  }

  void annotation_line(std::string_view rest, std::size_t line_no) {
    if (!current_.open) {
      throw ParseError(line_no, "A-line without a preceding S-line");
    }
    const auto fields = split_fields(rest);
    if (fields.size() < 3) {
      throw ParseError(line_no, "A-line needs at least span|||type|||correction");
    }
    const std::string type(fields[1]);
    if (type == "noop") {
      return;
    }
    const auto span = split_tokens(fields[0]);
    long long start = 0;
    long long end = 0;
    if (span.size() != 2 || !parse_int(span[0], start) || !parse_int(span[1], end)) {
      throw ParseError(line_no, "span must be two integers, got '" + std::string(fields[0]) + "'");
    }
    const auto n = static_cast<long long>(current_.entry.source_tokens.size());
    if (start < 0 || end < start || end > n) {
      throw ParseError(line_no, "span " + std::to_string(start) + " " + std::to_string(end) +
                                    " out of range for " + std::to_string(n) + " source tokens");
    }
    int annotator = 0;
    if (fields.size() >= 6 && !parse_int(fields.back(), annotator)) {
      throw ParseError(line_no, "annotator id must be an integer");
    }
    if (annotator != options_.annotator) {
      return;
    }
    Edit edit;
    edit.span_start = static_cast<std::size_t>(start);
    edit.span_end = static_cast<std::size_t>(end);
    if (fields[2] != "-NONE-") {
      edit.replacement = split_tokens(fields[2]);
    }
    edit.error_type = type;
    edit.annotator_id = annotator;
    for (const auto& kept : current_.entry.edits) {
      if (edits_overlap(kept, edit)) {
        result_.warnings.push_back({line_no, "edit " + std::to_string(start) + " " + std::to_string(end) +
                                                 " overlaps an earlier edit; dropped"});
        return;
      }
    }
    current_.entry.edits.push_back(std::move(edit));
  }

  void flush() {
    if (!current_.open) {
      return;
    }
    auto& edits = current_.entry.edits;
    std::stable_sort(edits.begin(), edits.end(), edit_less);
    result_.entries.push_back(std::move(current_.entry));
    current_.open = false;
  }

 private:
  const M2Options& options_;
  M2ParseResult& result_;
  PendingEntry current_;
};

}  // namespace

M2ParseResult parse_m2(std::string_view text, const M2Options& options) {
  M2ParseResult result;
  BlockParser parser(options, result);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      parser.flush();
      continue;
    }
    if (line.starts_with("S ") || line == "S") {
      parser.source_line(line.substr(std::min<std::size_t>(2, line.size())));
    } else if (line.starts_with("A ")) {
      parser.annotation_line(line.substr(2), line_no);
    } else {
      throw ParseError(line_no, "expected an S- or A-line");
    }
  }
  parser.flush();
  return result;
}

M2ParseResult read_m2(const std::filesystem::path& path, const M2Options& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open M2 file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_m2(buf.str(), options);
}

bool edits_overlap(const Edit& a, const Edit& b) {
  if (a.is_insertion() && b.is_insertion()) {
    return a.span_start == b.span_start;
  }
  if (a.is_insertion()) {
    return b.span_start < a.span_start && a.span_start < b.span_end;
  }
  if (b.is_insertion()) {
    return a.span_start < b.span_start && b.span_start < a.span_end;
  }
  return a.span_start < b.span_end && b.span_start < a.span_end;
}

std::vector<std::string> apply_edits(const M2Entry& entry, std::span<const Edit> selected) {
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i].span_end > entry.source_tokens.size() || selected[i].span_start > selected[i].span_end) {
      throw DataError("entry " + entry.id + ": edit span out of range");
    }
    if (i > 0 && edit_less(selected[i], selected[i - 1])) {
      throw DataError("entry " + entry.id + ": selected edits are not sorted");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (edits_overlap(selected[j], selected[i])) {
        throw DataError("entry " + entry.id + ": selected edits overlap");
      }
    }
  }
  auto tokens = entry.source_tokens;
  for (auto it = selected.rbegin(); it != selected.rend(); ++it) {
    const auto first = tokens.begin() + static_cast<std::ptrdiff_t>(it->span_start);
    const auto last = tokens.begin() + static_cast<std::ptrdiff_t>(it->span_end);
    const auto at = tokens.erase(first, last);
    tokens.insert(at, it->replacement.begin(), it->replacement.end());
  }
  return tokens;
}

CorrectionResult correct_except(const M2Entry& entry, const std::set<std::string>& target_types) {
  std::vector<Edit> applied;
  std::vector<Edit> kept;
  for (const auto& e : entry.edits) {
    (target_types.contains(e.error_type) ? kept : applied).push_back(e);
  }

  CorrectionResult out;
  out.tokens = apply_edits(entry, applied);
  out.labels.assign(out.tokens.size(), std::string(kOkLabel));

  for (auto e : kept) {
    std::ptrdiff_t delta = 0;
    for (const auto& a : applied) {
      if (a.span_end <= e.span_start) {
        delta += static_cast<std::ptrdiff_t>(a.replacement.size()) -
                 static_cast<std::ptrdiff_t>(a.span_end - a.span_start);
      }
    }
    const auto start = static_cast<std::ptrdiff_t>(e.span_start) + delta;
    const auto end = static_cast<std::ptrdiff_t>(e.span_end) + delta;
    const auto size = static_cast<std::ptrdiff_t>(out.tokens.size());
    if (start < 0 || end > size || (e.is_insertion() && start > size)) {
      throw IntegrityError("entry " + entry.id + ": remapped span out of bounds for " + e.error_type);
    }
    e.span_start = static_cast<std::size_t>(start);
    e.span_end = static_cast<std::size_t>(end);

    std::size_t first = e.span_start;
    std::size_t last = e.span_end;
    if (e.is_insertion()) {
      // Missing-token errors mark the token after the insertion point, or
      // the final token when inserting at the end.
      if (out.tokens.empty()) {
        throw IntegrityError("entry " + entry.id + ": insertion into an empty sentence");
      }
      first = std::min(first, out.tokens.size() - 1);
      last = first + 1;
    }
    for (std::size_t i = first; i < last; ++i) {
      if (!is_error_label(out.labels[i])) {
        out.labels[i] = e.error_type;
      }
    }
    out.retained.push_back(std::move(e));
  }
  return out;
}

std::optional<AnnotatedSentence> selective_correct(const M2Entry& entry, const std::set<std::string>& target_types) {
  auto r = correct_except(entry, target_types);
  if (r.retained.empty()) {
    return std::nullopt;
  }
  AnnotatedSentence s;
  s.source_id = entry.id;
  s.tokens = std::move(r.tokens);
  s.labels = std::move(r.labels);
  return s;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::WiFce:
      return "WI_FCE";
    case Provenance::WikEd:
      return "WIKED";
    case Provenance::Synthetic:
      return "SYNTHETIC";
  }
  return "SYNTHETIC";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  for (auto p : {Provenance::WiFce, Provenance::WikEd, Provenance::Synthetic}) {
    if (provenance_name(p) == name) {
      return p;
    }
  }
  return std::nullopt;
}

CorpusSplit process_entries(std::span<const M2Entry> entries, const std::set<std::string>& target_types,
                            Provenance provenance) {
  CorpusSplit out;
  out.provenance = provenance;
  for (const auto& e : entries) {
    if (auto s = selective_correct(e, target_types)) {
      out.sentences.push_back(std::move(*s));
    }
  }
  return out;
}

std::vector<CorpusSplit> sample_training_sets(const CorpusSplit& corpus, std::size_t k, std::size_t size,
                                              std::uint64_t seed) {
  if (size > corpus.sentences.size()) {
    throw DataError("requested sample of " + std::to_string(size) + " sentences but only " +
                    std::to_string(corpus.sentences.size()) + " are available");
  }
  std::vector<CorpusSplit> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto sample_seed = seed + i;
    Rng rng(sample_seed);
    CorpusSplit split;
    split.provenance = corpus.provenance;
    split.sample_seed = sample_seed;
    for (auto idx : rng.sample_without_replacement(corpus.sentences.size(), size)) {
      split.sentences.push_back(corpus.sentences[idx]);
    }
    out.push_back(std::move(split));
  }
  return out;
}

PoolSplit split_dev(const CorpusSplit& corpus, std::size_t dev_size, std::uint64_t seed) {
  if (dev_size > corpus.sentences.size()) {
    throw DataError("requested dev split of " + std::to_string(dev_size) + " sentences but only " +
                    std::to_string(corpus.sentences.size()) + " are available");
  }
  Rng rng(seed);
  std::vector<bool> in_dev(corpus.sentences.size(), false);
  for (auto idx : rng.sample_without_replacement(corpus.sentences.size(), dev_size)) {
    in_dev[idx] = true;
  }
  PoolSplit out;
  out.dev.provenance = out.pool.provenance = corpus.provenance;
  out.dev.sample_seed = seed;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    (in_dev[i] ? out.dev : out.pool).sentences.push_back(corpus.sentences[i]);
  }
  return out;
}

CorpusSplit verb_holdout(const CorpusSplit& corpus, const std::set<std::string>& held_out,
                         const std::set<std::string>& exceptions) {
  std::set<std::string> drop;
  for (const auto& v : held_out) {
    auto form = to_lower(v);
    if (!exceptions.contains(form)) {
      drop.insert(std::move(form));
    }
  }
  CorpusSplit out;
  out.provenance = corpus.provenance;
  out.sample_seed = corpus.sample_seed;
  for (const auto& s : corpus.sentences) {
    const bool hit = std::any_of(s.tokens.begin(), s.tokens.end(),
                                 [&](const std::string& t) { return drop.contains(to_lower(t)); });
    if (!hit) {
      out.sentences.push_back(s);
    }
  }
  return out;
}

CorpusStats corpus_stats(std::span<const AnnotatedSentence> sentences) {
  std::vector<double> lengths;
  std::vector<double> errors;
  lengths.reserve(sentences.size());
  errors.reserve(sentences.size());
  for (const auto& s : sentences) {
    lengths.push_back(static_cast<double>(s.tokens.size()));
    errors.push_back(static_cast<double>(s.error_span_count()));
  }
  const auto l = mean_std(lengths, StdMode::Population);
  const auto e = mean_std(errors, StdMode::Population);
  return {sentences.size(), l.mean, l.std, e.mean, e.std};
}

}  // namespace gedprobe
