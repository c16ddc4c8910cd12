#include "gedprobe/annotated.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gedprobe/error.hpp"

namespace gedprobe {

namespace {

using nlohmann::json;

struct ConstructionInfo {
  Construction id;
  std::string_view name;
  std::string_view label;
  int verbs;
};

constexpr std::array<ConstructionInfo, kConstructionCount> kInfo{{
    {Construction::SimpleAgreement, "simple_agreement", "Simple agr.", 1},
    {Construction::SententialComplement, "sentential_complement", "In sent. comp.", 2},
    {Construction::AcrossPrepositionalPhrase, "across_prepositional_phrase", "Across prep.", 1},
    {Construction::AcrossSubjectRelative, "across_subject_relative", "Across subj. rel.", 2},
    {Construction::ShortVpCoordination, "short_vp_coordination", "Short VP coord", 2},
    {Construction::LongVpCoordination, "long_vp_coordination", "Long VP coord", 3},
    {Construction::AcrossObjectRelative, "across_object_relative", "Across obj. rel.", 2},
    {Construction::AcrossObjectRelativeNoComp, "across_object_relative_no_comp",
     "Across obj. rel. (no comp)", 2},
    {Construction::WithinObjectRelative, "within_object_relative", "Within obj. rel.", 2},
    {Construction::WithinObjectRelativeNoComp, "within_object_relative_no_comp",
     "Within obj. rel. (no comp)", 2},
}};

// Keys used by the original stimuli export; animate and inanimate variants
// fold into one construction.
struct Alias {
  std::string_view key;
  Construction id;
};

constexpr std::array<Alias, 15> kAliases{{
    {"simple_agrmt", Construction::SimpleAgreement},
    {"sent_comp", Construction::SententialComplement},
    {"prep_anim", Construction::AcrossPrepositionalPhrase},
    {"prep_inanim", Construction::AcrossPrepositionalPhrase},
    {"subj_rel", Construction::AcrossSubjectRelative},
    {"vp_coord", Construction::ShortVpCoordination},
    {"long_vp_coord", Construction::LongVpCoordination},
    {"obj_rel_across_anim", Construction::AcrossObjectRelative},
    {"obj_rel_across_inanim", Construction::AcrossObjectRelative},
    {"obj_rel_no_comp_across_anim", Construction::AcrossObjectRelativeNoComp},
    {"obj_rel_no_comp_across_inanim", Construction::AcrossObjectRelativeNoComp},
    {"obj_rel_within_anim", Construction::WithinObjectRelative},
    {"obj_rel_within_inanim", Construction::WithinObjectRelative},
    {"obj_rel_no_comp_within_anim", Construction::WithinObjectRelativeNoComp},
    {"obj_rel_no_comp_within_inanim", Construction::WithinObjectRelativeNoComp},
}};

const ConstructionInfo& info(Construction c) {
  return kInfo[static_cast<std::size_t>(c)];
}

constexpr std::array<Construction, kConstructionCount> kAll{
    Construction::SimpleAgreement,        Construction::SententialComplement,
    Construction::AcrossPrepositionalPhrase, Construction::AcrossSubjectRelative,
    Construction::ShortVpCoordination,    Construction::LongVpCoordination,
    Construction::AcrossObjectRelative,   Construction::AcrossObjectRelativeNoComp,
    Construction::WithinObjectRelative,   Construction::WithinObjectRelativeNoComp,
};

std::vector<std::size_t> index_list(const json& j, std::string_view field, std::size_t line_no) {
  if (!j.is_array()) {
    throw ParseError(line_no, std::string(field) + " must be an array of indices");
  }
  std::vector<std::size_t> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ParseError(line_no, std::string(field) + " must hold non-negative integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

}  // namespace

std::span<const Construction> all_constructions() { return kAll; }

std::string_view construction_name(Construction c) { return info(c).name; }

std::string_view construction_label(Construction c) { return info(c).label; }

int template_verb_count(Construction c) { return info(c).verbs; }

std::optional<Construction> parse_construction(std::string_view name) {
  for (const auto& i : kInfo) {
    if (i.name == name) {
      return i.id;
    }
  }
  for (const auto& a : kAliases) {
    if (a.key == name) {
      return a.id;
    }
  }
  return std::nullopt;
}

std::string valid_construction_names() {
  std::string out;
  for (const auto& i : kInfo) {
    out += out.empty() ? "" : ", ";
    out += i.name;
  }
  for (const auto& a : kAliases) {
    out += ", ";
    out += a.key;
  }
  return out;
}

bool is_error_label(std::string_view label) { return label != kOkLabel; }

std::size_t AnnotatedSentence::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const std::string& l) { return is_error_label(l); }));
}

std::size_t AnnotatedSentence::error_span_count() const {
  std::size_t spans = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (is_error_label(labels[i]) && (i == 0 || labels[i - 1] != labels[i])) {
      ++spans;
    }
  }
  return spans;
}

void validate(const AnnotatedSentence& s) {
  if (s.labels.size() != s.tokens.size()) {
    throw DataError("sentence " + s.source_id + ": " + std::to_string(s.labels.size()) +
                    " labels for " + std::to_string(s.tokens.size()) + " tokens");
  }
  auto check = [&](const std::optional<std::vector<std::size_t>>& idx, std::string_view what) {
    if (!idx) {
      return;
    }
    for (std::size_t i : *idx) {
      if (i >= s.tokens.size()) {
        throw DataError("sentence " + s.source_id + ": " + std::string(what) + " index " +
                        std::to_string(i) + " out of range");
      }
    }
  };
  check(s.verb_positions, "verb_positions");
  check(s.eval_mask, "eval_mask");
  if (s.construction && s.verb_positions) {
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      if (is_error_label(s.labels[i]) &&
          std::find(s.verb_positions->begin(), s.verb_positions->end(), i) == s.verb_positions->end()) {
        throw DataError("sentence " + s.source_id + ": error label at " + std::to_string(i) +
                        " is not a verb position");
      }
    }
  }
}

std::string to_jsonl_line(const AnnotatedSentence& s) {
  json j;
  j["id"] = s.source_id;
  j["tokens"] = s.tokens;
  j["labels"] = s.labels;
  if (s.verb_positions) {
    j["verb_positions"] = *s.verb_positions;
  }
  if (s.construction) {
    j["construction"] = construction_name(*s.construction);
  }
  if (s.eval_mask) {
    j["eval_mask"] = *s.eval_mask;
  }
  return j.dump();
}

AnnotatedSentence from_jsonl_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  if (!j.is_object()) {
    throw ParseError(line_no, "expected a JSON object");
  }
  AnnotatedSentence s;
  try {
    s.source_id = j.at("id").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(line_no, std::string("missing or mistyped field: ") + e.what());
  }
  if (auto it = j.find("verb_positions"); it != j.end()) {
    s.verb_positions = index_list(*it, "verb_positions", line_no);
  }
  if (auto it = j.find("eval_mask"); it != j.end()) {
    s.eval_mask = index_list(*it, "eval_mask", line_no);
  }
  if (auto it = j.find("construction"); it != j.end()) {
    const auto name = it->get<std::string>();
    s.construction = parse_construction(name);
    if (!s.construction) {
      throw ParseError(line_no, "unknown construction '" + name + "'; valid names: " +
                                    valid_construction_names());
    }
  }
  try {
    validate(s);
  } catch (const DataError& e) {
    throw ParseError(line_no, e.what());
  }
  return s;
}

std::vector<AnnotatedSentence> parse_corpus(std::string_view text) {
  std::vector<AnnotatedSentence> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++line_no;
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      out.push_back(from_jsonl_line(line, line_no));
    }
    pos = end + 1;
  }
  return out;
}

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string serialize_corpus(std::span<const AnnotatedSentence> sentences) {
  std::string out;
  for (const auto& s : sentences) {
    out += to_jsonl_line(s);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const AnnotatedSentence> sentences) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write corpus " + path.string());
  }
  out << serialize_corpus(sentences);
}

}  // namespace gedprobe
