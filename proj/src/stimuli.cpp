#include "gedprobe/stimuli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gedprobe/error.hpp"
#include "gedprobe/summary.hpp"

namespace gedprobe {

namespace {

using nlohmann::json;

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) {
      ++j;
    }
    if (j > i) {
      out.emplace_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

std::vector<std::string> sentence_field(const json& j, std::size_t line_no) {
  if (j.is_string()) {
    return split_ws(j.get<std::string>());
  }
  if (j.is_array() && std::all_of(j.begin(), j.end(), [](const json& t) { return t.is_string(); })) {
    return j.get<std::vector<std::string>>();
  }
  throw ParseError(line_no, "sentence must be a string or an array of strings");
}

Construction construction_or_throw(std::string_view name, std::size_t line_no) {
  if (auto c = parse_construction(name)) {
    return *c;
  }
  throw ParseError(line_no, "unknown construction '" + std::string(name) +
                                "'; valid names: " + valid_construction_names());
}

MinimalPair make_pair(Construction c, std::vector<std::string> g, std::vector<std::string> u,
                      std::string id, std::size_t line_no) {
  if (g.empty() || u.empty()) {
    throw ParseError(line_no, "both sentence variants must be non-empty");
  }
  if (id.empty()) {
    id = "pair-" + std::to_string(line_no);
  }
  return MinimalPair{c, std::move(g), std::move(u), std::move(id)};
}

MinimalPair parse_json_record(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  if (!j.is_object()) {
    throw ParseError(line_no, "expected a JSON object");
  }
  if (j.contains("construction")) {
    if (!j["construction"].is_string() || !j.contains("grammatical") || !j.contains("ungrammatical")) {
      throw ParseError(line_no, "record needs construction, grammatical and ungrammatical");
    }
    std::string id;
    if (auto it = j.find("id"); it != j.end()) {
      id = it->is_string() ? it->get<std::string>() : it->dump();
    }
    return make_pair(construction_or_throw(j["construction"].get<std::string>(), line_no),
                     sentence_field(j["grammatical"], line_no), sentence_field(j["ungrammatical"], line_no),
                     std::move(id), line_no);
  }
  // Compact form: {"simple_agrmt": ["the author laughs", "the author laugh"]}
  if (j.size() != 1) {
    throw ParseError(line_no, "record needs construction, grammatical and ungrammatical");
  }
  const auto& [key, value] = *j.items().begin();
  if (!value.is_array() || value.size() != 2) {
    throw ParseError(line_no, "compact record must map a construction to [grammatical, ungrammatical]");
  }
  return make_pair(construction_or_throw(key, line_no), sentence_field(value[0], line_no),
                   sentence_field(value[1], line_no), {}, line_no);
}

MinimalPair parse_text_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    fields.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) {
      break;
    }
    pos = tab + 1;
  }
  if (fields.size() < 3 || fields.size() > 4) {
    throw ParseError(line_no, "expected construction<TAB>grammatical<TAB>ungrammatical[<TAB>id]");
  }
  return make_pair(construction_or_throw(fields[0], line_no), split_ws(fields[1]), split_ws(fields[2]),
                   fields.size() == 4 ? std::string(fields[3]) : std::string{}, line_no);
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    out += out.empty() ? "" : " ";
    out += t;
  }
  return out;
}

const std::map<std::string, std::vector<std::string>, std::less<>>& irregular_pasts() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> table{
      {"be", {"was", "were", "been", "being", "am", "is", "are"}},
      {"have", {"had"}},
      {"do", {"did", "done"}},
      {"go", {"went", "gone"}},
      {"swim", {"swam", "swum"}},
      {"write", {"wrote", "written"}},
      {"know", {"knew", "known"}},
      {"bring", {"brought"}},
      {"tell", {"told"}},
      {"think", {"thought"}},
      {"say", {"said"}},
      {"take", {"took", "taken"}},
      {"give", {"gave", "given"}},
      {"run", {"ran"}},
      {"eat", {"ate", "eaten"}},
      {"sing", {"sang", "sung"}},
      {"make", {"made"}},
      {"read", {"read"}},
      {"teach", {"taught"}},
      {"buy", {"bought"}},
      {"see", {"saw", "seen"}},
      {"get", {"got", "gotten"}},
      {"find", {"found"}},
      {"leave", {"left"}},
      {"hold", {"held"}},
      {"meet", {"met"}},
      {"win", {"won"}},
      {"speak", {"spoke", "spoken"}},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::string third_singular(std::string_view lemma) {
  if (lemma == "be") {
    return "is";
  }
  if (lemma == "have") {
    return "has";
  }
  std::string s(lemma);
  const auto ends = [&](std::string_view suf) { return s.size() >= suf.size() && s.ends_with(suf); };
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh") || lemma == "do" || lemma == "go") {
    return s + "es";
  }
  if (s.size() >= 2 && s.back() == 'y' && !is_vowel(s[s.size() - 2])) {
    return s.substr(0, s.size() - 1) + "ies";
  }
  return s + "s";
}

std::string regular_past(std::string_view lemma) {
  std::string s(lemma);
  if (s.ends_with('e')) {
    return s + "d";
  }
  if (s.size() >= 2 && s.back() == 'y' && !is_vowel(s[s.size() - 2])) {
    return s.substr(0, s.size() - 1) + "ied";
  }
  return s + "ed";
}

std::string pair_lemma(const std::string& a, const std::string& b) {
  const auto& be = be_forms();
  if (be.contains(a) || be.contains(b)) {
    return "be";
  }
  if (a == "has" || a == "have" || b == "has" || b == "have") {
    return "have";
  }
  // The plural (bare) form is the shorter of the two agreement variants.
  return a.size() <= b.size() ? a : b;
}

}  // namespace

std::vector<MinimalPair> parse_minimal_pairs(std::string_view text, PairFormat format) {
  std::vector<MinimalPair> out;
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
      continue;
    }
    if (format == PairFormat::PairedText) {
      if (line.front() == '#') {
        continue;
      }
      out.push_back(parse_text_record(line, line_no));
    } else {
      out.push_back(parse_json_record(line, line_no));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const MinimalPair& a, const MinimalPair& b) {
    return a.construction < b.construction;
  });
  return out;
}

std::vector<MinimalPair> load_minimal_pairs(const std::filesystem::path& path, PairFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open stimuli file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_minimal_pairs(buf.str(), format);
}

std::size_t diff_index(const MinimalPair& pair) {
  const auto describe = [&] {
    return " in pair " + pair.pair_id + ": \"" + join(pair.grammatical) + "\" / \"" + join(pair.ungrammatical) + "\"";
  };
  if (pair.grammatical.size() != pair.ungrammatical.size()) {
    throw InvariantError("variants differ in length" + describe());
  }
  std::size_t found = pair.grammatical.size();
  for (std::size_t i = 0; i < pair.grammatical.size(); ++i) {
    if (pair.grammatical[i] != pair.ungrammatical[i]) {
      if (found != pair.grammatical.size()) {
        throw InvariantError("more than one differing token" + describe());
      }
      found = i;
    }
  }
  if (found == pair.grammatical.size()) {
    throw InvariantError("no differing token" + describe());
  }
  return found;
}

std::vector<std::string> normalize(std::vector<std::string> tokens) {
  if (tokens.empty()) {
    throw DataError("cannot normalize an empty sentence");
  }
  auto& first = tokens.front();
  if (!first.empty()) {
    first[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(first[0])));
  }
  if (tokens.back() != ".") {
    tokens.emplace_back(".");
  }
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool VerbInventory::contains(std::string_view token) const { return forms.contains(to_lower(token)); }

std::set<std::string> VerbInventory::lemmas() const {
  std::set<std::string> out;
  for (const auto& [form, lemma] : lemma_of) {
    out.insert(lemma);
  }
  return out;
}

VerbInventory build_verb_inventory(std::span<const MinimalPair> pairs, const InventoryOptions& options) {
  VerbInventory inv;
  auto add = [&](const std::string& form, const std::string& lemma) {
    if (options.excluded_forms.contains(form)) {
      return;
    }
    inv.forms.insert(form);
    inv.lemma_of.emplace(form, lemma);
  };
  for (const auto& pair : pairs) {
    const auto i = diff_index(pair);
    const auto g = to_lower(pair.grammatical[i]);
    const auto u = to_lower(pair.ungrammatical[i]);
    const auto lemma = pair_lemma(g, u);
    add(g, lemma);
    add(u, lemma);
  }
  for (const auto& extra : options.extra_forms) {
    const auto form = to_lower(extra);
    add(form, be_forms().contains(form) ? std::string("be") : form);
  }
  return inv;
}

std::pair<AnnotatedSentence, AnnotatedSentence> convert_pair(const MinimalPair& pair,
                                                             const VerbInventory& inventory) {
  const auto at = diff_index(pair);
  auto gram = normalize(pair.grammatical);
  auto ungram = normalize(pair.ungrammatical);

  std::vector<std::size_t> verbs;
  for (std::size_t i = 0; i < gram.size(); ++i) {
    if (i == at || inventory.contains(gram[i]) || inventory.contains(ungram[i])) {
      verbs.push_back(i);
    }
  }

  AnnotatedSentence g;
  g.source_id = pair.pair_id + "-g";
  g.labels.assign(gram.size(), std::string(kOkLabel));
  g.tokens = std::move(gram);
  g.verb_positions = verbs;
  g.construction = pair.construction;

  AnnotatedSentence u;
  u.source_id = pair.pair_id + "-u";
  u.labels.assign(ungram.size(), std::string(kOkLabel));
  u.labels[at] = std::string(kSvaLabel);
  u.tokens = std::move(ungram);
  u.verb_positions = std::move(verbs);
  u.construction = pair.construction;
  return {std::move(g), std::move(u)};
}

std::vector<AnnotatedSentence> convert_pairs(std::span<const MinimalPair> pairs, const VerbInventory& inventory) {
  std::vector<AnnotatedSentence> out;
  out.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    auto [g, u] = convert_pair(p, inventory);
    out.push_back(std::move(g));
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<StimuliStatsRow> stimuli_stats(std::span<const AnnotatedSentence> sentences) {
  std::map<Construction, std::pair<std::vector<double>, std::vector<double>>> lengths;
  for (const auto& s : sentences) {
    if (!s.construction) {
      continue;
    }
    auto& [with, without] = lengths[*s.construction];
    const auto n = static_cast<double>(s.tokens.size());
    with.push_back(n);
    without.push_back(!s.tokens.empty() && s.tokens.back() == "." ? n - 1.0 : n);
  }
  std::vector<StimuliStatsRow> rows;
  for (const auto& [c, l] : lengths) {
    const auto a = mean_std(l.first, StdMode::Population);
    const auto b = mean_std(l.second, StdMode::Population);
    rows.push_back({c, l.first.size(), a.mean, a.std, b.mean, b.std});
  }
  return rows;
}

const std::set<std::string>& be_forms() {
  static const std::set<std::string> forms{"be", "am", "is", "are", "was", "were", "been", "being"};
  return forms;
}

std::set<std::string> inflect(std::string_view lemma) {
  if (lemma == "be") {
    return be_forms();
  }
  std::set<std::string> out{std::string(lemma), third_singular(lemma)};
  if (auto it = irregular_pasts().find(lemma); it != irregular_pasts().end()) {
    out.insert(it->second.begin(), it->second.end());
  } else {
    out.insert(regular_past(lemma));
  }
  return out;
}

std::set<std::string> expand_lemmas(const std::set<std::string>& lemmas) {
  std::set<std::string> out;
  for (const auto& l : lemmas) {
    auto forms = inflect(l);
    out.insert(forms.begin(), forms.end());
  }
  return out;
}

std::set<std::string> lemmatize_forms(const std::set<std::string>& forms) {
  std::set<std::string> out;
  for (const auto& f : forms) {
    const auto stem = [&](std::size_t cut, std::string_view add) {
      return f.size() > cut ? f.substr(0, f.size() - cut) + std::string(add) : std::string{};
    };
    if (be_forms().contains(f)) {
      out.insert("be");
    } else if (f == "has") {
      out.insert("have");
    } else if (f.ends_with("ies") && forms.contains(stem(3, "y"))) {
      out.insert(stem(3, "y"));
    } else if (f.ends_with("es") && forms.contains(stem(2, ""))) {
      out.insert(stem(2, ""));
    } else if (f.ends_with('s') && forms.contains(stem(1, ""))) {
      out.insert(stem(1, ""));
    } else {
      out.insert(f);
    }
  }
  return out;
}

std::vector<AnnotatedSentence> mask_be_verbs(std::span<const AnnotatedSentence> sentences) {
  std::vector<AnnotatedSentence> out;
  for (const auto& s : sentences) {
    if (!s.verb_positions || s.verb_positions->empty()) {
      out.push_back(s);
      continue;
    }
    std::vector<std::size_t> be_positions;
    for (auto i : *s.verb_positions) {
      if (be_forms().contains(to_lower(s.tokens[i]))) {
        be_positions.push_back(i);
      }
    }
    if (be_positions.size() == s.verb_positions->size()) {
      continue;
    }
    auto copy = s;
    if (!be_positions.empty()) {
      std::vector<std::size_t> mask = copy.eval_mask.value_or(std::vector<std::size_t>{});
      mask.insert(mask.end(), be_positions.begin(), be_positions.end());
      std::sort(mask.begin(), mask.end());
      mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
      copy.eval_mask = std::move(mask);
    }
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace gedprobe
