#pragma once

// Small corpora and stimuli shared by the unit and acceptance tests.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gedprobe/annotated.hpp"
#include "gedprobe/rng.hpp"
#include "gedprobe/stimuli.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "gedprobe-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    out.push_back(w);
  }
  return out;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
}

/// Sentence with R:VERB:SVA on the given token indices.
inline gedprobe::AnnotatedSentence sentence(const std::string& id, const std::string& text,
                                            std::vector<std::size_t> errors = {}) {
  gedprobe::AnnotatedSentence s;
  s.source_id = id;
  s.tokens = words(text);
  s.labels.assign(s.tokens.size(), std::string(gedprobe::kOkLabel));
  for (auto i : errors) {
    s.labels.at(i) = gedprobe::kSvaLabel;
  }
  return s;
}

/// Random sentences of `length` tokens, one R:VERB:SVA token in each with
/// probability `error_rate`.
inline std::vector<gedprobe::AnnotatedSentence> random_corpus(std::size_t n, std::size_t length, double error_rate,
                                                              std::uint64_t seed, const std::string& prefix) {
  static const std::vector<std::string> vocab{"the", "author", "guards", "laughs", "like", "is", "are", "near",
                                              "movie", "good", "swims", "that", "and", "a", "school"};
  gedprobe::Rng rng(seed);
  std::vector<gedprobe::AnnotatedSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    gedprobe::AnnotatedSentence s;
    s.source_id = prefix + std::to_string(i);
    for (std::size_t t = 0; t < length; ++t) {
      s.tokens.push_back(vocab[rng.below(vocab.size())]);
    }
    s.labels.assign(length, std::string(gedprobe::kOkLabel));
    if (rng.uniform() < error_rate) {
      s.labels[rng.below(length)] = gedprobe::kSvaLabel;
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Templates in the style of the agreement stimuli, grammatical variant first.
struct PairTemplate {
  gedprobe::Construction construction;
  const char* grammatical;
  const char* ungrammatical;
};

inline const std::vector<PairTemplate>& stimuli_templates() {
  using C = gedprobe::Construction;
  static const std::vector<PairTemplate> t{
      {C::SimpleAgreement, "the author laughs", "the author laugh"},
      {C::SimpleAgreement, "the authors laugh", "the authors laughs"},
      {C::SimpleAgreement, "the farmer swims", "the farmer swim"},
      {C::SententialComplement, "the mechanic said the author laughs", "the mechanic said the author laugh"},
      {C::SententialComplement, "the mechanics said the authors swim", "the mechanics said the authors swims"},
      {C::AcrossPrepositionalPhrase, "the author next to the guards laughs", "the author next to the guards laugh"},
      {C::AcrossPrepositionalPhrase, "the farmer near the parents smiles", "the farmer near the parents smile"},
      {C::AcrossPrepositionalPhrase, "the movies next to the guard are good", "the movies next to the guard is good"},
      {C::AcrossSubjectRelative, "the author that likes the guards laughs", "the author that likes the guards laugh"},
      {C::AcrossSubjectRelative, "the authors that hate the guard swim", "the authors that hate the guard swims"},
      {C::ShortVpCoordination, "the author laughs and swims", "the author laughs and swim"},
      {C::ShortVpCoordination, "the authors smile and laugh", "the authors smile and laughs"},
      {C::LongVpCoordination, "the author knows many different foreign languages and likes to watch television shows",
       "the author knows many different foreign languages and like to watch television shows"},
      {C::LongVpCoordination, "the authors like to watch television shows and know many different foreign languages",
       "the authors like to watch television shows and knows many different foreign languages"},
      {C::AcrossObjectRelative, "the author that the guards like laughs", "the author that the guards like laugh"},
      {C::AcrossObjectRelative, "the movie that the guards like is good", "the movie that the guards like are good"},
      {C::AcrossObjectRelativeNoComp, "the author the guards like laughs", "the author the guards like laugh"},
      {C::AcrossObjectRelativeNoComp, "the movies the guard hates are good", "the movies the guard hates is good"},
      {C::WithinObjectRelative, "the farmer that the parents love swims", "the farmer that the parents loves swims"},
      {C::WithinObjectRelative, "the author that the guard hates laughs", "the author that the guard hate laughs"},
      {C::WithinObjectRelativeNoComp, "the movie the security guards like is good",
       "the movie the security guards likes is good"},
      {C::WithinObjectRelativeNoComp, "the authors the guard loves swim", "the authors the guard love swim"},
  };
  return t;
}

/// Pair counts per construction in the original stimuli (half the sentence counts).
inline std::size_t stimuli_pair_count(gedprobe::Construction c) {
  using C = gedprobe::Construction;
  switch (c) {
    case C::SimpleAgreement:
      return 140;
    case C::SententialComplement:
      return 1680;
    case C::AcrossPrepositionalPhrase:
      return 22400;
    case C::AcrossSubjectRelative:
      return 11200;
    case C::ShortVpCoordination:
      return 840;
    case C::LongVpCoordination:
      return 400;
    default:
      return 22400;
  }
}

/// Cycles each construction's templates up to `per_construction(c)` pairs.
template <typename CountFn>
std::vector<gedprobe::MinimalPair> stimuli_pairs(CountFn per_construction) {
  std::vector<gedprobe::MinimalPair> out;
  std::size_t next_id = 0;
  for (auto c : gedprobe::all_constructions()) {
    std::vector<const PairTemplate*> mine;
    for (const auto& t : stimuli_templates()) {
      if (t.construction == c) {
        mine.push_back(&t);
      }
    }
    const std::size_t n = per_construction(c);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* t = mine[i % mine.size()];
      gedprobe::MinimalPair p;
      p.construction = c;
      p.grammatical = gedprobe::normalize(words(t->grammatical));
      p.ungrammatical = gedprobe::normalize(words(t->ungrammatical));
      p.pair_id = "pair-" + std::to_string(next_id++);
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline std::vector<gedprobe::MinimalPair> small_stimuli() {
  return stimuli_pairs([](gedprobe::Construction c) {
    std::size_t n = 0;
    for (const auto& t : stimuli_templates()) {
      n += t.construction == c;
    }
    return n;
  });
}

inline std::vector<gedprobe::MinimalPair> full_size_stimuli() { return stimuli_pairs(stimuli_pair_count); }

}  // namespace fixtures
