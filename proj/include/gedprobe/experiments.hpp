#pragma once

// Layer sweeps (experiment 1) and the verb-holdout comparison (experiment 2).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gedprobe/annotated.hpp"
#include "gedprobe/embedstore.hpp"
#include "gedprobe/eval.hpp"
#include "gedprobe/m2corpus.hpp"
#include "gedprobe/probe.hpp"
#include "gedprobe/report.hpp"

namespace gedprobe {

inline constexpr std::size_t kLearnerTrainSize = 1936;

struct LayerRange {
  int first = 1;
  int last = 12;

  std::vector<int> layers() const;
};

struct CorpusPaths {
  std::filesystem::path wi_fce_train;
  std::filesystem::path wi_fce_dev;
  std::filesystem::path wiked_pool;
  std::optional<std::filesystem::path> wiked_dev;  // sampled from the pool when absent
  std::filesystem::path eval;
};

struct Experiment2Config {
  std::string model = "bert";
  std::vector<int> multipliers{1, 4, 8};
  std::size_t base_size = kLearnerTrainSize;
  LayerRange layers{6, 12};
  /// One verb form or lemma per line; derived from the evaluation set's verbs when absent.
  std::optional<std::filesystem::path> holdout_verbs;
  std::set<std::string> exceptions;  // defaults to the forms of "be"
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  std::vector<std::string> models;
  LayerRange layers;
  std::vector<Provenance> train_sources{Provenance::WiFce, Provenance::WikEd};
  std::size_t sample_count = 5;
  std::size_t sample_size = kLearnerTrainSize;
  std::uint64_t seed = 1;
  std::uint64_t dev_seed = 1000;
  std::size_t wiked_dev_size = 5839;
  CorpusPaths corpora;
  /// Stores live at <store_dir>/<model>/<role>.gede.
  std::filesystem::path store_dir;
  std::filesystem::path output_dir;
  TrainConfig train;
  unsigned threads = 0;  // 0 = hardware concurrency
  Experiment2Config experiment2;

  /// Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(std::string_view text, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Store roles; the eval role is only opened after every probe is trained.
inline constexpr std::string_view kRoleWiFceTrain = "wi_fce_train";
inline constexpr std::string_view kRoleWiFceDev = "wi_fce_dev";
inline constexpr std::string_view kRoleWikedPool = "wiked_pool";
inline constexpr std::string_view kRoleWikedDev = "wiked_dev";
inline constexpr std::string_view kRoleEval = "eval";

std::filesystem::path store_path(const ExperimentConfig& cfg, std::string_view model, std::string_view role);

/// Opens a store, or throws DataError naming the extract command that creates it.
EmbeddingStore open_store(const ExperimentConfig& cfg, std::string_view model, std::string_view role,
                          const std::filesystem::path& corpus);

/// Probe predictions for every token of `sentences`.
Predictions predict_sentences(const LinearProbe& probe, const EmbeddingStore& store,
                              std::span<const AnnotatedSentence> sentences, double threshold = 0.5);

/// Per-layer evaluation reports of one trained probe family.
struct LayerReports {
  std::vector<int> layers;
  std::vector<std::vector<EvalReport>> runs;  // [layer index][sample]
};

struct Experiment1Result {
  /// source name -> model -> reports
  std::map<std::string, std::map<std::string, LayerReports>> reports;
  EvalReport baseline;
  std::vector<std::filesystem::path> files;
};

Experiment1Result experiment1(const ExperimentConfig& cfg);

struct Experiment2Cell {
  int multiplier = 1;
  std::size_t size = 0;
  LayerReports with_verbs;
  LayerReports without_verbs;
  /// Mean and std of the pairwise (with - without) F1 difference, per layer.
  std::vector<MeanStd> difference;
};

struct Experiment2Result {
  std::vector<Experiment2Cell> cells;
  EvalReport baseline;  // on the modified evaluation set
  std::set<std::string> held_out;
  std::vector<std::filesystem::path> files;
};

Experiment2Result experiment2(const ExperimentConfig& cfg);

/// Mean +- std of overall F1 per layer.
std::vector<MeanStd> overall_f1(const LayerReports& r, StdMode mode = StdMode::Sample);

}  // namespace gedprobe
