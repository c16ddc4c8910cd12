#include "gedprobe/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gedprobe/annotated.hpp"
#include "gedprobe/embedstore.hpp"
#include "gedprobe/error.hpp"
#include "gedprobe/eval.hpp"
#include "gedprobe/experiments.hpp"
#include "gedprobe/m2corpus.hpp"
#include "gedprobe/probe.hpp"
#include "gedprobe/stimuli.hpp"

namespace gedprobe {

namespace fs = std::filesystem;

namespace {

std::set<std::string> read_word_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open word list " + path.string());
  }
  std::set<std::string> out;
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    for (std::string w; words >> w;) {
      if (w.front() == '#') {
        break;
      }
      out.insert(to_lower(w));
    }
  }
  return out;
}

/// True when `path` exists and the command should leave it alone.
bool keep_existing(const fs::path& path, bool force, std::ostream& out) {
  if (!force && fs::exists(path)) {
    out << path.string() << " exists; skipping (use --force to overwrite)\n";
    return true;
  }
  return false;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
}

std::string fmt(double v, int decimals = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

void print_prf(std::ostream& out, const std::string& label, const PRF& p) {
  out << label << "\tP=" << fmt(p.precision) << "\tR=" << fmt(p.recall) << "\tF1=" << fmt(p.f1)
      << "\tTP=" << p.counts.true_positives << "\tFP=" << p.counts.false_positives
      << "\tFN=" << p.counts.false_negatives << '\n';
}

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

/// Store ids and word counts must line up with the corpus it was extracted from.
void check_store_matches(const EmbeddingStore& store, std::span<const AnnotatedSentence> corpus) {
  for (const auto& s : corpus) {
    const auto* entry = store.find(s.source_id);
    if (entry == nullptr) {
      throw IntegrityError("store has no sentence " + s.source_id);
    }
    if (entry->word_count != s.tokens.size()) {
      throw IntegrityError("sentence " + s.source_id + ": store has " + std::to_string(entry->word_count) +
                           " words, corpus has " + std::to_string(s.tokens.size()));
    }
  }
}

struct TrainFlags {
  int max_epochs = TrainConfig{}.max_epochs;
  int patience = TrainConfig{}.patience;
  double learning_rate = TrainConfig{}.learning_rate;
  std::size_t batch_size = TrainConfig{}.batch_size;
  std::uint64_t seed = TrainConfig{}.seed;
  double l2 = TrainConfig{}.l2_penalty;
  std::string metric = "dev_f1";

  void add(CLI::App* app) {
    app->add_option("--max-epochs", max_epochs);
    app->add_option("--patience", patience);
    app->add_option("--lr", learning_rate);
    app->add_option("--batch-size", batch_size);
    app->add_option("--seed", seed);
    app->add_option("--l2", l2);
    app->add_option("--stopping-metric", metric)->check(CLI::IsMember({"dev_f1", "dev_loss"}));
  }

  TrainConfig config() const {
    TrainConfig c;
    c.max_epochs = max_epochs;
    c.patience = patience;
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.seed = seed;
    c.l2_penalty = l2;
    c.stopping_metric = metric == "dev_loss" ? StoppingMetric::DevLoss : StoppingMetric::DevF1;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token-level grammatical error detection probes over transformer layers"};
  app.name(args.empty() ? "gedprobe" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  bool force = false;
  app.add_flag("--force", force, "overwrite existing outputs");

  // convert-stimuli
  auto* convert = app.add_subcommand("convert-stimuli", "minimal pairs -> annotated corpus");
  fs::path pairs_in;
  fs::path corpus_out;
  std::string pair_format = "jsonl";
  fs::path extra_verbs;
  fs::path exclude_verbs;
  convert->add_option("--input", pairs_in)->required()->check(CLI::ExistingFile);
  convert->add_option("--out", corpus_out)->required();
  convert->add_option("--format", pair_format)->check(CLI::IsMember({"jsonl", "text"}));
  convert->add_option("--extra-verbs", extra_verbs, "forms counted as verbs although they never differ");
  convert->add_option("--exclude-verbs", exclude_verbs, "forms never counted as verbs");

  // process-corpus
  auto* process = app.add_subcommand("process-corpus", "M2 -> selectively corrected corpus");
  std::vector<fs::path> m2_in;
  std::string source = "WI_FCE";
  int annotator = 0;
  std::vector<std::string> targets{std::string(kSvaLabel)};
  std::string id_prefix;
  process->add_option("--m2", m2_in, "M2 files, concatenated in order")->required()->check(CLI::ExistingFile);
  process->add_option("--out", corpus_out)->required();
  process->add_option("--source", source)->check(CLI::IsMember({"WI_FCE", "WIKED", "SYNTHETIC"}));
  process->add_option("--annotator", annotator);
  process->add_option("--target", targets, "error types kept as errors");
  process->add_option("--id-prefix", id_prefix);

  // sample
  auto* sample = app.add_subcommand("sample", "draw training samples (and optionally a dev split) from a pool");
  fs::path corpus_in;
  fs::path out_dir;
  std::size_t count = 5;
  std::size_t size = kLearnerTrainSize;
  std::uint64_t seed = 1;
  std::size_t dev_size = 0;
  std::uint64_t dev_seed = 1000;
  sample->add_option("--corpus", corpus_in)->required()->check(CLI::ExistingFile);
  sample->add_option("--out-dir", out_dir)->required();
  sample->add_option("--count", count);
  sample->add_option("--size", size);
  sample->add_option("--seed", seed);
  sample->add_option("--dev-size", dev_size, "hold out a dev split first");
  sample->add_option("--dev-seed", dev_seed);

  // extract
  auto* extract = app.add_subcommand("extract", "run the extractor and validate the store it writes");
  std::string model;
  fs::path store_out;
  bool include_layer0 = false;
  int batch = 0;
  extract->add_option("--model", model)->required();
  extract->add_option("--corpus", corpus_in)->required()->check(CLI::ExistingFile);
  extract->add_option("--out", store_out)->required();
  extract->add_flag("--include-embedding-layer", include_layer0);
  extract->add_option("--batch", batch);

  // synth-store
  auto* synth = app.add_subcommand("synth-store", "write a synthetic store for a corpus");
  SynthesisOptions synth_opts;
  std::string signal = "separable";
  synth->add_option("--corpus", corpus_in)->required()->check(CLI::ExistingFile);
  synth->add_option("--out", store_out)->required();
  synth->add_option("--dim", synth_opts.dim);
  synth->add_option("--layers", synth_opts.layers);
  synth->add_option("--signal", signal)->check(CLI::IsMember({"separable", "random"}));
  synth->add_option("--offset", synth_opts.mean_offset);
  synth->add_option("--sigma", synth_opts.noise_sigma);
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("--model", synth_opts.model_name);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one probe");
  fs::path train_corpus;
  fs::path train_store;
  fs::path dev_corpus;
  fs::path dev_store;
  int layer = 12;
  fs::path probe_path;
  TrainFlags train_flags;
  train_cmd->add_option("--train-corpus", train_corpus)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--train-store", train_store)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev-corpus", dev_corpus)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev-store", dev_store)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--layer", layer)->required();
  train_cmd->add_option("--out", probe_path)->required();
  train_flags.add(train_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against gold");
  fs::path pred_path;
  fs::path gold_path;
  fs::path eval_store;
  fs::path report_out;
  bool baseline = false;
  eval_cmd->add_option("--gold", gold_path)->required()->check(CLI::ExistingFile);
  auto* pred_opt = eval_cmd->add_option("--pred", pred_path)->check(CLI::ExistingFile);
  auto* probe_opt = eval_cmd->add_option("--probe", probe_path)->check(CLI::ExistingFile);
  auto* store_opt = eval_cmd->add_option("--store", eval_store)->check(CLI::ExistingFile);
  auto* base_opt = eval_cmd->add_flag("--baseline", baseline, "score the verb-only baseline");
  eval_cmd->add_option("--out", report_out, "also write the report as JSON");
  probe_opt->needs(store_opt);
  store_opt->needs(probe_opt);
  pred_opt->excludes(probe_opt)->excludes(base_opt);
  probe_opt->excludes(base_opt);

  // exp1 / exp2
  fs::path config_path;
  unsigned threads = 0;
  fs::path output_override;
  auto* exp1 = app.add_subcommand("exp1", "layer sweep per model and training source");
  auto* exp2 = app.add_subcommand("exp2", "training with and without the evaluation verbs");
  for (auto* sub : {exp1, exp2}) {
    sub->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    sub->add_option("--threads", threads);
    sub->add_option("--output-dir", output_override);
  }

  // stats
  auto* stats = app.add_subcommand("stats", "corpus or stimuli statistics");
  fs::path stimuli_path;
  auto* corpus_opt = stats->add_option("--corpus", corpus_in)->check(CLI::ExistingFile);
  auto* stimuli_opt = stats->add_option("--stimuli", stimuli_path)->check(CLI::ExistingFile);
  corpus_opt->excludes(stimuli_opt);
  stats->require_option(1);

  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    sub->add_flag("--force", force, "overwrite existing outputs");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) {
    reversed.pop_back();
  }
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return kExitUsage;
  }

  try {
    if (*convert) {
      if (keep_existing(corpus_out, force, out)) {
        return kExitOk;
      }
      const auto pairs = load_minimal_pairs(pairs_in, pair_format == "text" ? PairFormat::PairedText : PairFormat::Jsonl);
      InventoryOptions inv_opts;
      if (!extra_verbs.empty()) {
        inv_opts.extra_forms = read_word_list(extra_verbs);
      }
      if (!exclude_verbs.empty()) {
        inv_opts.excluded_forms = read_word_list(exclude_verbs);
      }
      const auto inventory = build_verb_inventory(pairs, inv_opts);
      const auto sentences = convert_pairs(pairs, inventory);
      ensure_parent(corpus_out);
      write_corpus(corpus_out, sentences);
      out << "converted " << pairs.size() << " pairs into " << sentences.size() << " sentences ("
          << inventory.lemma_count() << " verb lemmas)\n";
      return kExitOk;
    }

    if (*process) {
      if (keep_existing(corpus_out, force, out)) {
        return kExitOk;
      }
      std::vector<M2Entry> entries;
      for (std::size_t f = 0; f < m2_in.size(); ++f) {
        M2Options opts;
        opts.annotator = annotator;
        opts.id_prefix = id_prefix.empty() ? m2_in[f].stem().string() + "-" : id_prefix + std::to_string(f) + "-";
        auto parsed = read_m2(m2_in[f], opts);
        for (const auto& w : parsed.warnings) {
          err << m2_in[f].string() << ':' << w.line << ": warning: " << w.message << '\n';
        }
        entries.insert(entries.end(), std::make_move_iterator(parsed.entries.begin()),
                       std::make_move_iterator(parsed.entries.end()));
      }
      const auto split = process_entries(entries, {targets.begin(), targets.end()}, *parse_provenance(source));
      ensure_parent(corpus_out);
      write_corpus(corpus_out, split.sentences);
      out << "kept " << split.sentences.size() << " of " << entries.size() << " sentences\n";
      return kExitOk;
    }

    if (*sample) {
      const auto first = out_dir / "sample0.jsonl";
      if (keep_existing(first, force, out)) {
        return kExitOk;
      }
      CorpusSplit pool{read_corpus(corpus_in), Provenance::WikEd, std::nullopt};
      fs::create_directories(out_dir);
      if (dev_size > 0) {
        auto split = split_dev(pool, dev_size, dev_seed);
        write_corpus(out_dir / "dev.jsonl", split.dev.sentences);
        write_corpus(out_dir / "pool.jsonl", split.pool.sentences);
        pool = std::move(split.pool);
      }
      const auto sets = sample_training_sets(pool, count, size, seed);
      for (std::size_t i = 0; i < sets.size(); ++i) {
        write_corpus(out_dir / ("sample" + std::to_string(i) + ".jsonl"), sets[i].sentences);
      }
      out << "wrote " << sets.size() << " samples of " << size << " sentences to " << out_dir.string() << '\n';
      return kExitOk;
    }

    if (*extract) {
      if (keep_existing(store_out, force, out)) {
        return kExitOk;
      }
      const char* env = std::getenv("GEDPROBE_EXTRACTOR");
      const std::string tool = env != nullptr && *env != '\0' ? env : "python3 -m gedprobe_extractor";
      ensure_parent(store_out);
      std::string cmd = tool + " --model " + shell_quote(model) + " --corpus " + shell_quote(corpus_in.string()) +
                        " --out " + shell_quote(store_out.string());
      if (include_layer0) {
        cmd += " --include-embedding-layer";
      }
      if (batch > 0) {
        cmd += " --batch " + std::to_string(batch);
      }
      out.flush();
      std::fflush(nullptr);
      const int status = std::system(cmd.c_str());
      if (status != 0) {
        throw DataError("extractor failed (status " + std::to_string(status) + "): " + cmd);
      }
      const auto store = read_store(store_out);
      const auto corpus = read_corpus(corpus_in);
      check_store_matches(store, corpus);
      out << "store " << store_out.string() << ": " << store.sentences().size() << " sentences, L=" << store.num_layers()
          << ", d=" << store.hidden_dim() << '\n';
      return kExitOk;
    }

    if (*synth) {
      if (keep_existing(store_out, force, out)) {
        return kExitOk;
      }
      synth_opts.signal = signal == "random" ? SyntheticSignal::Random : SyntheticSignal::LinearSeparable;
      const auto corpus = read_corpus(corpus_in);
      const auto store = synthesize_store(corpus, synth_opts);
      ensure_parent(store_out);
      write_store(store, store_out);
      out << "store " << store_out.string() << ": " << store.sentences().size() << " sentences\n";
      return kExitOk;
    }

    if (*train_cmd) {
      if (keep_existing(probe_path, force, out)) {
        return kExitOk;
      }
      const auto cfg = train_flags.config();
      const auto train_set = read_corpus(train_corpus);
      const auto dev_set = read_corpus(dev_corpus);
      const auto ts = read_store(train_store);
      const auto ds = read_store(dev_store);
      auto result = train(collect_vectors(ts, train_set, layer), collect_vectors(ds, dev_set, layer), cfg);
      for (const auto& w : result.warnings) {
        err << "warning: " << w << '\n';
      }
      result.probe.model = ts.model_name();
      result.probe.layer = layer;
      result.probe.provenance.corpus_id = train_corpus.filename().string();
      save_probe(result.probe, probe_path);
      const auto& best = result.trace[static_cast<std::size_t>(result.probe.provenance.best_epoch - 1)];
      out << "epochs " << result.trace.size() << ", best epoch " << result.probe.provenance.best_epoch << ", dev F1 "
          << fmt(best.dev_f1) << '\n';
      return kExitOk;
    }

    if (*eval_cmd) {
      const auto gold = read_corpus(gold_path);
      Predictions preds;
      std::string probe_id;
      if (!pred_path.empty()) {
        preds = predictions_from_corpus(read_corpus(pred_path));
        probe_id = pred_path.string();
      } else if (!probe_path.empty()) {
        const auto probe = load_probe(probe_path);
        preds = predict_sentences(probe, read_store(eval_store), gold);
        probe_id = probe_path.string();
      } else if (baseline) {
        preds = verb_only_baseline(gold);
        probe_id = std::string(kBaselineLabel);
      } else {
        throw UsageError("evaluate needs --pred, --probe with --store, or --baseline");
      }
      auto report = evaluate(preds, gold);
      report.probe_id = probe_id;
      report.eval_set_id = gold_path.string();
      print_prf(out, "overall", report.overall);
      for (const auto& [name, prf] : report.per_construction) {
        print_prf(out, name, prf);
      }
      if (!report_out.empty()) {
        nlohmann::ordered_json j;
        auto prf_json = [](const PRF& p) {
          return nlohmann::ordered_json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
                                        {"tp", p.counts.true_positives}, {"fp", p.counts.false_positives},
                                        {"fn", p.counts.false_negatives}};
        };
        j["probe_id"] = report.probe_id;
        j["eval_set_id"] = report.eval_set_id;
        j["overall"] = prf_json(report.overall);
        j["per_construction"] = nlohmann::ordered_json::object();
        for (const auto& [name, prf] : report.per_construction) {
          j["per_construction"][name] = prf_json(prf);
        }
        ensure_parent(report_out);
        std::ofstream(report_out, std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
      }
      return kExitOk;
    }

    if (*exp1 || *exp2) {
      auto cfg = ExperimentConfig::load(config_path);
      if (threads != 0) {
        cfg.threads = threads;
      }
      if (!output_override.empty()) {
        cfg.output_dir = output_override;
      }
      if (*exp1) {
        if (keep_existing(cfg.output_dir / "exp1" / "top_layers.md", force, out)) {
          return kExitOk;
        }
        const auto result = experiment1(cfg);
        out << "verb-only baseline F1 " << fmt(result.baseline.overall.f1) << '\n';
        for (const auto& f : result.files) {
          out << f.string() << '\n';
        }
      } else {
        if (keep_existing(cfg.output_dir / "exp2" / "difference.csv", force, out)) {
          return kExitOk;
        }
        const auto result = experiment2(cfg);
        out << "held out " << result.held_out.size() << " verb forms; verb-only baseline F1 "
            << fmt(result.baseline.overall.f1) << '\n';
        for (const auto& f : result.files) {
          out << f.string() << '\n';
        }
      }
      return kExitOk;
    }

    if (*stats) {
      if (!corpus_in.empty()) {
        const auto corpus = read_corpus(corpus_in);
        const auto s = corpus_stats(corpus);
        out << "sentences\tlength\terrors\n"
            << s.sentence_count << '\t' << fmt(s.mean_length, 1) << " ± " << fmt(s.std_length, 1) << '\t'
            << fmt(s.mean_errors, 1) << " ± " << fmt(s.std_errors, 1) << '\n';
      } else {
        const auto corpus = read_corpus(stimuli_path);
        out << "construction\tsentences\tlength\tlength (no period)\n";
        for (const auto& row : stimuli_stats(corpus)) {
          out << construction_label(row.construction) << '\t' << row.count << '\t' << fmt(row.mean_length, 1)
              << " ± " << fmt(row.std_length, 1) << '\t' << fmt(row.mean_length_no_period, 1) << " ± "
              << fmt(row.std_length_no_period, 1) << '\n';
        }
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace gedprobe
