#include "gedprobe/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gedprobe/error.hpp"
#include "gedprobe/stimuli.hpp"

namespace gedprobe {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> LayerRange::layers() const {
  std::vector<int> out;
  for (int l = first; l <= last; ++l) {
    out.push_back(l);
  }
  return out;
}

namespace {

LayerRange layer_range(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw UsageError(std::string(what) + " must be [first, last]");
  }
  LayerRange r{j[0].get<int>(), j[1].get<int>()};
  if (r.first < 0 || r.last < r.first) {
    throw UsageError(std::string(what) + " must satisfy 0 <= first <= last");
  }
  return r;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  for (const auto& [key, unused] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

int parse_multiplier(const std::string& label) {
  std::size_t used = 0;
  int m = 0;
  try {
    m = std::stoi(label, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || label.substr(used) != "x") {
    throw UsageError("size label must look like 4x, got " + label);
  }
  return m;
}

StoppingMetric parse_metric(const std::string& s) {
  if (s == "dev_f1") {
    return StoppingMetric::DevF1;
  }
  if (s == "dev_loss") {
    return StoppingMetric::DevLoss;
  }
  throw UsageError("stopping_metric must be dev_f1 or dev_loss");
}

void run_tasks(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) {
    threads = std::max(1U, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= count) {
        return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  pool.clear();
  if (error) {
    std::rethrow_exception(error);
  }
}

void require_distinct_eval(const ExperimentConfig& cfg) {
  const auto eval = fs::weakly_canonical(cfg.corpora.eval);
  for (const auto& p : {cfg.corpora.wi_fce_train, cfg.corpora.wi_fce_dev, cfg.corpora.wiked_pool}) {
    if (!p.empty() && fs::weakly_canonical(p) == eval) {
      throw UsageError("evaluation corpus " + cfg.corpora.eval.string() + " is also configured as a training corpus");
    }
  }
  if (cfg.corpora.wiked_dev && fs::weakly_canonical(*cfg.corpora.wiked_dev) == eval) {
    throw UsageError("evaluation corpus is also configured as the WikEd dev corpus");
  }
}

void require_store_file(const ExperimentConfig& cfg, std::string_view model, std::string_view role,
                        const fs::path& corpus) {
  const auto path = store_path(cfg, model, role);
  if (!fs::exists(path)) {
    throw DataError("missing store " + path.string() + "; create it with: gedprobe extract --model " +
                    std::string(model) + " --corpus " + corpus.string() + " --out " + path.string());
  }
}

/// One training source: the sampled training sets plus the dev set, and the
/// store roles holding their vectors.
struct SourceData {
  std::string name;
  std::vector<CorpusSplit> train_sets;
  CorpusSplit dev;
  std::string train_role;
  std::string dev_role;
  fs::path train_corpus;
  fs::path dev_corpus;
};

struct WikedPool {
  CorpusSplit pool;
  CorpusSplit dev;
  std::string dev_role;
  fs::path dev_corpus;
};

WikedPool load_wiked(const ExperimentConfig& cfg) {
  WikedPool w;
  CorpusSplit all{read_corpus(cfg.corpora.wiked_pool), Provenance::WikEd, std::nullopt};
  if (cfg.corpora.wiked_dev) {
    w.pool = std::move(all);
    w.dev = CorpusSplit{read_corpus(*cfg.corpora.wiked_dev), Provenance::WikEd, std::nullopt};
    w.dev_role = kRoleWikedDev;
    w.dev_corpus = *cfg.corpora.wiked_dev;
  } else {
    auto split = split_dev(all, cfg.wiked_dev_size, cfg.dev_seed);
    w.pool = std::move(split.pool);
    w.dev = std::move(split.dev);
    w.dev_role = kRoleWikedPool;
    w.dev_corpus = cfg.corpora.wiked_pool;
  }
  return w;
}

std::vector<SourceData> load_sources(const ExperimentConfig& cfg) {
  std::vector<SourceData> out;
  for (auto src : cfg.train_sources) {
    SourceData d;
    d.name = provenance_name(src);
    if (src == Provenance::WiFce) {
      d.train_sets.push_back({read_corpus(cfg.corpora.wi_fce_train), Provenance::WiFce, std::nullopt});
      d.dev = {read_corpus(cfg.corpora.wi_fce_dev), Provenance::WiFce, std::nullopt};
      d.train_role = kRoleWiFceTrain;
      d.dev_role = kRoleWiFceDev;
      d.train_corpus = cfg.corpora.wi_fce_train;
      d.dev_corpus = cfg.corpora.wi_fce_dev;
    } else if (src == Provenance::WikEd) {
      auto w = load_wiked(cfg);
      d.train_sets = sample_training_sets(w.pool, cfg.sample_count, cfg.sample_size, cfg.seed);
      d.dev = std::move(w.dev);
      d.train_role = kRoleWikedPool;
      d.dev_role = w.dev_role;
      d.train_corpus = cfg.corpora.wiked_pool;
      d.dev_corpus = w.dev_corpus;
    } else {
      throw UsageError("train source must be WI_FCE or WIKED");
    }
    out.push_back(std::move(d));
  }
  return out;
}

struct ProbeJob {
  const EmbeddingStore* train_store;
  const EmbeddingStore* dev_store;
  const CorpusSplit* train;
  const CorpusSplit* dev;
  int layer;
  std::string model;
  std::string corpus_id;
  fs::path probe_path;
};

LinearProbe run_probe_job(const ProbeJob& job, const TrainConfig& train_cfg) {
  const auto train_vecs = collect_vectors(*job.train_store, job.train->sentences, job.layer);
  const auto dev_vecs = collect_vectors(*job.dev_store, job.dev->sentences, job.layer);
  auto result = train(train_vecs, dev_vecs, train_cfg);
  result.probe.model = job.model;
  result.probe.layer = job.layer;
  result.probe.provenance.corpus_id = job.corpus_id;
  save_probe(result.probe, job.probe_path);
  return std::move(result.probe);
}

std::string fixed2(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::vector<fs::path> emit_all(const ReportGrid& grid, const fs::path& stem) {
  std::vector<fs::path> files;
  for (auto [fmt, ext] : {std::pair{ReportFormat::Csv, ".csv"}, std::pair{ReportFormat::Markdown, ".md"},
                          std::pair{ReportFormat::PlotJson, ".json"}}) {
    auto path = stem;
    path += ext;
    emit_report(grid, fmt, path);
    files.push_back(path);
  }
  return files;
}

ReportGrid construction_grid(const std::string& title, const std::map<std::string, LayerReports>& by_model,
                             const EvalReport& baseline, const std::vector<int>& layers) {
  ReportGrid g;
  g.title = title;
  g.row_header = "model/construction";
  g.layers = layers;
  for (const auto& [model, lr] : by_model) {
    if (lr.runs.empty() || lr.runs.front().empty()) {
      continue;
    }
    std::vector<AggregateReport> per_layer;
    for (const auto& runs : lr.runs) {
      per_layer.push_back(aggregate(runs));
    }
    for (const auto& [name, unused] : per_layer.front().per_construction) {
      GridRow row{model + "/" + name, {}};
      for (const auto& agg : per_layer) {
        row.cells.push_back(agg.per_construction.at(name).f1);
      }
      g.rows.push_back(std::move(row));
    }
  }
  for (const auto& [name, prf] : baseline.per_construction) {
    g.rows.push_back({std::string(kBaselineLabel) + "/" + name, std::vector<MeanStd>(layers.size(), {prf.f1, 0.0})});
  }
  g.baseline = baseline.overall.f1;
  return g;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"models", "layers", "train_sources", "sample_count", "sample_size", "seed", "dev_seed",
                  "wiked_dev_size", "corpora", "store_dir", "output_dir", "train", "threads", "experiment2"},
                 "config");
  ExperimentConfig cfg;
  try {
    cfg.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("layers")) {
      cfg.layers = layer_range(j["layers"], "layers");
    }
    if (j.contains("train_sources")) {
      cfg.train_sources.clear();
      for (const auto& s : j["train_sources"].get<std::vector<std::string>>()) {
        auto p = parse_provenance(s);
        if (!p || *p == Provenance::Synthetic) {
          throw UsageError("train source must be WI_FCE or WIKED, got " + s);
        }
        cfg.train_sources.push_back(*p);
      }
    }
    cfg.sample_count = j.value("sample_count", cfg.sample_count);
    cfg.sample_size = j.value("sample_size", cfg.sample_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.dev_seed = j.value("dev_seed", cfg.dev_seed);
    cfg.wiked_dev_size = j.value("wiked_dev_size", cfg.wiked_dev_size);
    cfg.threads = j.value("threads", cfg.threads);

    const auto& c = j.at("corpora");
    reject_unknown(c, {"wi_fce_train", "wi_fce_dev", "wiked_pool", "wiked_dev", "eval"}, "corpora");
    auto corpus = [&](const char* key) {
      return c.contains(key) ? resolve(base_dir, c[key].get<std::string>()) : fs::path{};
    };
    cfg.corpora.wi_fce_train = corpus("wi_fce_train");
    cfg.corpora.wi_fce_dev = corpus("wi_fce_dev");
    cfg.corpora.wiked_pool = corpus("wiked_pool");
    if (c.contains("wiked_dev")) {
      cfg.corpora.wiked_dev = corpus("wiked_dev");
    }
    cfg.corpora.eval = resolve(base_dir, c.at("eval").get<std::string>());

    const char* env = std::getenv("GEDPROBE_WORKSPACE");
    const fs::path workspace = env != nullptr && *env != '\0' ? fs::path(env) : base_dir / "gedprobe-work";
    cfg.store_dir = j.contains("store_dir") ? resolve(base_dir, j["store_dir"].get<std::string>()) : workspace / "stores";
    cfg.output_dir =
        j.contains("output_dir") ? resolve(base_dir, j["output_dir"].get<std::string>()) : workspace / "results";

    if (j.contains("train")) {
      const auto& t = j["train"];
      reject_unknown(t, {"max_epochs", "patience", "learning_rate", "batch_size", "seed", "l2_penalty", "stopping_metric"},
                     "train");
      cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
      cfg.train.patience = t.value("patience", cfg.train.patience);
      cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.seed = t.value("seed", cfg.train.seed);
      cfg.train.l2_penalty = t.value("l2_penalty", cfg.train.l2_penalty);
      if (t.contains("stopping_metric")) {
        cfg.train.stopping_metric = parse_metric(t["stopping_metric"].get<std::string>());
      }
    }

    if (j.contains("experiment2")) {
      const auto& e = j["experiment2"];
      reject_unknown(e, {"model", "multipliers", "sizes", "base_size", "layers", "holdout_verbs", "exceptions", "seed"},
                     "experiment2");
      auto& x = cfg.experiment2;
      x.model = e.value("model", x.model);
      if (e.contains("multipliers")) {
        x.multipliers = e["multipliers"].get<std::vector<int>>();
      } else if (e.contains("sizes")) {
        // "1x", "4x", ... as in the figure labels
        x.multipliers.clear();
        for (const auto& label : e["sizes"].get<std::vector<std::string>>()) {
          x.multipliers.push_back(parse_multiplier(label));
        }
      }
      x.base_size = e.value("base_size", x.base_size);
      if (e.contains("layers")) {
        x.layers = layer_range(e["layers"], "experiment2.layers");
      }
      if (e.contains("holdout_verbs")) {
        x.holdout_verbs = resolve(base_dir, e["holdout_verbs"].get<std::string>());
      }
      if (e.contains("exceptions")) {
        x.exceptions = e["exceptions"].get<std::set<std::string>>();
      }
      x.seed = e.value("seed", x.seed);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }

  if (cfg.models.empty()) {
    throw UsageError("config lists no models");
  }
  if (cfg.sample_count < 1) {
    throw UsageError("sample_count must be at least 1");
  }
  for (int m : cfg.experiment2.multipliers) {
    if (m < 1) {
      throw UsageError("experiment2 multipliers must be positive");
    }
  }
  if (cfg.experiment2.exceptions.empty()) {
    cfg.experiment2.exceptions = be_forms();
  }
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot open config " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), path.parent_path());
}

fs::path store_path(const ExperimentConfig& cfg, std::string_view model, std::string_view role) {
  return cfg.store_dir / std::string(model) / (std::string(role) + ".gede");
}

EmbeddingStore open_store(const ExperimentConfig& cfg, std::string_view model, std::string_view role,
                          const fs::path& corpus) {
  require_store_file(cfg, model, role, corpus);
  return read_store(store_path(cfg, model, role));
}

Predictions predict_sentences(const LinearProbe& probe, const EmbeddingStore& store,
                              std::span<const AnnotatedSentence> sentences, double threshold) {
  Predictions out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    const auto m = word_vectors(store, s.source_id, probe.layer);
    if (m.rows() != s.tokens.size()) {
      throw IntegrityError("sentence " + s.source_id + " has " + std::to_string(s.tokens.size()) +
                           " tokens but the store aligns " + std::to_string(m.rows()) + " words");
    }
    SentencePrediction p{s.source_id, std::vector<std::uint8_t>(m.rows(), 0)};
    for (std::size_t w = 0; w < m.rows(); ++w) {
      p.labels[w] = probability(probe, m.row(w)) >= threshold ? 1 : 0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<MeanStd> overall_f1(const LayerReports& r, StdMode mode) {
  std::vector<MeanStd> out;
  for (const auto& runs : r.runs) {
    out.push_back(aggregate(runs, mode).overall.f1);
  }
  return out;
}

Experiment1Result experiment1(const ExperimentConfig& cfg) {
  require_distinct_eval(cfg);
  const auto layers = cfg.layers.layers();
  const auto sources = load_sources(cfg);

  // Every store must exist before any training starts.
  for (const auto& model : cfg.models) {
    for (const auto& src : sources) {
      require_store_file(cfg, model, src.train_role, src.train_corpus);
      require_store_file(cfg, model, src.dev_role, src.dev_corpus);
    }
    require_store_file(cfg, model, kRoleEval, cfg.corpora.eval);
  }

  std::map<std::pair<std::string, std::string>, EmbeddingStore> stores;
  for (const auto& model : cfg.models) {
    for (const auto& src : sources) {
      for (const auto& role : {src.train_role, src.dev_role}) {
        if (!stores.contains({model, role})) {
          stores.emplace(std::pair{model, role}, read_store(store_path(cfg, model, role)));
        }
      }
    }
  }

  const fs::path out_dir = cfg.output_dir / "exp1";
  std::vector<ProbeJob> jobs;
  struct JobKey {
    std::size_t model;
    std::size_t source;
    std::size_t sample;
    std::size_t layer;
  };
  std::vector<JobKey> keys;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const auto& model = cfg.models[m];
    for (std::size_t si = 0; si < sources.size(); ++si) {
      const auto& src = sources[si];
      for (std::size_t k = 0; k < src.train_sets.size(); ++k) {
        for (std::size_t li = 0; li < layers.size(); ++li) {
          const auto id = src.name + (src.train_sets.size() > 1 ? "/sample" + std::to_string(k) : std::string{});
          jobs.push_back({&stores.at({model, src.train_role}), &stores.at({model, src.dev_role}), &src.train_sets[k],
                          &src.dev, layers[li], model, id,
                          out_dir / "probes" / model / src.name /
                              ("sample" + std::to_string(k) + "_layer" + std::to_string(layers[li]) + ".json")});
          keys.push_back({m, si, k, li});
        }
      }
    }
  }

  std::vector<LinearProbe> probes(jobs.size());
  run_tasks(jobs.size(), cfg.threads, [&](std::size_t i) { probes[i] = run_probe_job(jobs[i], cfg.train); });
  stores.clear();

  // Evaluation starts only after all probes are trained.
  const auto eval_set = read_corpus(cfg.corpora.eval);
  Experiment1Result result;
  result.baseline = evaluate(verb_only_baseline(eval_set), eval_set);

  std::map<std::string, EmbeddingStore> eval_stores;
  for (const auto& model : cfg.models) {
    eval_stores.emplace(model, open_store(cfg, model, kRoleEval, cfg.corpora.eval));
  }
  std::vector<EvalReport> reports(jobs.size());
  run_tasks(jobs.size(), cfg.threads, [&](std::size_t i) {
    reports[i] = evaluate(predict_sentences(probes[i], eval_stores.at(jobs[i].model), eval_set), eval_set);
    reports[i].probe_id = jobs[i].probe_path.string();
    reports[i].eval_set_id = cfg.corpora.eval.string();
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& key = keys[i];
    auto& lr = result.reports[sources[key.source].name][cfg.models[key.model]];
    if (lr.layers.empty()) {
      lr.layers = layers;
      lr.runs.assign(layers.size(), {});
    }
    lr.runs[key.layer].push_back(reports[i]);
  }

  for (const auto& [source, by_model] : result.reports) {
    ReportGrid grid;
    grid.title = "F1 by layer, trained on " + source;
    grid.layers = layers;
    grid.baseline = result.baseline.overall.f1;
    for (const auto& model : cfg.models) {
      grid.rows.push_back({model, overall_f1(by_model.at(model))});
    }
    auto files = emit_all(grid, out_dir / (source + "_layers"));
    result.files.insert(result.files.end(), files.begin(), files.end());

    files = emit_all(construction_grid("F1 by construction, trained on " + source, by_model, result.baseline, layers),
                     out_dir / (source + "_constructions"));
    result.files.insert(result.files.end(), files.begin(), files.end());
  }

  // Best layer per model and source.
  std::string table = "| model |";
  std::string rule = "|---|";
  for (const auto& [source, unused] : result.reports) {
    table += " " + source + " layer | " + source + " F1 |";
    rule += "---:|---:|";
  }
  table += "\n" + rule + "\n";
  for (const auto& model : cfg.models) {
    table += "| " + model + " |";
    for (const auto& [source, by_model] : result.reports) {
      const auto f1 = overall_f1(by_model.at(model));
      const auto best = std::max_element(f1.begin(), f1.end(),
                                         [](const MeanStd& a, const MeanStd& b) { return a.mean < b.mean; });
      const auto idx = static_cast<std::size_t>(best - f1.begin());
      table += " " + std::to_string(layers[idx]) + " | " + fixed2(best->mean) +
               (by_model.at(model).runs[idx].size() > 1 ? " ± " + fixed2(best->std) : std::string{}) + " |";
    }
    table += "\n";
  }
  table += "| " + std::string(kBaselineLabel) + " |";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    table += " - | " + fixed2(result.baseline.overall.f1) + " |";
  }
  table += "\n";
  const auto top = out_dir / "top_layers.md";
  std::ofstream(top, std::ios::binary | std::ios::trunc) << table;
  result.files.push_back(top);
  return result;
}

Experiment2Result experiment2(const ExperimentConfig& cfg) {
  require_distinct_eval(cfg);
  const auto& x = cfg.experiment2;
  const auto layers = x.layers.layers();
  auto wiked = load_wiked(cfg);

  require_store_file(cfg, x.model, kRoleWikedPool, cfg.corpora.wiked_pool);
  require_store_file(cfg, x.model, wiked.dev_role, wiked.dev_corpus);
  require_store_file(cfg, x.model, kRoleEval, cfg.corpora.eval);

  Experiment2Result result;
  if (x.holdout_verbs) {
    std::ifstream in(*x.holdout_verbs);
    if (!in) {
      throw DataError("cannot open holdout verb list " + x.holdout_verbs->string());
    }
    std::set<std::string> forms;
    for (std::string line; std::getline(in, line);) {
      std::istringstream words(line);
      for (std::string w; words >> w;) {
        forms.insert(to_lower(w));
      }
    }
    result.held_out = expand_lemmas(lemmatize_forms(forms));
  } else {
    // Verb forms come from the evaluation set's verb positions only; no labels are read.
    std::set<std::string> forms;
    for (const auto& s : read_corpus(cfg.corpora.eval)) {
      if (s.verb_positions) {
        for (auto i : *s.verb_positions) {
          forms.insert(to_lower(s.tokens[i]));
        }
      }
    }
    result.held_out = expand_lemmas(lemmatize_forms(forms));
  }

  const auto pool_without = verb_holdout(wiked.pool, result.held_out, x.exceptions);
  const auto dev_without = verb_holdout(wiked.dev, result.held_out, x.exceptions);
  if (dev_without.sentences.empty()) {
    throw DataError("no dev sentences remain after removing held-out verbs");
  }

  struct SizeSets {
    int multiplier;
    std::size_t size;
    std::vector<CorpusSplit> with;
    std::vector<CorpusSplit> without;
  };
  std::vector<SizeSets> sizes;
  for (std::size_t mi = 0; mi < x.multipliers.size(); ++mi) {
    const auto size = x.base_size * static_cast<std::size_t>(x.multipliers[mi]);
    if (pool_without.sentences.size() < size) {
      throw DataError("filtered WikEd pool has " + std::to_string(pool_without.sentences.size()) +
                      " sentences; " + std::to_string(size) + " requested for " +
                      std::to_string(x.multipliers[mi]) + "x");
    }
    // Shared seeds pair the two variants sample by sample.
    const auto seed = x.seed + 1009 * mi;
    sizes.push_back({x.multipliers[mi], size, sample_training_sets(wiked.pool, cfg.sample_count, size, seed),
                     sample_training_sets(pool_without, cfg.sample_count, size, seed)});
  }

  const auto pool_store = read_store(store_path(cfg, x.model, kRoleWikedPool));
  const auto dev_store_holder = wiked.dev_role == kRoleWikedPool
                                    ? std::optional<EmbeddingStore>{}
                                    : std::optional<EmbeddingStore>{read_store(store_path(cfg, x.model, wiked.dev_role))};
  const EmbeddingStore& dev_store = dev_store_holder ? *dev_store_holder : pool_store;

  const fs::path out_dir = cfg.output_dir / "exp2";
  std::vector<ProbeJob> jobs;
  for (const auto& s : sizes) {
    for (const bool with : {true, false}) {
      const auto& sets = with ? s.with : s.without;
      const auto& dev = with ? wiked.dev : dev_without;
      const std::string variant = with ? "with" : "without";
      for (std::size_t k = 0; k < sets.size(); ++k) {
        for (int layer : layers) {
          jobs.push_back({&pool_store, &dev_store, &sets[k], &dev, layer, x.model,
                          "WIKED/" + std::to_string(s.multiplier) + "x/" + variant + "/sample" + std::to_string(k),
                          out_dir / "probes" / (std::to_string(s.multiplier) + "x") / variant /
                              ("sample" + std::to_string(k) + "_layer" + std::to_string(layer) + ".json")});
        }
      }
    }
  }
  std::vector<LinearProbe> probes(jobs.size());
  run_tasks(jobs.size(), cfg.threads, [&](std::size_t i) { probes[i] = run_probe_job(jobs[i], cfg.train); });

  const auto eval_set = mask_be_verbs(read_corpus(cfg.corpora.eval));
  result.baseline = evaluate(verb_only_baseline(eval_set), eval_set);
  const auto eval_store = open_store(cfg, x.model, kRoleEval, cfg.corpora.eval);
  std::vector<EvalReport> reports(jobs.size());
  run_tasks(jobs.size(), cfg.threads, [&](std::size_t i) {
    reports[i] = evaluate(predict_sentences(probes[i], eval_store, eval_set), eval_set);
    reports[i].probe_id = jobs[i].probe_path.string();
    reports[i].eval_set_id = cfg.corpora.eval.string() + " (be-masked)";
  });

  std::size_t next = 0;
  ReportGrid with_grid{"F1 with held-out verbs in training", "size", layers, {}, result.baseline.overall.f1};
  ReportGrid without_grid{"F1 without held-out verbs in training", "size", layers, {}, result.baseline.overall.f1};
  ReportGrid diff_grid{"F1 difference (with - without)", "size", layers, {}, std::nullopt};
  for (const auto& s : sizes) {
    Experiment2Cell cell;
    cell.multiplier = s.multiplier;
    cell.size = s.size;
    for (auto* lr : {&cell.with_verbs, &cell.without_verbs}) {
      lr->layers = layers;
      lr->runs.assign(layers.size(), {});
      for (std::size_t k = 0; k < cfg.sample_count; ++k) {
        for (std::size_t li = 0; li < layers.size(); ++li) {
          lr->runs[li].push_back(reports[next++]);
        }
      }
    }
    for (std::size_t li = 0; li < layers.size(); ++li) {
      std::vector<double> deltas;
      for (std::size_t k = 0; k < cfg.sample_count; ++k) {
        deltas.push_back(cell.with_verbs.runs[li][k].overall.f1 - cell.without_verbs.runs[li][k].overall.f1);
      }
      cell.difference.push_back(mean_std(deltas));
    }
    const auto label = std::to_string(s.multiplier) + "x (" + std::to_string(s.size) + ")";
    with_grid.rows.push_back({label, overall_f1(cell.with_verbs)});
    without_grid.rows.push_back({label, overall_f1(cell.without_verbs)});
    diff_grid.rows.push_back({label, cell.difference});
    result.cells.push_back(std::move(cell));
  }
  for (const auto& [grid, stem] : {std::pair{&with_grid, "with_verbs"}, std::pair{&without_grid, "without_verbs"},
                                   std::pair{&diff_grid, "difference"}}) {
    auto files = emit_all(*grid, out_dir / stem);
    result.files.insert(result.files.end(), files.begin(), files.end());
  }
  return result;
}

}  // namespace gedprobe
