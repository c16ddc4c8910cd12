#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "gedprobe/embedstore.hpp"
#include "gedprobe/probe.hpp"
#include "gedprobe/rng.hpp"

using namespace gedprobe;

namespace {

LabeledVectors vectors_of(const std::vector<std::vector<float>>& rows, const std::vector<int>& labels) {
  LabeledVectors v;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.append(rows[i], labels[i] != 0);
  }
  return v;
}

LabeledVectors synthetic(std::size_t sentences, std::uint64_t seed, SyntheticSignal signal, double scale = 1.0) {
  const auto corpus = fixtures::random_corpus(sentences, 10, 1.0, seed, "t");
  SynthesisOptions opts;
  opts.signal = signal;
  opts.seed = seed + 100;
  opts.layers = 1;
  opts.mean_offset = scale;
  opts.noise_sigma = 0.1 * scale;
  return collect_vectors(synthesize_store(corpus, opts), corpus, 1);
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("zero model predicts one half") {
    LinearProbe p;
    p.weights = {0.0, 0.0};
    const auto v = vectors_of({{3.0f, -7.0f}, {0.5f, 0.25f}}, {1, 0});
    const auto pred = predict(p, v);
    CHECK(pred.probabilities == std::vector<double>{0.5, 0.5});
    CHECK(pred.labels == std::vector<std::uint8_t>{1, 1});
  }

  TEST_CASE("hand-computed logistic") {
    LinearProbe p;
    p.weights = {1.0, -1.0};
    const std::vector<double> x{2.0, 1.0};
    CHECK(probability(p, std::span<const double>(x)) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(probability(p, std::span<const double>(x)) == 1.0 / (1.0 + std::exp(-1.0)));
  }

  TEST_CASE("large bias labels everything ungrammatical") {
    LinearProbe p;
    p.weights = {0.3, 0.1};
    p.bias = 1e6;
    const auto pred = predict(p, vectors_of({{-5.0f, -5.0f}, {1.0f, 2.0f}}, {0, 0}));
    CHECK(pred.labels == std::vector<std::uint8_t>{1, 1});
  }

  TEST_CASE("dimension mismatch") {
    LinearProbe p;
    p.weights = {1.0};
    CHECK_THROWS_AS(predict(p, vectors_of({{1.0f, 2.0f}}, {1})), std::invalid_argument);
    LabeledVectors v;
    v.append(std::vector<float>{1.0f}, true);
    CHECK_THROWS_AS(v.append(std::vector<float>{1.0f, 2.0f}, true), std::invalid_argument);
  }

  TEST_CASE("loss at the zero model is ln 2") {
    LinearProbe p;
    p.weights.assign(3, 0.0);
    const auto v = vectors_of({{1, 2, 3}, {-1, 0, 4}, {0, 0, 0}}, {1, 0, 1});
    CHECK(loss_and_grad(p, v, 0.5).loss == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("l2 term adds lambda w to the gradient") {
    LinearProbe p;
    p.weights = {0.2, -0.4};
    p.bias = 0.1;
    const auto v = vectors_of({{1, 2}, {-1, 0.5}}, {1, 0});
    const auto a = loss_and_grad(p, v, 0.0);
    const auto b = loss_and_grad(p, v, 0.3);
    CHECK(b.grad[0] - a.grad[0] == doctest::Approx(0.3 * 0.2));
    CHECK(b.grad[1] - a.grad[1] == doctest::Approx(0.3 * -0.4));
    CHECK(b.grad[2] == a.grad[2]);
  }

  TEST_CASE("gradient matches finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      LinearProbe p;
      const std::size_t d = 5;
      for (std::size_t k = 0; k < d; ++k) {
        p.weights.push_back(rng.normal());
      }
      p.bias = rng.normal();
      LabeledVectors v;
      for (int i = 0; i < 8; ++i) {
        std::vector<float> x(d);
        for (auto& e : x) {
          e = static_cast<float>(rng.normal());
        }
        v.append(x, rng.uniform() < 0.5);
      }
      const auto lg = loss_and_grad(p, v, 0.01);
      const double h = 1e-5;
      for (std::size_t k = 0; k <= d; ++k) {
        auto plus = p;
        auto minus = p;
        (k < d ? plus.weights[k] : plus.bias) += h;
        (k < d ? minus.weights[k] : minus.bias) -= h;
        const double numeric = (loss_and_grad(plus, v, 0.01).loss - loss_and_grad(minus, v, 0.01).loss) / (2 * h);
        const double denom = std::max(std::abs(numeric), std::abs(lg.grad[k]));
        CHECK(std::abs(numeric - lg.grad[k]) <= 1e-6 * std::max(denom, 1e-8));
      }
    }
  }

  TEST_CASE("separable data trains to near-perfect dev F1") {
    const auto tr = synthetic(200, 1, SyntheticSignal::LinearSeparable);
    const auto dev = synthetic(50, 2, SyntheticSignal::LinearSeparable);
    const auto r = train(tr, dev, TrainConfig{});
    CHECK(r.trace.size() <= 50);
    const auto& best = r.trace[static_cast<std::size_t>(r.probe.provenance.best_epoch - 1)];
    CHECK(best.dev_f1 >= 0.99);
  }

  TEST_CASE("early stopping invariants") {
    for (auto metric : {StoppingMetric::DevF1, StoppingMetric::DevLoss}) {
      const auto tr = synthetic(40, 3, SyntheticSignal::Random);
      const auto dev = synthetic(20, 4, SyntheticSignal::Random);
      TrainConfig cfg;
      cfg.max_epochs = 30;
      cfg.patience = 3;
      cfg.stopping_metric = metric;
      const auto r = train(tr, dev, cfg);
      const auto& pv = r.probe.provenance;
      CHECK(pv.epochs_run == static_cast<int>(r.trace.size()));
      CHECK(pv.epochs_run <= cfg.max_epochs);
      CHECK(pv.best_epoch >= 1);
      CHECK(pv.best_epoch <= pv.epochs_run);
      const auto& best = r.trace[static_cast<std::size_t>(pv.best_epoch - 1)];
      for (const auto& rec : r.trace) {
        if (metric == StoppingMetric::DevF1) {
          CHECK(rec.dev_f1 <= best.dev_f1);
        } else {
          CHECK(rec.dev_loss >= best.dev_loss);
        }
      }
      if (pv.epochs_run < cfg.max_epochs) {
        CHECK(pv.epochs_run - pv.best_epoch == cfg.patience);
      }
    }
  }

  TEST_CASE("single-class training data warns and predicts OK") {
    auto corpus = fixtures::random_corpus(30, 5, 0.0, 9, "z");
    SynthesisOptions opts;
    opts.layers = 1;
    const auto store = synthesize_store(corpus, opts);
    const auto tr = collect_vectors(store, corpus, 1);
    const auto r = train(tr, tr, TrainConfig{});
    CHECK(r.warnings.size() == 1);
    const auto pred = predict(r.probe, tr);
    for (auto l : pred.labels) {
      CHECK(l == 0);
    }
  }

  TEST_CASE("training is deterministic") {
    const auto tr = synthetic(60, 5, SyntheticSignal::LinearSeparable);
    const auto dev = synthetic(20, 6, SyntheticSignal::LinearSeparable);
    TrainConfig cfg;
    cfg.seed = 42;
    const auto a = train(tr, dev, cfg);
    const auto b = train(tr, dev, cfg);
    REQUIRE(a.probe.weights.size() == b.probe.weights.size());
    CHECK(std::memcmp(a.probe.weights.data(), b.probe.weights.data(), a.probe.weights.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(&a.probe.bias, &b.probe.bias, sizeof(double)) == 0);
  }

  TEST_CASE("scaling inputs keeps training-set decisions") {
    const auto tr = synthetic(60, 7, SyntheticSignal::LinearSeparable, 1.0);
    const auto scaled = synthetic(60, 7, SyntheticSignal::LinearSeparable, 3.0);
    const auto a = train(tr, tr, TrainConfig{});
    const auto b = train(scaled, scaled, TrainConfig{});
    CHECK(predict(a.probe, tr).labels == predict(b.probe, scaled).labels);
  }

  TEST_CASE("predict is order independent") {
    const auto v = synthetic(10, 8, SyntheticSignal::Random);
    LinearProbe p;
    p.weights.assign(v.dim, 0.0);
    p.weights[0] = 1.5;
    p.bias = -0.2;
    const auto fwd = predict(p, v);
    LabeledVectors rev;
    for (std::size_t i = v.size(); i-- > 0;) {
      rev.append(v.row(i), v.y[i] != 0);
    }
    const auto back = predict(p, rev);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(fwd.probabilities[i] == back.probabilities[v.size() - 1 - i]);
    }
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.patience = 50;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("probe json round trip") {
    fixtures::TempDir dir;
    LinearProbe p;
    p.model = "bert";
    p.layer = 7;
    p.weights = {0.1, -2.5e-7, 3.0};
    p.bias = -0.125;
    p.provenance = {"WIKED/sample2", 9, 23, 13};
    save_probe(p, dir / "p.json");
    const auto q = load_probe(dir / "p.json");
    CHECK(q.weights == p.weights);
    CHECK(q.bias == p.bias);
    CHECK(q.layer == 7);
    CHECK(q.provenance.corpus_id == "WIKED/sample2");
    CHECK(q.provenance.best_epoch == 13);
    CHECK_THROWS_AS(probe_from_json(R"({"model":"m","layer":1,"d":3,"weights":[1],"bias":0})"), DataError);
  }
}
