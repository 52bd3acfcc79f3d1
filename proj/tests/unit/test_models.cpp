#include <cmath>
#include <numeric>

#include "doctest.h"
#include "exist/errors.hpp"
#include "exist/models.hpp"
#include "gradcases.hpp"
#include "synthetic.hpp"

using namespace exist;

namespace {

ModelSpec small_spec(Head head, Task task = Task::task1) {
  ModelSpec s;
  s.head = head;
  s.task = task;
  s.embedding_dim = 8;
  s.conv_channels = 4;
  s.hidden = 6;
  s.lstm_units = 3;
  s.max_len = 16;
  return s;
}

struct Encoded {
  Vocab vocab;
  EncodedSet set;
};

Encoded encode_corpus(const Dataset& d, Task task, std::size_t max_len) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& e : d.examples) corpus.push_back(preprocess_tokens(e.text));
  Encoded out{build_vocab(corpus), {}};
  out.set = encode_dataset(d, out.vocab, task, max_len);
  return out;
}

}  // namespace

TEST_CASE("spec shape contracts") {
  auto s = small_spec(Head::multicnn);
  CHECK(s.conv_widths() == std::vector<std::size_t>{4, 6, 8});
  CHECK(small_spec(Head::cnn).conv_widths() == std::vector<std::size_t>{6});
  CHECK(s.output_width() == 1);
  CHECK(small_spec(Head::nbow, Task::task2).output_width() == 6);

  const auto m = build_model<float>(s, EmbeddingInit{50, nullptr, 0}, 1);
  REQUIRE(m.conv_filters.size() == 3);
  CHECK(m.conv_filters[0].value.shape == Shape{4, 4, 8});
  CHECK(m.conv_filters[1].value.shape == Shape{4, 6, 8});
  CHECK(m.conv_filters[2].value.shape == Shape{4, 8, 8});
  CHECK(m.head_width() == 12);
  for (std::size_t i = 0; i < 8; ++i) CHECK(m.embedding.value[i] == 0.0f);

  ModelSpec big;
  big.embedding_dim = 100;
  CHECK(build_model<float>(big, EmbeddingInit{1000, nullptr, 0}, 1).embedding.value.shape == Shape{1000, 100});

  CHECK(small_spec(Head::bilstm).to_config() != small_spec(Head::lstm).to_config());
  CHECK(ModelSpec::from_config(s.to_config()) == s);
  s.max_len = 5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(parse_head("bilstm") == Head::bilstm);
  CHECK(parse_embedding_source("table-finetune") == EmbeddingSource::table_finetuned);
  CHECK_THROWS_AS(parse_head("transformer"), ConfigError);
}

TEST_CASE("nbow over an all-PAD input gives a zero head output") {
  auto spec = small_spec(Head::nbow, Task::task2);
  auto m = build_model<double>(spec, EmbeddingInit{10, nullptr, 0}, 3);
  for (auto* p : {&m.hidden_b, &m.out_b}) p->value.fill(0.0);
  Batch<double> b;
  b.size = 1;
  b.len = 4;
  b.ids.assign(4, 0);
  b.lengths = {0};
  b.targets = {0};
  Tape<double> tape;
  Rng rng(1);
  const Var logits = m.forward(tape, b, false, rng);
  // Zero head output and zero biases give zero logits.
  for (double z : tape.value(logits).data) CHECK(z == 0.0);
}

TEST_CASE("prediction conventions") {
  const auto d = testing::separable_corpus(10, 2);
  auto enc = encode_corpus(d, Task::task2, 16);
  auto m = build_model<float>(small_spec(Head::cnn, Task::task2), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 4);
  m.out_w.value.fill(0.0f);
  m.out_b.value.fill(0.0f);
  for (const auto& p : predict(m, enc.set)) {
    CHECK(p.label == 0);
    for (double q : p.probabilities) CHECK(q == doctest::Approx(1.0 / 6.0));
  }

  auto enc1 = encode_corpus(d, Task::task1, 16);
  auto m1 = build_model<float>(small_spec(Head::nbow), EmbeddingInit{enc1.vocab.size(), nullptr, 0}, 4);
  m1.out_w.value.fill(0.0f);
  m1.out_b.value.fill(0.0f);
  for (const auto& p : predict(m1, enc1.set)) {
    CHECK(p.probabilities.at(0) == 0.5);
    CHECK(p.label == 1);
  }

  auto m2 = build_model<float>(small_spec(Head::bilstm, Task::task2), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 5);
  for (const auto& p : predict(m2, enc.set)) {
    CHECK(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("class weights") {
  Dataset balanced = testing::separable_corpus(10, 1, true);
  for (double w : compute_class_weights(balanced, Task::task1).weights) CHECK(w == doctest::Approx(1.0));

  Dataset skew;
  for (int i = 0; i < 100; ++i) {
    skew.examples.push_back(testing::make_example(std::to_string(i),
                                                  i < 90 ? Task2Label::non_sexist : Task2Label::objectification, "x"));
  }
  const auto w = compute_class_weights(skew, Task::task1).weights;
  CHECK(w[0] == doctest::Approx(100.0 / 180.0));
  CHECK(w[1] == doctest::Approx(5.0));

  Dataset single;
  for (int i = 0; i < 4; ++i) single.examples.push_back(testing::make_example(std::to_string(i), Task2Label::non_sexist, "x"));
  const auto ws = compute_class_weights(single, Task::task1).weights;
  CHECK(ws[0] == doctest::Approx(0.5));
  CHECK(ws[1] == doctest::Approx(0.5));
}

TEST_CASE("weighted loss scales linearly with the weights") {
  Tape<double> tape;
  const Var z = tape.constant(Tensor<double>({3, 6}, {0.1, -0.3, 0.7, 0.2, 0.0, 1.0, 0.4, 0.4, -1.0, 0.3, 0.2, 0.1,
                                                      -0.2, 0.5, 0.9, 0.0, 0.3, -0.7}));
  const std::vector<int> y = {2, 0, 5};
  const std::vector<double> w = {1.0, 0.5, 2.0, 1.5, 0.7, 3.0};
  std::vector<double> w3(w);
  for (auto& v : w3) v *= 3.0;
  const double a = tape.value(nn::cross_entropy_with_logits(tape, z, y, w))[0];
  const double b = tape.value(nn::cross_entropy_with_logits(tape, z, y, w3))[0];
  CHECK(b == doctest::Approx(3.0 * a).epsilon(1e-15));
}

TEST_CASE("early stopping with an injected validation curve") {
  const auto d = testing::separable_corpus(16, 7);
  auto enc = encode_corpus(d, Task::task1, 16);
  auto m = build_model<float>(small_spec(Head::nbow), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 8);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  std::vector<Tensor<float>> snapshot;
  const auto history = train(m, enc.set, enc.set, cfg, {}, [&](Model<float>& model, std::size_t epoch) {
    if (epoch == 3) {
      for (const auto* p : model.parameters()) snapshot.push_back(p->value);
    }
    return epoch == 3 ? 0.9 : epoch < 3 ? 0.2 * static_cast<double>(epoch) : 0.85;
  });
  CHECK(history.best_epoch == 3);
  CHECK(history.stopped_epoch == 18);
  CHECK(history.epochs.size() == 18);
  const auto params = m.parameters();
  REQUIRE(params.size() == snapshot.size());
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i]->value == snapshot[i]);

  auto m2 = build_model<float>(small_spec(Head::nbow), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 8);
  cfg.max_epochs = 50;
  cfg.patience = 50;
  cfg.learning_rate = 1e-3;
  const auto h2 = train(m2, enc.set, enc.set, cfg, {}, [](Model<float>&, std::size_t e) { return e / 100.0; });
  CHECK(h2.stopped_epoch == 50);
  CHECK(h2.best_epoch == 50);
}

TEST_CASE("training rejects empty sets") {
  const auto d = testing::separable_corpus(8, 7);
  auto enc = encode_corpus(d, Task::task1, 16);
  auto m = build_model<float>(small_spec(Head::nbow), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 8);
  EncodedSet empty;
  CHECK_THROWS_AS(train(m, empty, enc.set, TrainConfig{}), SizeError);
  CHECK_THROWS_AS(train(m, enc.set, empty, TrainConfig{}), SizeError);
}

TEST_CASE("training is deterministic in the seed") {
  const auto d = testing::separable_corpus(24, 9);
  auto enc = encode_corpus(d, Task::task2, 16);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 1e-2;
  cfg.seed = 77;
  auto a = build_model<float>(small_spec(Head::multicnn, Task::task2), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 1);
  auto b = build_model<float>(small_spec(Head::multicnn, Task::task2), EmbeddingInit{enc.vocab.size(), nullptr, 0}, 1);
  train(a, enc.set, enc.set, cfg);
  train(b, enc.set, enc.set, cfg);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("gradients of representative heads") {
  using testing::GradCase;
  for (const GradCase c : {GradCase{Head::multicnn, EmbeddingSource::learned, Task::task2},
                           GradCase{Head::bilstm, EmbeddingSource::contextual, Task::task1},
                           GradCase{Head::nbow, EmbeddingSource::table_finetuned, Task::task2}}) {
    const auto r = testing::run_grad_case(c, 21);
    CAPTURE(to_string(c.head));
    CAPTURE(r.worst_parameter);
    CAPTURE(r.worst_index);
    CHECK(r.coordinates > 0);
    CHECK(r.max_relative_error < 1e-4);
  }
  const std::vector<double> w = {0.7, 1.9, 1.0, 2.5, 0.4, 1.1};
  const auto r = testing::run_grad_case({Head::cnn, EmbeddingSource::learned, Task::task2}, 5, w);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("contextual inputs must cover every example") {
  const auto d = testing::separable_corpus(3, 1);
  ContextualStore store(4);
  store.add("s0", 2, std::vector<float>(8, 1.0f));
  CHECK_THROWS_AS(contextual_dataset(d, store, Task::task1, 8), ConfigError);
  store.add("s1", 20, std::vector<float>(80, 1.0f));
  store.add("s2", 1, std::vector<float>(4, 1.0f));
  const auto enc = contextual_dataset(d, store, Task::task1, 8);
  CHECK(enc.is_contextual());
  CHECK(enc.truncated == 1);
  CHECK(enc.lengths == std::vector<std::size_t>{2, 8, 1});
}
