#include "exist/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "exist/analysis.hpp"
#include "exist/checkpoint.hpp"
#include "exist/errors.hpp"
#include "exist/preprocess.hpp"
#include "exist/rng.hpp"

namespace exist {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Embedding choice

std::string EmbeddingChoice::to_string() const {
  std::string s(exist::to_string(source));
  for (std::size_t i = 0; i < paths.size(); ++i) s += (i == 0 ? ":" : ",") + paths[i];
  return s;
}

EmbeddingChoice parse_embedding_choice(std::string_view text) {
  EmbeddingChoice c;
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  c.source = parse_embedding_source(kind);
  if (c.source == EmbeddingSource::learned) {
    if (colon != std::string_view::npos) throw ConfigError("learned embeddings take no path");
    return c;
  }
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw ConfigError("embedding source '" + std::string(kind) + "' needs a path (" + std::string(kind) + ":PATH)");
  }
  std::string rest(text.substr(colon + 1));
  if (c.source != EmbeddingSource::contextual) {
    c.paths.push_back(rest);
    return c;
  }
  std::stringstream ss(rest);
  for (std::string p; std::getline(ss, p, ',');) {
    if (p.empty()) throw ConfigError("empty path in contextual embedding list");
    c.paths.push_back(p);
  }
  return c;
}

ContextualStore load_contextual_files(std::span<const std::string> paths) {
  if (paths.empty()) throw ConfigError("no contextual embedding files given");
  ContextualStore merged = load_contextual(paths[0]);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const auto next = load_contextual(paths[i]);
    if (next.dim() != merged.dim()) {
      throw ShapeError("contextual files disagree on width: " + std::to_string(merged.dim()) + " vs " +
                       std::to_string(next.dim()) + " in " + paths[i]);
    }
    for (const auto& r : next.records()) merged.add(r.id, r.length, r.values);
  }
  return merged;
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

std::string ops_string(std::span<const EdaOp> ops) {
  std::string s;
  for (const auto op : ops) {
    if (!s.empty()) s += ',';
    s += op == EdaOp::synonym_replacement ? "sr" : op == EdaOp::random_insertion ? "ri" : "rs";
  }
  return s;
}

}  // namespace

json ExperimentConfig::to_json() const {
  return json{
      {"model", spec.to_config()},
      {"embeddings", embeddings.to_string()},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"max_epochs", train.max_epochs},
        {"patience", train.patience},
        {"batch_size", train.batch_size},
        {"dropout", train.dropout_rate},
        {"seed", train.seed}}},
      {"augment", {{"n_aug", n_aug}, {"rate", aug_rate}, {"ops", ops_string(aug_ops)}, {"lexicon", lexicon_path}}},
  };
}

EncodedSet encode_for(const ModelSpec& spec, const Dataset& d, const Vocab* vocab, const ContextualStore* store) {
  if (spec.uses_vocab()) {
    if (!vocab) throw ConfigError("token model needs a vocabulary");
    return encode_dataset(d, *vocab, spec.task, spec.max_len);
  }
  if (!store) throw ConfigError("contextual model needs contextual embeddings (--embeddings contextual:PATH)");
  return contextual_dataset(d, *store, spec.task, spec.max_len);
}

Evaluation evaluate_model(Model<float>& model, const Dataset& test, const Vocab* vocab, const ContextualStore* store) {
  const auto enc = encode_for(model.spec, test, vocab, store);
  Evaluation e;
  e.truncated = enc.truncated;
  e.predictions = predict(model, enc);
  const auto preds = predicted_labels(e.predictions);
  e.confusion = confusion_matrix(enc.labels, preds, model.spec.task);
  e.metrics = metrics(e.confusion);
  return e;
}

Experiment::Experiment(ExperimentConfig cfg, const Dataset& train_data) : cfg_(std::move(cfg)) {
  cfg_.spec.source = cfg_.embeddings.source;
  cfg_.spec.embedding_path = cfg_.embeddings.paths.empty() ? std::string() : cfg_.embeddings.paths.front();
  cfg_.spec.dropout_rate = cfg_.train.dropout_rate;
  cfg_.spec.validate();
  cfg_.train.validate();

  auto [train, val] = split_train_val(train_data);
  if (cfg_.n_aug > 0) {
    if (cfg_.lexicon_path.empty()) throw ConfigError("augmentation needs a synonym lexicon (--lexicon)");
    const Lexicon lexicon = Lexicon::load(cfg_.lexicon_path);
    for (auto& ex : train.examples) ex.text = normalize(ex.text);
    EdaConfig eda;
    eda.rate = cfg_.aug_rate;
    eda.n_aug = cfg_.n_aug;
    eda.ops = cfg_.aug_ops;
    eda.seed = cfg_.train.seed;
    train = augment_dataset(train, eda, lexicon);
  }
  train_ = std::move(train);
  val_ = std::move(val);

  if (cfg_.spec.uses_vocab()) {
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(train_.size());
    for (const auto& ex : train_.examples) corpus.push_back(preprocess_tokens(ex.text));
    vocab_ = build_vocab(corpus);
    if (cfg_.spec.source != EmbeddingSource::learned) {
      table_ = load_pretrained_table(cfg_.embeddings.paths.at(0), vocab_);
      table_->trainable = cfg_.spec.source == EmbeddingSource::table_finetuned;
    }
  } else {
    store_ = std::make_unique<ContextualStore>(load_contextual_files(cfg_.embeddings.paths));
  }
  train_enc_ = encode_for(cfg_.spec, train_, vocab(), store());
  val_enc_ = encode_for(cfg_.spec, val_, vocab(), store());
  if (cfg_.spec.use_class_weights) class_weights_ = compute_class_weights(train_, cfg_.spec.task).weights;
}

FittedModel Experiment::fit(std::uint64_t seed) const {
  EmbeddingInit init;
  init.vocab_size = vocab_.size();
  init.table = table_ ? &*table_ : nullptr;
  init.contextual_dim = store_ ? store_->dim() : 0;
  TrainConfig tc = cfg_.train;
  tc.seed = seed;
  FittedModel f{build_model<float>(cfg_.spec, init, seed), {}};
  f.history = exist::train(f.model, train_enc_, val_enc_, tc, class_weights_);
  return f;
}

Evaluation Experiment::evaluate(Model<float>& model, const Dataset& test) const {
  return evaluate_model(model, test, vocab(), store());
}

json to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const auto& e = h.epochs[i];
    epochs.push_back({{"epoch", i + 1},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_accuracy", e.val_accuracy}});
  }
  return {{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"stopped_epoch", h.stopped_epoch}};
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Collects provenance for one command and writes manifest.json next to its outputs.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args, fs::path out_dir)
      : out_dir_(std::move(out_dir)) {
    doc_["tool"] = "exist";
    doc_["version"] = kVersion;
    doc_["command"] = std::move(command);
    doc_["argv"] = args;
    doc_["started_at"] = utc_now();
    doc_["datasets"] = json::object();
    doc_["outputs"] = json::object();
    doc_["seeds"] = json::array();
  }

  json& doc() { return doc_; }
  const fs::path& dir() const { return out_dir_; }

  void dataset(const std::string& role, const fs::path& path) {
    doc_["datasets"][role] = {{"path", fs::absolute(path).string()}, {"fnv1a64", file_hash(path)}};
  }

  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return out_dir_ / name;
  }

  void finish() {
    for (const auto& name : outputs_) doc_["outputs"][name] = file_hash(out_dir_ / name);
    doc_["finished_at"] = utc_now();
    write_text(out_dir_ / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  fs::path out_dir_;
  std::vector<std::string> outputs_;
};

struct Options {
  std::string data, train, test, reference, out, lexicon, manifest;
  std::vector<std::string> checkpoints;
  std::string embeddings = "learned";
  std::string model = "multicnn";
  std::string ops = "sr,ri,rs";
  int task = 1;
  std::uint64_t seed = 0;
  std::size_t epochs = 50, patience = 15, batch_size = 32, max_len = 128;
  std::size_t n_runs = 5, n_aug = 8, train_aug = 0;
  std::size_t embedding_dim = 100, hidden = 100, channels = 100, lstm_units = 100;
  double dropout = 0.2, lr = 5e-5, rate = 0.05;
  bool class_weights = false;
};

Task task_of(int t) { return t == 2 ? Task::task2 : Task::task1; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void print_metrics(std::ostream& out, const Metrics& m) {
  out << "accuracy         " << fmt(m.accuracy) << '\n'
      << "macro_precision  " << fmt(m.macro_precision) << '\n'
      << "macro_recall     " << fmt(m.macro_recall) << '\n'
      << "macro_f1         " << fmt(m.macro_f1) << '\n';
}

void note_truncation(std::ostream& err, const char* what, std::size_t truncated, std::size_t total) {
  if (truncated > 0) {
    err << "note: " << truncated << " of " << total << ' ' << what << " examples truncated to max_len tokens\n";
  }
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig c;
  c.embeddings = parse_embedding_choice(o.embeddings);
  c.spec.head = parse_head(o.model);
  c.spec.task = task_of(o.task);
  c.spec.embedding_dim = o.embedding_dim;
  c.spec.hidden = o.hidden;
  c.spec.conv_channels = o.channels;
  c.spec.lstm_units = o.lstm_units;
  c.spec.max_len = o.max_len;
  c.spec.use_class_weights = o.class_weights;
  c.train.learning_rate = o.lr;
  c.train.max_epochs = o.epochs;
  c.train.patience = o.patience;
  c.train.batch_size = o.batch_size;
  c.train.dropout_rate = o.dropout;
  c.train.seed = o.seed;
  c.n_aug = o.train_aug;
  c.aug_rate = o.rate;
  c.aug_ops = parse_eda_ops(o.ops);
  c.lexicon_path = o.lexicon;
  return c;
}

void record_inputs(Manifest& m, const ExperimentConfig& c) {
  for (std::size_t i = 0; i < c.embeddings.paths.size(); ++i) {
    m.dataset("embeddings" + (i == 0 ? std::string() : std::to_string(i)), c.embeddings.paths[i]);
  }
  if (c.n_aug > 0) m.dataset("lexicon", c.lexicon_path);
}

// --- subcommands ----------------------------------------------------------

int cmd_preprocess(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  Dataset d = load_dataset(o.data);
  for (auto& ex : d.examples) ex.text = normalize(ex.text);
  fs::create_directories(o.out);
  Manifest m("preprocess", args, o.out);
  m.dataset("input", o.data);
  save_dataset(m.output("preprocessed.tsv"), d);
  m.finish();
  out << "wrote " << d.size() << " examples to " << (m.dir() / "preprocessed.tsv").string() << '\n';
  return 0;
}

int cmd_augment(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const Dataset d = load_dataset(o.data);
  EdaConfig cfg;
  cfg.rate = o.rate;
  cfg.n_aug = o.n_aug;
  cfg.ops = parse_eda_ops(o.ops);
  cfg.seed = o.seed;
  cfg.validate();
  const Lexicon lexicon = o.lexicon.empty() ? Lexicon() : Lexicon::load(o.lexicon);
  if (lexicon.empty() && o.n_aug > 0) out << "warning: empty lexicon; only random swaps will change the text\n";
  const Dataset aug = augment_dataset(d, cfg, lexicon);
  fs::create_directories(o.out);
  Manifest m("augment", args, o.out);
  m.dataset("input", o.data);
  if (!o.lexicon.empty()) m.dataset("lexicon", o.lexicon);
  m.doc()["seeds"].push_back(o.seed);
  m.doc()["config"] = {{"n_aug", cfg.n_aug}, {"rate", cfg.rate}, {"ops", ops_string(cfg.ops)}};
  save_dataset(m.output("augmented.tsv"), aug);
  m.finish();
  out << "wrote " << aug.size() << " examples (" << d.size() << " originals) to "
      << (m.dir() / "augmented.tsv").string() << '\n';
  return 0;
}

int cmd_train(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(o.data);
  const Experiment exp(experiment_config(o), data);
  note_truncation(err, "training", exp.truncated_train(), exp.train_split().size());
  auto fitted = exp.fit(o.seed);

  fs::create_directories(o.out);
  Manifest m("train", args, o.out);
  m.dataset("train", o.data);
  record_inputs(m, exp.config());
  m.doc()["config"] = exp.config().to_json();
  m.doc()["seeds"].push_back(o.seed);
  save_checkpoint(m.output("model.eckp"), fitted.model, exp.vocab());
  write_text(m.output("history.json"), to_json(fitted.history).dump(2) + "\n");
  m.finish();

  const auto& best = fitted.history.epochs.at(fitted.history.best_epoch - 1);
  out << "best epoch " << fitted.history.best_epoch << " of " << fitted.history.stopped_epoch
      << ", validation accuracy " << fmt(best.val_accuracy) << '\n';
  return 0;
}

struct LoadedModel {
  Checkpoint ckpt;
  std::unique_ptr<ContextualStore> store;
};

LoadedModel load_model(const std::string& path, const Options& o) {
  LoadedModel lm{load_checkpoint(path), nullptr};
  if (!lm.ckpt.model.spec.uses_vocab()) {
    const auto choice = parse_embedding_choice(o.embeddings);
    if (choice.source != EmbeddingSource::contextual) {
      throw ConfigError(path + " is a contextual model; pass --embeddings contextual:PATH for the evaluated data");
    }
    lm.store = std::make_unique<ContextualStore>(load_contextual_files(choice.paths));
  }
  return lm;
}

int cmd_evaluate(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Dataset test = load_dataset(o.data);
  auto lm = load_model(o.checkpoints.at(0), o);
  const auto vocab = lm.ckpt.vocab ? &*lm.ckpt.vocab : nullptr;
  const auto e = evaluate_model(lm.ckpt.model, test, vocab, lm.store.get());
  note_truncation(err, "test", e.truncated, test.size());
  print_metrics(out, e.metrics);
  if (o.out.empty()) return 0;

  fs::create_directories(o.out);
  Manifest m("evaluate", args, o.out);
  m.dataset("test", o.data);
  m.dataset("checkpoint", o.checkpoints.at(0));
  write_text(m.output("metrics.json"), metrics_report(e.metrics, e.confusion).dump(2) + "\n");
  std::ostringstream preds;
  preds << "id\ttruth\tprediction\tprobabilities\n";
  const auto& space = LabelSpace::of(lm.ckpt.model.spec.task);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& p = e.predictions[i];
    preds << test.examples[i].id << '\t' << space.name(static_cast<std::size_t>(test.examples[i].label(space.task())))
          << '\t' << space.name(static_cast<std::size_t>(p.label)) << '\t';
    for (std::size_t k = 0; k < p.probabilities.size(); ++k) preds << (k ? "," : "") << p.probabilities[k];
    preds << '\n';
  }
  write_text(m.output("predictions.tsv"), preds.str());
  m.doc()["metrics"] = to_json(e.metrics);
  m.finish();
  return 0;
}

int cmd_runs(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (o.n_runs == 0) throw ConfigError("--n must be positive");
  const Dataset train = load_dataset(o.train);
  const Dataset test = load_dataset(o.test);
  const Experiment exp(experiment_config(o), train);
  note_truncation(err, "training", exp.truncated_train(), exp.train_split().size());

  json runs = json::array();
  std::vector<Metrics> all;
  for (std::size_t i = 0; i < o.n_runs; ++i) {
    const std::uint64_t seed = o.seed + i;
    auto fitted = exp.fit(seed);
    const auto e = exp.evaluate(fitted.model, test);
    if (i == 0) note_truncation(err, "test", e.truncated, test.size());
    err << "run " << i + 1 << "/" << o.n_runs << " seed " << seed << ": accuracy " << fmt(e.metrics.accuracy)
        << ", macro F1 " << fmt(e.metrics.macro_f1) << " (best epoch " << fitted.history.best_epoch << ")\n";
    all.push_back(e.metrics);
    runs.push_back({{"seed", seed},
                    {"best_epoch", fitted.history.best_epoch},
                    {"stopped_epoch", fitted.history.stopped_epoch},
                    {"metrics", metrics_report(e.metrics, e.confusion)}});
  }
  const Metrics avg = average_runs(all);
  print_metrics(out, avg);

  fs::create_directories(o.out);
  Manifest m("runs", args, o.out);
  m.dataset("train", o.train);
  m.dataset("test", o.test);
  record_inputs(m, exp.config());
  m.doc()["config"] = exp.config().to_json();
  for (std::size_t i = 0; i < o.n_runs; ++i) m.doc()["seeds"].push_back(o.seed + i);
  const json report{{"runs", runs}, {"averaged", to_json(avg)}};
  write_text(m.output("runs.json"), report.dump(2) + "\n");
  m.doc()["runs"] = runs;
  m.doc()["averaged"] = to_json(avg);
  m.finish();
  return 0;
}

int cmd_analyze(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const Dataset d = load_dataset(o.data);
  std::vector<int> preds1, preds2;
  for (const auto& path : o.checkpoints) {
    auto lm = load_model(path, o);
    const auto vocab = lm.ckpt.vocab ? &*lm.ckpt.vocab : nullptr;
    const auto e = evaluate_model(lm.ckpt.model, d, vocab, lm.store.get());
    auto& dst = lm.ckpt.model.spec.task == Task::task1 ? preds1 : preds2;
    if (!dst.empty()) throw ConfigError("two checkpoints for the same task");
    dst = predicted_labels(e.predictions);
  }
  const auto report = analyze(d, preds1, preds2);
  const auto text = to_text(report);
  out << text;

  fs::create_directories(o.out);
  Manifest m("analyze", args, o.out);
  m.dataset("data", o.data);
  for (std::size_t i = 0; i < o.checkpoints.size(); ++i) m.dataset("checkpoint" + std::to_string(i), o.checkpoints[i]);
  write_text(m.output("analysis.json"), to_json(report).dump(2) + "\n");
  write_text(m.output("analysis.txt"), text);
  m.finish();
  return 0;
}

int cmd_baseline(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const Dataset test = load_dataset(o.data);
  const Task task = task_of(o.task);
  std::optional<Dataset> ref;
  if (!o.reference.empty()) ref = load_dataset(o.reference);
  const Metrics m = majority_baseline(test, task, ref ? &*ref : nullptr);
  print_metrics(out, m);
  if (o.out.empty()) return 0;

  fs::create_directories(o.out);
  Manifest man("baseline", args, o.out);
  man.dataset("test", o.data);
  if (ref) man.dataset("reference", o.reference);
  write_text(man.output("metrics.json"), to_json(m).dump(2) + "\n");
  man.doc()["metrics"] = to_json(m);
  man.finish();
  return 0;
}

std::vector<std::string> with_out_dir(std::vector<std::string> argv, const std::string& dir) {
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out" && i + 1 < argv.size()) {
      argv[i + 1] = dir;
      return argv;
    }
    if (argv[i].starts_with("--out=")) {
      argv[i] = "--out=" + dir;
      return argv;
    }
  }
  argv.push_back("--out");
  argv.push_back(dir);
  return argv;
}

int cmd_rerun(const Options& o, std::ostream& out, std::ostream& err) {
  const json old = read_json(o.manifest);
  if (!old.contains("argv") || !old.contains("outputs")) throw FormatError(o.manifest + ": not a run manifest");
  for (const auto& [role, entry] : old.at("datasets").items()) {
    const std::string path = entry.at("path");
    if (file_hash(path) != entry.at("fnv1a64").get<std::string>()) {
      throw ConfigError("input '" + role + "' changed since the recorded run: " + path);
    }
  }
  const auto argv = with_out_dir(old.at("argv").get<std::vector<std::string>>(), o.out);
  const int rc = run(argv, out, err);
  if (rc != 0) return rc;

  bool same = true;
  for (const auto& [name, hash] : old.at("outputs").items()) {
    const auto now = file_hash(fs::path(o.out) / name);
    const bool ok = now == hash.get<std::string>();
    same = same && ok;
    out << (ok ? "identical  " : "DIFFERENT  ") << name << '\n';
  }
  if (!same) {
    err << "error: rerun did not reproduce the recorded outputs\n";
    return 1;
  }
  out << "reproduced " << old.at("outputs").size() << " outputs bit-identically\n";
  return 0;
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--task", o.task, "1 (sexism identification) or 2 (categorization)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  sub->add_option("--model", o.model, "nbow|lstm|bilstm|cnn|multicnn")
      ->check(CLI::IsMember({"nbow", "lstm", "bilstm", "cnn", "multicnn"}))
      ->capture_default_str();
  sub->add_option("--embeddings", o.embeddings, "learned | table:PATH | table-finetune:PATH | contextual:PATH[,PATH]")
      ->check(CLI::Validator(
          [](std::string& v) {
            try {
              parse_embedding_choice(v);
              return std::string();
            } catch (const Error& e) {
              return std::string(e.what());
            }
          },
          "EMBEDDINGS"))
      ->capture_default_str();
  sub->add_flag("--class-weights", o.class_weights, "weight the loss by inverse class frequency");
  sub->add_option("--seed", o.seed, "base seed; run i uses seed+i")->capture_default_str();
  sub->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--patience", o.patience)->capture_default_str();
  sub->add_option("--dropout", o.dropout)->check(CLI::Range(0.0, 0.99))->capture_default_str();
  sub->add_option("--lr", o.lr)->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--max-len", o.max_len)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--embedding-dim", o.embedding_dim, "width of learned embeddings")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--channels", o.channels, "filters per convolution width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--lstm-units", o.lstm_units)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--augment", o.train_aug, "EDA variants per training example (0 = off)")->capture_default_str();
  sub->add_option("--aug-rate", o.rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sub->add_option("--aug-ops", o.ops)->capture_default_str();
  sub->add_option("--lexicon", o.lexicon, "synonym lexicon (word<TAB>syn1,syn2)")->check(CLI::ExistingFile);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Sexism identification and categorization toolkit", "exist"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* pre = app.add_subcommand("preprocess", "normalize the text column of a TSV dataset");
  pre->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  pre->add_option("--out", o.out)->required();

  auto* aug = app.add_subcommand("augment", "append EDA variants to a dataset");
  aug->add_option("--data", o.data, "normalized dataset")->required()->check(CLI::ExistingFile);
  aug->add_option("--lexicon", o.lexicon)->check(CLI::ExistingFile);
  aug->add_option("--n-aug", o.n_aug)->capture_default_str();
  aug->add_option("--rate", o.rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  aug->add_option("--ops", o.ops, "comma list of sr, ri, rs")->capture_default_str();
  aug->add_option("--seed", o.seed)->capture_default_str();
  aug->add_option("--out", o.out)->required();

  auto* tr = app.add_subcommand("train", "train one model; writes a checkpoint and history");
  tr->add_option("--data", o.data, "training dataset (split 80/20 into train/validation)")
      ->required()
      ->check(CLI::ExistingFile);
  add_model_flags(tr, o);
  tr->add_option("--out", o.out)->required();

  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a labelled dataset");
  ev->add_option("--checkpoint", o.checkpoints)->required()->expected(1)->check(CLI::ExistingFile);
  ev->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  ev->add_option("--embeddings", o.embeddings, "contextual:PATH for contextual models");
  ev->add_option("--out", o.out);

  auto* rs = app.add_subcommand("runs", "N seeded train+evaluate cycles, averaged");
  rs->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  rs->add_option("--test", o.test)->required()->check(CLI::ExistingFile);
  rs->add_option("--n", o.n_runs)->check(CLI::PositiveNumber)->capture_default_str();
  add_model_flags(rs, o);
  rs->add_option("--out", o.out)->required();

  auto* an = app.add_subcommand("analyze", "error analysis of up to one checkpoint per task");
  an->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  an->add_option("--checkpoint", o.checkpoints)->check(CLI::ExistingFile);
  an->add_option("--embeddings", o.embeddings, "contextual:PATH for contextual models");
  an->add_option("--out", o.out)->required();

  auto* bl = app.add_subcommand("baseline", "majority-class metrics");
  bl->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
  bl->add_option("--task", o.task)->check(CLI::IsMember({1, 2}))->capture_default_str();
  bl->add_option("--reference", o.reference, "take the majority label from this dataset instead")
      ->check(CLI::ExistingFile);
  bl->add_option("--out", o.out);

  auto* rr = app.add_subcommand("rerun", "repeat a recorded command and compare its outputs");
  rr->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  rr->add_option("--out", o.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) return cmd_preprocess(o, args, out);
    if (aug->parsed()) return cmd_augment(o, args, out);
    if (tr->parsed()) return cmd_train(o, args, out, err);
    if (ev->parsed()) return cmd_evaluate(o, args, out, err);
    if (rs->parsed()) return cmd_runs(o, args, out, err);
    if (an->parsed()) return cmd_analyze(o, args, out);
    if (bl->parsed()) return cmd_baseline(o, args, out);
    if (rr->parsed()) return cmd_rerun(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace exist
