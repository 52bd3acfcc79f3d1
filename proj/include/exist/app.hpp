#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exist/augment.hpp"
#include "exist/corpus.hpp"
#include "exist/embed.hpp"
#include "exist/eval.hpp"
#include "exist/models.hpp"

namespace exist {

/// Parsed `--embeddings` value: `learned`, `table:PATH`, `table-finetune:PATH`
/// or `contextual:PATH[,PATH...]` (several CEMB files are merged).
struct EmbeddingChoice {
  EmbeddingSource source = EmbeddingSource::learned;
  std::vector<std::string> paths;

  std::string to_string() const;
};
EmbeddingChoice parse_embedding_choice(std::string_view text);

/// Merges CEMB files into one store; ids must be unique across files.
ContextualStore load_contextual_files(std::span<const std::string> paths);

struct ExperimentConfig {
  ModelSpec spec;
  TrainConfig train;
  EmbeddingChoice embeddings;
  // EDA on the training split only; off when n_aug is 0.
  std::size_t n_aug = 0;
  double aug_rate = 0.05;
  std::vector<EdaOp> aug_ops = {EdaOp::synonym_replacement, EdaOp::random_insertion, EdaOp::random_swap};
  std::string lexicon_path;

  nlohmann::json to_json() const;
};

struct FittedModel {
  Model<float> model;
  TrainHistory history;
};

struct Evaluation {
  std::vector<Prediction> predictions;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::size_t truncated = 0;
};

/// Encodes `d` for the model's input path; `vocab` for token sources, `store` for contextual.
EncodedSet encode_for(const ModelSpec& spec, const Dataset& d, const Vocab* vocab, const ContextualStore* store);

Evaluation evaluate_model(Model<float>& model, const Dataset& test, const Vocab* vocab, const ContextualStore* store);

/// Fixed data preparation shared by every seeded run: 80/20 split, optional
/// augmentation of the training part, vocabulary, embedding tables.
class Experiment {
 public:
  Experiment(ExperimentConfig cfg, const Dataset& train_data);

  const ExperimentConfig& config() const { return cfg_; }
  const Dataset& train_split() const { return train_; }
  const Dataset& val_split() const { return val_; }
  const Vocab* vocab() const { return cfg_.spec.uses_vocab() ? &vocab_ : nullptr; }
  const ContextualStore* store() const { return store_.get(); }
  std::size_t truncated_train() const { return train_enc_.truncated; }

  FittedModel fit(std::uint64_t seed) const;
  Evaluation evaluate(Model<float>& model, const Dataset& test) const;

 private:
  ExperimentConfig cfg_;
  Dataset train_, val_;
  Vocab vocab_;
  std::optional<EmbeddingMatrix> table_;
  std::unique_ptr<ContextualStore> store_;
  EncodedSet train_enc_, val_enc_;
  std::vector<double> class_weights_;
};

nlohmann::json to_json(const TrainHistory& h);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// CLI entry point. Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace exist
