#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exist/corpus.hpp"
#include "exist/embed.hpp"
#include "exist/gradcheck.hpp"
#include "exist/preprocess.hpp"
#include "exist/rng.hpp"
#include "exist/tape.hpp"

namespace exist {

enum class EmbeddingSource : std::uint8_t { learned, table_frozen, table_finetuned, contextual };
enum class Head : std::uint8_t { nbow, lstm, bilstm, cnn, multicnn };

std::string_view to_string(EmbeddingSource s);
std::string_view to_string(Head h);
EmbeddingSource parse_embedding_source(std::string_view s);
Head parse_head(std::string_view s);

/// Declarative architecture: embedding source -> head -> dropout -> dense(hidden)
/// -> ReLU -> dropout -> dense(output) with sigmoid (task1) or softmax (task2).
struct ModelSpec {
  EmbeddingSource source = EmbeddingSource::learned;
  std::string embedding_path;  // table file or CEMB file; recorded for provenance
  std::size_t embedding_dim = 100;  // width of the learned table
  Head head = Head::multicnn;
  Task task = Task::task1;
  double dropout_rate = 0.2;
  std::size_t conv_channels = 100;
  std::size_t hidden = 100;
  std::size_t lstm_units = 100;
  bool use_class_weights = false;
  std::size_t max_len = 128;

  /// {6} for cnn, {4, 6, 8} for multicnn, empty otherwise.
  std::vector<std::size_t> conv_widths() const;
  /// 1 for task1 (sigmoid), 6 for task2 (softmax).
  std::size_t output_width() const;
  bool uses_vocab() const { return source != EmbeddingSource::contextual; }

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  /// key=value lines, one per field, in a fixed order.
  std::string to_config() const;
  static ModelSpec from_config(std::string_view text);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// What the embedding layer is built from.
struct EmbeddingInit {
  std::size_t vocab_size = 0;                // learned source
  const EmbeddingMatrix* table = nullptr;    // table sources
  std::size_t contextual_dim = 0;            // contextual source
};

/// One mini-batch. Token sources fill `ids` (size*len); the contextual source
/// fills `features` [size x len x D]. lengths[b] counts the real (non-PAD) steps.
template <typename T>
struct Batch {
  std::size_t size = 0;
  std::size_t len = 0;
  std::vector<std::int32_t> ids;
  Tensor<T> features;
  std::vector<std::size_t> lengths;
  std::vector<int> targets;
};

template <typename T>
class Model {
 public:
  ModelSpec spec;
  std::size_t input_dim = 0;

  bool has_embedding = false;
  Parameter<T> embedding;  // [V x D]
  std::vector<Parameter<T>> conv_filters;  // [C x w x D], one per width
  std::vector<Parameter<T>> conv_biases;
  LstmLayer<T> lstm_fwd;
  LstmLayer<T> lstm_bwd;
  Parameter<T> hidden_w, hidden_b, out_w, out_b;

  /// Every parameter in a fixed order (frozen ones included).
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;

  /// Records the forward pass and returns the logits [B x output_width].
  Var forward(Tape<T>& tape, const Batch<T>& batch, bool training, Rng& rng);

  /// Width of the head output fed to the first dense layer.
  std::size_t head_width() const;
};

/// Builds and initializes a model: Glorot-uniform kernels, zero biases,
/// uniform(-0.05, 0.05) learned embeddings with a zero PAD row.
template <typename T>
Model<T> build_model(const ModelSpec& spec, const EmbeddingInit& init, std::uint64_t seed);

/// Element-wise precision conversion (e.g. float training model -> double for gradient checks).
template <typename To, typename From>
Model<To> model_cast(const Model<From>& m);

/// A dataset encoded for one model input path.
struct EncodedSet {
  std::size_t max_len = 0;
  std::vector<std::vector<std::int32_t>> ids;                 // token sources
  std::vector<const ContextualStore::Record*> contextual;     // contextual source
  std::uint32_t contextual_dim = 0;
  std::vector<std::size_t> lengths;
  std::vector<int> labels;
  std::size_t truncated = 0;  // examples cut at max_len

  std::size_t size() const { return labels.size(); }
  bool is_contextual() const { return !contextual.empty(); }
};

/// Normalizes, tokenizes and encodes each example's text.
EncodedSet encode_dataset(const Dataset& d, const Vocab& vocab, Task task, std::size_t max_len,
                          const PreprocessConfig& pre = {});

/// Looks up every example id in the store (ConfigError if absent). The store must outlive the result.
EncodedSet contextual_dataset(const Dataset& d, const ContextualStore& store, Task task, std::size_t max_len);

template <typename T>
Batch<T> make_batch(const EncodedSet& set, std::span<const std::size_t> indices);

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t max_epochs = 50;
  std::size_t patience = 15;
  std::size_t batch_size = 32;
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;  // epochs[i] is epoch i + 1
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
};

/// Replaces the validation-accuracy computation after each epoch (1-based).
using ValidationHook = std::function<double(Model<float>& model, std::size_t epoch)>;

/// Mini-batch Adam with early stopping on validation accuracy. Stops once
/// `epoch - best_epoch >= patience` or at max_epochs, then restores the
/// best-epoch weights. cfg.dropout_rate is written into model.spec.
TrainHistory train(Model<float>& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& cfg, std::span<const double> class_weights = {},
                   const ValidationHook& hook = {});

struct Prediction {
  std::vector<double> probabilities;  // {p(sexist)} for task1, 6-way distribution for task2
  int label = 0;
};

/// Inference (dropout off). task1: sexist iff p >= 0.5; task2: argmax, ties to the lowest index.
template <typename T>
std::vector<Prediction> predict(Model<T>& model, const EncodedSet& set, std::size_t batch_size = 64);

std::vector<int> predicted_labels(std::span<const Prediction> predictions);

/// Balanced weights N / (K * N_c); a class absent from the set gets the largest present weight.
struct ClassWeights {
  Task task = Task::task1;
  std::vector<double> weights;  // indexed by LabelSpace order
};
ClassWeights compute_class_weights(const Dataset& train_set, Task task);

/// Model gradients on one batch against finite differences (64-bit). Dropout
/// stays active with a mask that is identical on every evaluation.
GradCheckResult check_model_gradients(Model<double>& model, const Batch<double>& batch,
                                      std::span<const double> class_weights = {}, const GradCheckOptions& opts = {});

}  // namespace exist
