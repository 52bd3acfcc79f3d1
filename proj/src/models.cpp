#include "exist/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "exist/optim.hpp"

namespace exist {

std::string_view to_string(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::learned: return "learned";
    case EmbeddingSource::table_frozen: return "table";
    case EmbeddingSource::table_finetuned: return "table-finetune";
    case EmbeddingSource::contextual: return "contextual";
  }
  return "?";
}

std::string_view to_string(Head h) {
  switch (h) {
    case Head::nbow: return "nbow";
    case Head::lstm: return "lstm";
    case Head::bilstm: return "bilstm";
    case Head::cnn: return "cnn";
    case Head::multicnn: return "multicnn";
  }
  return "?";
}

EmbeddingSource parse_embedding_source(std::string_view s) {
  for (auto v : {EmbeddingSource::learned, EmbeddingSource::table_frozen, EmbeddingSource::table_finetuned,
                 EmbeddingSource::contextual}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown embedding source '" + std::string(s) + "'");
}

Head parse_head(std::string_view s) {
  for (auto v : {Head::nbow, Head::lstm, Head::bilstm, Head::cnn, Head::multicnn}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown model head '" + std::string(s) + "'");
}

std::vector<std::size_t> ModelSpec::conv_widths() const {
  if (head == Head::cnn) return {6};
  if (head == Head::multicnn) return {4, 6, 8};
  return {};
}

std::size_t ModelSpec::output_width() const { return task == Task::task1 ? 1 : LabelSpace::of(Task::task2).size(); }

void ModelSpec::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (hidden == 0) throw ConfigError("hidden width must be positive");
  if (source == EmbeddingSource::learned && embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  if ((head == Head::cnn || head == Head::multicnn) && conv_channels == 0) {
    throw ConfigError("conv_channels must be positive");
  }
  if ((head == Head::lstm || head == Head::bilstm) && lstm_units == 0) throw ConfigError("lstm_units must be positive");
  for (auto w : conv_widths()) {
    if (max_len < w) {
      throw ConfigError("max_len " + std::to_string(max_len) + " is shorter than filter width " + std::to_string(w));
    }
  }
}

std::string ModelSpec::to_config() const {
  std::ostringstream os;
  os.precision(17);
  os << "source=" << to_string(source) << '\n'
     << "embedding_path=" << embedding_path << '\n'
     << "embedding_dim=" << embedding_dim << '\n'
     << "head=" << to_string(head) << '\n'
     << "task=" << (task == Task::task1 ? 1 : 2) << '\n'
     << "dropout_rate=" << dropout_rate << '\n'
     << "conv_channels=" << conv_channels << '\n'
     << "hidden=" << hidden << '\n'
     << "lstm_units=" << lstm_units << '\n'
     << "use_class_weights=" << (use_class_weights ? 1 : 0) << '\n'
     << "max_len=" << max_len << '\n';
  return os.str();
}

ModelSpec ModelSpec::from_config(std::string_view text) {
  ModelSpec s;
  std::istringstream is{std::string(text)};
  std::string line;
  auto to_size = [](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const auto n = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ConfigError("bad integer for " + key + ": '" + v + "'");
    }
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("model spec line without '=': " + line);
    const std::string key = line.substr(0, eq), v = line.substr(eq + 1);
    if (key == "source") s.source = parse_embedding_source(v);
    else if (key == "embedding_path") s.embedding_path = v;
    else if (key == "embedding_dim") s.embedding_dim = to_size(key, v);
    else if (key == "head") s.head = parse_head(v);
    else if (key == "task") {
      if (v == "1") s.task = Task::task1;
      else if (v == "2") s.task = Task::task2;
      else throw ConfigError("task must be 1 or 2");
    } else if (key == "dropout_rate") {
      try {
        s.dropout_rate = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError("bad dropout_rate '" + v + "'");
      }
    } else if (key == "conv_channels") s.conv_channels = to_size(key, v);
    else if (key == "hidden") s.hidden = to_size(key, v);
    else if (key == "lstm_units") s.lstm_units = to_size(key, v);
    else if (key == "use_class_weights") s.use_class_weights = to_size(key, v) != 0;
    else if (key == "max_len") s.max_len = to_size(key, v);
    else throw ConfigError("unknown model spec key '" + key + "'");
  }
  s.validate();
  return s;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> out;
  if (has_embedding) out.push_back(&embedding);
  for (std::size_t i = 0; i < conv_filters.size(); ++i) {
    out.push_back(&conv_filters[i]);
    out.push_back(&conv_biases[i]);
  }
  if (spec.head == Head::lstm || spec.head == Head::bilstm) {
    out.insert(out.end(), {&lstm_fwd.wx, &lstm_fwd.wh, &lstm_fwd.b});
  }
  if (spec.head == Head::bilstm) out.insert(out.end(), {&lstm_bwd.wx, &lstm_bwd.wh, &lstm_bwd.b});
  out.insert(out.end(), {&hidden_w, &hidden_b, &out_w, &out_b});
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Model<T>::parameters() const {
  auto mut = const_cast<Model<T>*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::size_t Model<T>::head_width() const {
  switch (spec.head) {
    case Head::nbow: return input_dim;
    case Head::lstm: return spec.lstm_units;
    case Head::bilstm: return 2 * spec.lstm_units;
    case Head::cnn:
    case Head::multicnn: return spec.conv_channels * spec.conv_widths().size();
  }
  return 0;
}

template <typename T>
Var Model<T>::forward(Tape<T>& tape, const Batch<T>& batch, bool training, Rng& rng) {
  Var x;
  if (spec.uses_vocab()) {
    if (batch.ids.size() != batch.size * batch.len) throw ConfigError("batch has no token ids for a vocab model");
    x = nn::embedding(tape, embedding, batch.ids, batch.size, batch.len);
  } else {
    if (batch.features.rank() != 3 || batch.features.dim(2) != input_dim) {
      throw ConfigError("contextual batch width does not match the model input width");
    }
    x = tape.constant(batch.features);
  }

  Var h;
  switch (spec.head) {
    case Head::nbow: h = nn::masked_mean(tape, x, batch.lengths); break;
    case Head::lstm: h = nn::lstm(tape, x, lstm_fwd, static_cast<LstmLayer<T>*>(nullptr), batch.lengths); break;
    case Head::bilstm: h = nn::lstm(tape, x, lstm_fwd, &lstm_bwd, batch.lengths); break;
    case Head::cnn:
    case Head::multicnn: {
      std::vector<Var> pooled;
      for (std::size_t i = 0; i < conv_filters.size(); ++i) {
        const Var feature_map = nn::relu(tape, nn::conv1d(tape, x, conv_filters[i], conv_biases[i]));
        pooled.push_back(nn::max_pool_time(tape, feature_map));
      }
      h = pooled.size() == 1 ? pooled[0] : nn::concat(tape, std::span<const Var>(pooled));
      break;
    }
  }
  h = nn::dropout(tape, h, spec.dropout_rate, rng, training);
  h = nn::relu(tape, nn::dense(tape, h, hidden_w, hidden_b));
  h = nn::dropout(tape, h, spec.dropout_rate, rng, training);
  return nn::dense(tape, h, out_w, out_b);
}

namespace {

template <typename T>
Tensor<T> glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
LstmLayer<T> make_lstm(const std::string& prefix, std::size_t in, std::size_t units, Rng& rng) {
  LstmLayer<T> l;
  l.wx = Parameter<T>(prefix + ".wx", glorot<T>({in, 4 * units}, in, 4 * units, rng));
  l.wh = Parameter<T>(prefix + ".wh", glorot<T>({units, 4 * units}, units, 4 * units, rng));
  l.b = Parameter<T>(prefix + ".b", Tensor<T>({4 * units}));
  return l;
}

}  // namespace

template <typename T>
Model<T> build_model(const ModelSpec& spec, const EmbeddingInit& init, std::uint64_t seed) {
  spec.validate();
  Rng rng(splitmix64(seed ^ 0x6d6f64656c696e69ULL));
  Model<T> m;
  m.spec = spec;

  switch (spec.source) {
    case EmbeddingSource::learned: {
      if (init.vocab_size < 2) throw ConfigError("learned embeddings need a vocabulary");
      m.input_dim = spec.embedding_dim;
      Tensor<T> table({init.vocab_size, spec.embedding_dim});
      for (std::size_t i = spec.embedding_dim; i < table.size(); ++i) {
        table[i] = static_cast<T>(rng.uniform(-0.05, 0.05));
      }
      m.has_embedding = true;
      m.embedding = Parameter<T>("embedding", std::move(table));
      break;
    }
    case EmbeddingSource::table_frozen:
    case EmbeddingSource::table_finetuned: {
      if (!init.table) throw ConfigError("table embeddings need a pretrained matrix");
      if (init.table->rows < 2 || init.table->dim == 0) throw ConfigError("pretrained matrix is empty");
      m.input_dim = init.table->dim;
      Tensor<T> table({init.table->rows, init.table->dim});
      for (std::size_t i = init.table->dim; i < table.size(); ++i) table[i] = static_cast<T>(init.table->values[i]);
      m.has_embedding = true;
      m.embedding =
          Parameter<T>("embedding", std::move(table), spec.source == EmbeddingSource::table_frozen);
      break;
    }
    case EmbeddingSource::contextual:
      if (init.contextual_dim == 0) throw ConfigError("contextual source needs the store dimension");
      m.input_dim = init.contextual_dim;
      break;
  }

  const std::size_t d = m.input_dim;
  for (std::size_t w : spec.conv_widths()) {
    const std::size_t c = spec.conv_channels;
    m.conv_filters.emplace_back("conv" + std::to_string(w) + ".filters", glorot<T>({c, w, d}, w * d, w * c, rng));
    m.conv_biases.emplace_back("conv" + std::to_string(w) + ".bias", Tensor<T>({c}));
  }
  if (spec.head == Head::lstm || spec.head == Head::bilstm) m.lstm_fwd = make_lstm<T>("lstm.fwd", d, spec.lstm_units, rng);
  if (spec.head == Head::bilstm) m.lstm_bwd = make_lstm<T>("lstm.bwd", d, spec.lstm_units, rng);

  const std::size_t hw = m.head_width(), out = spec.output_width();
  m.hidden_w = Parameter<T>("hidden.w", glorot<T>({hw, spec.hidden}, hw, spec.hidden, rng));
  m.hidden_b = Parameter<T>("hidden.b", Tensor<T>({spec.hidden}));
  m.out_w = Parameter<T>("output.w", glorot<T>({spec.hidden, out}, spec.hidden, out, rng));
  m.out_b = Parameter<T>("output.b", Tensor<T>({out}));
  return m;
}

template <typename To, typename From>
Model<To> model_cast(const Model<From>& m) {
  auto cast_param = [](const Parameter<From>& p) {
    Tensor<To> v(p.value.shape);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<To>(p.value[i]);
    return Parameter<To>(p.name, std::move(v), p.frozen);
  };
  auto cast_lstm = [&](const LstmLayer<From>& l) {
    return LstmLayer<To>{cast_param(l.wx), cast_param(l.wh), cast_param(l.b)};
  };
  Model<To> out;
  out.spec = m.spec;
  out.input_dim = m.input_dim;
  out.has_embedding = m.has_embedding;
  out.embedding = cast_param(m.embedding);
  for (const auto& p : m.conv_filters) out.conv_filters.push_back(cast_param(p));
  for (const auto& p : m.conv_biases) out.conv_biases.push_back(cast_param(p));
  out.lstm_fwd = cast_lstm(m.lstm_fwd);
  out.lstm_bwd = cast_lstm(m.lstm_bwd);
  out.hidden_w = cast_param(m.hidden_w);
  out.hidden_b = cast_param(m.hidden_b);
  out.out_w = cast_param(m.out_w);
  out.out_b = cast_param(m.out_b);
  return out;
}

EncodedSet encode_dataset(const Dataset& d, const Vocab& vocab, Task task, std::size_t max_len,
                          const PreprocessConfig& pre) {
  if (max_len == 0) throw ConfigError("max_len must be positive");
  EncodedSet s;
  s.max_len = max_len;
  s.ids.reserve(d.size());
  for (const auto& e : d.examples) {
    const auto tokens = preprocess_tokens(e.text, pre);
    if (tokens.size() > max_len) ++s.truncated;
    s.ids.push_back(encode(tokens, vocab, max_len));
    s.lengths.push_back(std::min(tokens.size(), max_len));
    s.labels.push_back(e.label(task));
  }
  return s;
}

EncodedSet contextual_dataset(const Dataset& d, const ContextualStore& store, Task task, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("max_len must be positive");
  EncodedSet s;
  s.max_len = max_len;
  s.contextual_dim = store.dim();
  for (const auto& e : d.examples) {
    const auto* rec = store.find(e.id);
    if (!rec) throw ConfigError("no contextual embeddings for example '" + e.id + "'");
    if (rec->length > max_len) ++s.truncated;
    s.contextual.push_back(rec);
    s.lengths.push_back(std::min(rec->length, max_len));
    s.labels.push_back(e.label(task));
  }
  return s;
}

template <typename T>
Batch<T> make_batch(const EncodedSet& set, std::span<const std::size_t> indices) {
  Batch<T> b;
  b.size = indices.size();
  b.len = set.max_len;
  if (set.is_contextual()) {
    const std::size_t dim = set.contextual_dim;
    b.features = Tensor<T>({b.size, b.len, dim});
    for (std::size_t i = 0; i < b.size; ++i) {
      const auto* rec = set.contextual[indices[i]];
      const std::size_t n = set.lengths[indices[i]] * dim;
      for (std::size_t k = 0; k < n; ++k) b.features[i * b.len * dim + k] = static_cast<T>(rec->values[k]);
    }
  } else {
    b.ids.reserve(b.size * b.len);
    for (auto idx : indices) b.ids.insert(b.ids.end(), set.ids[idx].begin(), set.ids[idx].end());
  }
  for (auto idx : indices) {
    b.lengths.push_back(set.lengths[idx]);
    b.targets.push_back(set.labels[idx]);
  }
  return b;
}

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
}

namespace {

template <typename T>
int label_from_logits(const T* z, std::size_t k) {
  if (k == 1) return z[0] >= T(0) ? 1 : 0;
  return static_cast<int>(std::max_element(z, z + k) - z);
}

}  // namespace

TrainHistory train(Model<float>& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& cfg, std::span<const double> class_weights, const ValidationHook& hook) {
  cfg.validate();
  if (train_set.size() == 0) throw SizeError("training set is empty");
  if (val_set.size() == 0 && !hook) throw SizeError("validation set is empty");
  model.spec.dropout_rate = cfg.dropout_rate;

  Rng rng(splitmix64(cfg.seed ^ 0x747261696e696e67ULL));
  Adam<float> adam(AdamConfig{cfg.learning_rate});
  auto params = model.parameters();
  zero_grad<float>(params);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  double best_acc = -std::numeric_limits<double>::infinity();
  std::vector<Tensor<float>> best_values;
  const std::size_t k = model.spec.output_width();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto batch = make_batch<float>(train_set, std::span(order).subspan(start, end - start));
      Tape<float> tape;
      const Var logits = model.forward(tape, batch, true, rng);
      const Var loss = nn::cross_entropy_with_logits(tape, logits, batch.targets, class_weights);
      tape.backward(loss);
      adam.step(params);
      zero_grad<float>(params);

      loss_sum += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(batch.size);
      const auto& z = tape.value(logits);
      for (std::size_t b = 0; b < batch.size; ++b) {
        if (label_from_logits(&z[b * k], k) == batch.targets[b]) ++correct;
      }
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (hook) {
      stats.val_accuracy = hook(model, epoch);
    } else {
      const auto preds = predicted_labels(predict(model, val_set));
      std::size_t ok = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == val_set.labels[i] ? 1 : 0;
      stats.val_accuracy = static_cast<double>(ok) / static_cast<double>(preds.size());
    }
    history.epochs.push_back(stats);
    history.stopped_epoch = epoch;

    if (stats.val_accuracy > best_acc) {
      best_acc = stats.val_accuracy;
      history.best_epoch = epoch;
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
    }
    if (epoch - history.best_epoch >= cfg.patience) break;
  }

  for (std::size_t i = 0; i < params.size() && !best_values.empty(); ++i) params[i]->value = best_values[i];
  return history;
}

template <typename T>
std::vector<Prediction> predict(Model<T>& model, const EncodedSet& set, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (set.size() > 0 && set.is_contextual() == model.spec.uses_vocab()) {
    throw ConfigError("encoded inputs do not match the model's embedding source");
  }
  if (set.is_contextual() && set.contextual_dim != model.input_dim) {
    throw ConfigError("contextual width does not match the model input width");
  }
  std::vector<Prediction> out;
  out.reserve(set.size());
  Rng unused(0);
  const std::size_t k = model.spec.output_width();
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    const auto batch = make_batch<T>(set, idx);
    Tape<T> tape;
    const Var logits = model.forward(tape, batch, false, unused);
    const auto& z = tape.value(logits);
    if (k == 1) {
      for (std::size_t b = 0; b < batch.size; ++b) {
        const double p = static_cast<double>(sigmoid(z[b]));
        out.push_back({{p}, p >= 0.5 ? 1 : 0});
      }
    } else {
      const auto probs = softmax_rows(z);
      for (std::size_t b = 0; b < batch.size; ++b) {
        Prediction pr;
        pr.probabilities.assign(probs.data.begin() + static_cast<std::ptrdiff_t>(b * k),
                                probs.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * k));
        pr.label = static_cast<int>(std::max_element(pr.probabilities.begin(), pr.probabilities.end()) -
                                    pr.probabilities.begin());
        out.push_back(std::move(pr));
      }
    }
  }
  return out;
}

std::vector<int> predicted_labels(std::span<const Prediction> predictions) {
  std::vector<int> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.label);
  return out;
}

ClassWeights compute_class_weights(const Dataset& train_set, Task task) {
  if (train_set.empty()) throw SizeError("class weights of an empty dataset");
  const std::size_t k = LabelSpace::of(task).size();
  std::vector<std::size_t> counts(k, 0);
  for (const auto& e : train_set.examples) ++counts[static_cast<std::size_t>(e.label(task))];
  ClassWeights cw{task, std::vector<double>(k, 0.0)};
  const double n = static_cast<double>(train_set.size());
  double max_present = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    cw.weights[c] = n / (static_cast<double>(k) * static_cast<double>(counts[c]));
    max_present = std::max(max_present, cw.weights[c]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) cw.weights[c] = max_present;
  }
  return cw;
}

GradCheckResult check_model_gradients(Model<double>& model, const Batch<double>& batch,
                                      std::span<const double> class_weights, const GradCheckOptions& opts) {
  auto params = model.parameters();
  auto loss = [&](bool with_grad) {
    Rng rng(opts.seed);
    Tape<double> tape;
    const Var logits = model.forward(tape, batch, true, rng);
    const Var l = nn::cross_entropy_with_logits(tape, logits, batch.targets, class_weights);
    if (with_grad) tape.backward(l);
    return tape.value(l)[0];
  };
  return gradient_check(params, loss, opts);
}

template class Model<float>;
template class Model<double>;
template Model<float> build_model<float>(const ModelSpec&, const EmbeddingInit&, std::uint64_t);
template Model<double> build_model<double>(const ModelSpec&, const EmbeddingInit&, std::uint64_t);
template Model<double> model_cast<double, float>(const Model<float>&);
template Model<float> model_cast<float, double>(const Model<double>&);
template Batch<float> make_batch<float>(const EncodedSet&, std::span<const std::size_t>);
template Batch<double> make_batch<double>(const EncodedSet&, std::span<const std::size_t>);
template std::vector<Prediction> predict<float>(Model<float>&, const EncodedSet&, std::size_t);
template std::vector<Prediction> predict<double>(Model<double>&, const EncodedSet&, std::size_t);

}  // namespace exist
