#include "exist/checkpoint.hpp"

#include <fstream>

#include "exist/binary_io.hpp"

namespace exist {

void write_checkpoint(std::ostream& out, const Model<float>& model, const Vocab* vocab) {
  BinaryWriter w(out);
  w.bytes("ECKP");
  w.uint<std::uint32_t>(kCheckpointVersion);
  const auto spec = model.spec.to_config();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(spec.size()));
  w.bytes(spec);
  w.uint<std::uint64_t>(model.input_dim);
  if (vocab) {
    w.uint<std::uint64_t>(vocab->hash());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(vocab->size()));
    for (const auto& t : vocab->tokens()) w.short_string(t);
  } else {
    w.uint<std::uint64_t>(0);
    w.uint<std::uint32_t>(0);
  }
  const auto params = model.parameters();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.short_string(p->name);
    w.uint<std::uint8_t>(p->frozen ? 1 : 0);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape) w.uint<std::uint64_t>(d);
    w.f32s(p->value.data);
  }
  w.check();
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const Vocab* vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model, vocab);
}

Checkpoint read_checkpoint(std::istream& in) {
  BinaryReader r(in);
  if (r.bytes(4) != "ECKP") throw FormatError("bad checkpoint magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto spec = ModelSpec::from_config(r.bytes(r.uint<std::uint32_t>()));
  const auto input_dim = static_cast<std::size_t>(r.uint<std::uint64_t>());
  const auto hash = r.uint<std::uint64_t>();
  const auto vocab_size = r.uint<std::uint32_t>();

  std::optional<Vocab> vocab;
  if (vocab_size > 0) {
    std::vector<std::string> tokens;
    tokens.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) tokens.push_back(r.short_string());
    vocab = Vocab::from_tokens(std::move(tokens));
    if (vocab->hash() != hash) throw ConfigError("checkpoint vocab hash mismatch");
  }

  // Rebuild the architecture, then overwrite every parameter from the file.
  EmbeddingInit init;
  EmbeddingMatrix placeholder;
  if (spec.source == EmbeddingSource::learned) {
    init.vocab_size = vocab ? vocab->size() : 0;
  } else if (spec.source == EmbeddingSource::contextual) {
    init.contextual_dim = input_dim;
  } else {
    placeholder.rows = vocab ? vocab->size() : 0;
    placeholder.dim = input_dim;
    placeholder.values.assign(placeholder.rows * placeholder.dim, 0.0f);
    init.table = &placeholder;
  }
  Checkpoint ck{build_model<float>(spec, init, 0), std::move(vocab)};
  if (ck.model.input_dim != input_dim) throw FormatError("checkpoint input width does not match its spec");

  auto params = ck.model.parameters();
  const auto count = r.uint<std::uint32_t>();
  if (count != params.size()) throw FormatError("checkpoint parameter count does not match its spec");
  for (auto* p : params) {
    const auto name = r.short_string();
    if (name != p->name) throw FormatError("checkpoint parameter '" + name + "' where '" + p->name + "' expected");
    p->frozen = r.uint<std::uint8_t>() != 0;
    Shape shape(r.uint<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.uint<std::uint64_t>());
    if (shape != p->value.shape) throw FormatError("checkpoint parameter '" + name + "' has the wrong shape");
    r.f32s(p->value.data);
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace exist
