#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "exist/app.hpp"
#include "exist/augment.hpp"
#include "exist/corpus.hpp"
#include "exist/embed.hpp"
#include "exist/errors.hpp"
#include "exist/eval.hpp"
#include "exist/preprocess.hpp"

namespace py = pybind11;
using namespace exist;

namespace {

Task task_of(int t) {
  if (t != 1 && t != 2) throw ConfigError("task must be 1 or 2");
  return t == 1 ? Task::task1 : Task::task2;
}

py::dict example_dict(const Example& e) {
  py::dict d;
  d["id"] = e.id;
  d["source"] = std::string(source_name(e.source));
  d["text"] = e.text;
  d["task1"] = LabelSpace::of(Task::task1).name(static_cast<std::size_t>(e.task1));
  d["task2"] = LabelSpace::of(Task::task2).name(static_cast<std::size_t>(e.task2));
  return d;
}

py::list dataset_list(const Dataset& d) {
  py::list out;
  for (const auto& e : d.examples) out.append(example_dict(e));
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_precision"] = m.macro_precision;
  d["macro_recall"] = m.macro_recall;
  d["macro_f1"] = m.macro_f1;
  d["micro_precision"] = m.micro_precision;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sexism classification toolkit";

  auto base = py::register_exception<Error>(m, "ExistError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<LabelError>(m, "LabelError", base.ptr());
  py::register_exception<DuplicateError>(m, "DuplicateError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("normalize", [](const std::string& text) { return normalize(text); }, py::arg("text"));
  m.def("preprocess_tokens", [](const std::string& text) { return preprocess_tokens(text); }, py::arg("text"));

  m.def("load_dataset", [](const std::filesystem::path& p) { return dataset_list(load_dataset(p)); },
        py::arg("path"), "Examples of a TSV file as dicts with string labels.");
  m.def("label_names", [](int task) {
    const auto labels = LabelSpace::of(task_of(task)).labels();
    return std::vector<std::string>(labels.begin(), labels.end());
  }, py::arg("task"));

  m.def("metrics", [](const std::vector<int>& truth, const std::vector<int>& preds, std::size_t k) {
    const auto cm = confusion_matrix(truth, preds, k);
    py::dict d = metrics_dict(exist::metrics(cm));
    std::vector<std::vector<std::uint64_t>> rows(k, std::vector<std::uint64_t>(k));
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t p = 0; p < k; ++p) rows[t][p] = cm.at(t, p);
    d["confusion"] = rows;
    return d;
  }, py::arg("truth"), py::arg("preds"), py::arg("k"));

  m.def("majority_baseline", [](const std::filesystem::path& data, int task,
                                const std::optional<std::filesystem::path>& reference) {
    const auto test = load_dataset(data);
    if (!reference) return metrics_dict(majority_baseline(test, task_of(task)));
    const auto ref = load_dataset(*reference);
    return metrics_dict(majority_baseline(test, task_of(task), &ref));
  }, py::arg("data"), py::arg("task"), py::arg("reference") = py::none());

  m.def("augment", [](const std::filesystem::path& data, const std::filesystem::path& lexicon, std::size_t n_aug,
                      double rate, const std::string& ops, std::uint64_t seed) {
    EdaConfig cfg;
    cfg.n_aug = n_aug;
    cfg.rate = rate;
    cfg.ops = parse_eda_ops(ops);
    cfg.seed = seed;
    auto d = load_dataset(data);
    for (auto& e : d.examples) e.text = normalize(e.text);
    return dataset_list(augment_dataset(d, cfg, Lexicon::load(lexicon)));
  }, py::arg("data"), py::arg("lexicon"), py::arg("n_aug") = 8, py::arg("rate") = 0.05,
     py::arg("ops") = "sr,ri,rs", py::arg("seed") = 0);

  m.def("read_contextual", [](const std::filesystem::path& p) {
    const auto store = load_contextual(p);
    py::dict out;
    for (const auto& r : store.records()) {
      std::vector<std::vector<float>> rows(r.length);
      for (std::size_t t = 0; t < r.length; ++t)
        rows[t].assign(r.values.begin() + static_cast<std::ptrdiff_t>(t * store.dim()),
                       r.values.begin() + static_cast<std::ptrdiff_t>((t + 1) * store.dim()));
      out[py::str(r.id)] = rows;
    }
    return py::make_tuple(store.dim(), out);
  }, py::arg("path"), "Returns (dim, {id: [[float] * dim] * tokens}).");

  m.def("write_contextual", [](const std::filesystem::path& p, std::uint32_t dim,
                               const std::vector<std::pair<std::string, std::vector<std::vector<float>>>>& records) {
    ContextualStore store(dim);
    for (const auto& [id, rows] : records) {
      std::vector<float> flat;
      for (const auto& row : rows) {
        if (row.size() != dim) throw ShapeError("row width differs from dim for " + id);
        flat.insert(flat.end(), row.begin(), row.end());
      }
      store.add(id, rows.size(), std::move(flat));
    }
    save_contextual(p, store);
  }, py::arg("path"), py::arg("dim"), py::arg("records"));

  m.def("file_hash", [](const std::filesystem::path& p) { return file_hash(p); }, py::arg("path"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a command-line invocation in process; returns (exit_code, stdout, stderr).");
}
