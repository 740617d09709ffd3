#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "headlab/buzzword.hpp"
#include "headlab/cli.hpp"
#include "headlab/corpus.hpp"
#include "headlab/error.hpp"
#include "headlab/observation.hpp"
#include "headlab/rouge.hpp"
#include "headlab/similarity.hpp"
#include "headlab/synth.hpp"
#include "headlab/text.hpp"
#include "headlab/training.hpp"
#include "headlab/vocab.hpp"

namespace py = pybind11;
using namespace headlab;

namespace {

py::dict rouge_dict(const RougeScore& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  return d;
}

py::dict post_dict(const Post& p) {
  py::dict d;
  d["id"] = p.id;
  d["user_id"] = p.user_id;
  d["timestamp"] = p.timestamp;
  d["headline"] = p.headline;
  d["article"] = p.article;
  d["likes"] = p.likes;
  return d;
}

std::vector<py::dict> corpus_posts(const Corpus& c) {
  std::vector<py::dict> out;
  out.reserve(c.size());
  for (const auto& p : c.posts()) out.push_back(post_dict(p));
  return out;
}

}  // namespace

PYBIND11_MODULE(_headlab, m) {
  m.doc() = "Headline corpus analytics and a miniature personalised headline generator";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "HeadlabError", PyExc_ValueError);

  m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));
  m.def("detokenize", [](const std::vector<std::string>& tokens) { return detokenize(tokens); }, py::arg("tokens"));

  m.def(
      "similarity",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b, const std::string& metric) {
        return SimilarityMetric::parse(metric)(a, b);
      },
      py::arg("a"), py::arg("b"), py::arg("metric") = "jaccard",
      "Similarity of two token sequences: jaccard, lcs, cosine, ngram or ngram:<n>.");

  m.def(
      "rouge_n",
      [](const std::vector<std::string>& cand, const std::vector<std::string>& ref, int n) {
        return rouge_dict(rouge_n(cand, ref, n));
      },
      py::arg("candidate"), py::arg("reference"), py::arg("n"));
  m.def(
      "rouge_l",
      [](const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
        return rouge_dict(rouge_l(cand, ref));
      },
      py::arg("candidate"), py::arg("reference"));

  m.def(
      "psi",
      [](const std::vector<std::vector<std::string>>& headlines, const std::string& metric) {
        return psi(headlines, SimilarityMetric::parse(metric));
      },
      py::arg("headlines"), py::arg("metric") = "jaccard");
  m.def(
      "popularity_index", [](const std::vector<std::int64_t>& likes) { return popularity_index(likes); },
      py::arg("likes"));

  m.def("lr_at", &lr_at, py::arg("step"), py::arg("warmup"), py::arg("peak") = 2e-3);

  m.def(
      "read_corpus", [](const std::string& path) { return corpus_posts(ingest(path)); }, py::arg("path"),
      "Posts of a JSONL corpus as dicts, in file order.");

  m.def(
      "synth_corpus",
      [](std::uint64_t seed, int n_users, int n_posts, int months) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_users = n_users;
        cfg.n_posts = n_posts;
        cfg.months = months;
        return to_jsonl(synth_corpus(cfg).corpus);
      },
      py::arg("seed") = 7, py::arg("n_users") = 50, py::arg("n_posts") = 6000, py::arg("months") = 24,
      "Synthetic corpus as JSONL text.");

  m.def(
      "buzzwords",
      [](const std::string& corpus_path, int step, std::int64_t tf_min, double tf_max) {
        const Corpus c = ingest(corpus_path);
        const Vocabulary v = build_vocab(c, tf_min, tf_max);
        const BuzzwordList list = generate_buzzwords(count_frequencies(c, v), v, step);
        std::vector<py::tuple> out;
        for (const auto& e : list.entries) out.push_back(py::make_tuple(e.token, std::string(stage_name(e.stage)), e.score));
        return out;
      },
      py::arg("corpus_path"), py::arg("step"), py::arg("tf_min") = 10, py::arg("tf_max") = 0.01,
      "(token, stage, score) entries for one relative time step.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
